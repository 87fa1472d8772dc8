fn main() {
    std::process::exit(multisaddle::cli::run());
}
