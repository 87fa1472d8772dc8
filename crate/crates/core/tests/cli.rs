use std::path::Path;
use std::process::{Command, Output};

fn msp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msp")).args(args).output().expect("run msp")
}

fn msp_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msp"))
        .args(args)
        .env("MSP_THREADS", threads)
        .output()
        .expect("run msp")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn eig_bounds_writes_csv_within_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.csv");
    let o = msp(&["eig-bounds", "--k", "2", "--trials", "5", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,trial,preconditioner,eigenvalue"));
    let mut trials = std::collections::BTreeSet::new();
    let c = |n: f64, d: f64| 2.0 * (n * std::f64::consts::PI / d).cos();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0], "2");
        trials.insert(f[1].parse::<usize>().unwrap());
        let x: f64 = f[3].parse().unwrap();
        if f[2] == "PD" {
            let inside = (-c(1.0, 5.0) - 1e-8..=c(3.0, 5.0) + 1e-8).contains(&x)
                || (c(3.0, 7.0) - 1e-8..=c(1.0, 7.0) + 1e-8).contains(&x);
            assert!(inside, "{x}");
        }
    }
    assert_eq!(trials.len(), 5);
}

#[test]
fn iters_random_k1_mean_in_band() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("i.csv");
    let o = msp(&["iters-random", "--k", "1", "--trials", "10", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = read(&out);
    assert!(text.starts_with("k,preconditioner,trial,iterations,dof,converged\n"));
    let its: Vec<f64> = text
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(1) == Some("Pk"))
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(its.len(), 10);
    let mean = its.iter().sum::<f64>() / its.len() as f64;
    assert!((6.0..=12.0).contains(&mean), "mean {mean}");
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let args = ["iters-random", "--k", "2,3", "--trials", "6", "--seed", "7"];
    let a = msp_threads(&args, "1");
    let b = msp_threads(&args, "3");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let pde = ["pde-double", "--h", "2^-3", "--alpha", "1,1e-2"];
    assert_eq!(msp(&pde).stdout, msp(&pde).stdout);
}

#[test]
fn timings_column_is_opt_in() {
    let plain = msp(&["pde-double", "--h", "0.125", "--alpha", "1"]);
    let timed = msp(&["pde-double", "--h", "0.125", "--alpha", "1", "--timings"]);
    let plain = String::from_utf8(plain.stdout).unwrap();
    let timed = String::from_utf8(timed.stdout).unwrap();
    assert_eq!(
        plain.lines().next(),
        Some("problem,h,alpha,lambda,rho,cheb_m,preconditioner,iterations,converged,dof")
    );
    assert!(timed.lines().next().unwrap().ends_with(",seconds"));
    assert_eq!(plain.lines().count(), 3);
    assert_eq!(timed.lines().count(), 3);
}

#[test]
fn pde_quadruple_small_grid() {
    let o = msp(&["pde-quadruple", "--h", "2^-2", "--alpha", "1e-6", "--lambda", "1e-8"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.starts_with("quadruple,2.5000000000000000e-1,")));
}

#[test]
fn cheb_sweep_lists_each_step_count() {
    let o = msp(&["cheb-sweep", "--h", "2^-3", "--cheb-m", "1,3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1 + 4);
}

#[test]
fn maxit_exhaustion_exits_1_but_writes_rows() {
    let o = msp(&["pde-double", "--h", "2^-3", "--alpha", "1e-2", "--maxit", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains(",false,")));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not converged"));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["frobnicate"][..],
        &["pde-double", "--h", "0.3"],
        &["pde-double", "--alpha", "-1"],
        &["iters-random", "--trials", "many"],
        &["cheb-sweep", "--alpha", "1,2"],
    ] {
        let o = msp(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn verify_subset() {
    let o = msp(&["verify", "--only", "5,7,13"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn unwritable_output_exits_1() {
    let o = msp(&["eig-bounds", "--k", "1", "--trials", "1", "--out", "/nonexistent/dir/e.csv"]);
    assert_eq!(o.status.code(), Some(1));
}
