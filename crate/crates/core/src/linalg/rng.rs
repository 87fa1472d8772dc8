use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::DenseMatrix;

const STREAM_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

/// Deterministic uniform `[0, 1)` stream.
///
/// Backed by xoshiro256++ seeded through SplitMix64 (`seed_from_u64`); doubles
/// take the top 53 bits of each output. Both steps are fixed integer
/// arithmetic, so streams are identical on every platform.
#[derive(Debug, Clone)]
pub struct SeededRng(Xoshiro256PlusPlus);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    /// Independent substream for `(seed, stream)`, e.g. one per experiment trial.
    pub fn substream(seed: u64, stream: u64) -> Self {
        Self::new(seed ^ stream.wrapping_add(1).wrapping_mul(STREAM_MIX))
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    pub fn uniform_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_f64()).collect()
    }

    /// Entrywise uniform `[0, 1)` matrix, filled row by row.
    pub fn uniform_matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| self.next_f64())
    }

    /// Probe vector with entries uniform in `[-1, 1)`.
    pub fn symmetric_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| 2.0 * self.next_f64() - 1.0).collect()
    }
}
