//! Seeded random generation of algebra elements.
//!
//! Every sampler takes an explicit generator; [`rng_for`] derives an
//! independent stream per sample index so batches can run in parallel and
//! still merge deterministically.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matalg::CMatrix;
use crate::quasiorder::QuasiOrder;

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Real and imaginary parts uniform in `[-1, 1)`.
pub fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// A random element of `A_ρ` with entries from [`random_complex`].
pub fn random_in_sma<R: Rng + ?Sized>(order: &QuasiOrder, rng: &mut R) -> CMatrix {
    let mut m = CMatrix::zeros(order.n());
    for (i, j) in order.pairs() {
        m[(i, j)] = random_complex(rng);
    }
    m
}

/// A random element of `A_ρ` with small integer entries in `[-4, 4]`.
pub fn random_integer_in_sma<R: Rng + ?Sized>(order: &QuasiOrder, rng: &mut R) -> CMatrix {
    let mut m = CMatrix::zeros(order.n());
    for (i, j) in order.pairs() {
        m[(i, j)] = Complex64::new(rng.random_range(-4..=4) as f64, rng.random_range(-4..=4) as f64);
    }
    m
}

/// Random complex diagonal entries.
pub fn random_diagonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    (0..n).map(|_| random_complex(rng)).collect()
}
