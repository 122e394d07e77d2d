//! Shared helpers for unit tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ComplexMatrix, HermitianMatrix, MultipassSample};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub fn random_complex_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| random_complex(rng))
}

/// Random PSD matrix A A^H (full rank with probability one).
pub fn random_psd(rng: &mut ChaCha8Rng, dim: usize) -> HermitianMatrix {
    let a = random_complex_matrix(rng, dim, dim);
    HermitianMatrix::from_complex(&a.mul(&a.adjoint())).expect("square")
}

/// Random strictly positive definite matrix: A A^H + I.
pub fn random_pd(rng: &mut ChaCha8Rng, dim: usize) -> HermitianMatrix {
    random_psd(rng, dim).add(&HermitianMatrix::identity(dim))
}

/// White-noise multipass sample with the given shape.
pub fn random_sample(rng: &mut ChaCha8Rng, passes: usize, looks: usize) -> MultipassSample {
    let data: Vec<Complex64> = (0..3 * passes * looks)
        .map(|_| random_complex(rng) * std::f64::consts::FRAC_1_SQRT_2)
        .collect();
    MultipassSample::new(passes, looks, data).expect("valid shape")
}
