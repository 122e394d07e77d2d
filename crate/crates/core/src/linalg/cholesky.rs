use num_complex::Complex64;

use super::matrix::{ComplexMatrix, HermitianMatrix};
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor L of a Hermitian positive definite
/// matrix, A = L L^H.
///
/// On a failed factorization, one retry is made with jitter
/// eps = 1e-12 * trace/dim added to the diagonal before giving up.
#[derive(Clone, Debug)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<Complex64>,
}

impl Cholesky {
    pub fn factor(h: &HermitianMatrix) -> Result<Self> {
        match Self::factor_raw(h) {
            Ok(f) => Ok(f),
            Err(_) => {
                let eps = 1e-12 * h.trace() / h.dim() as f64;
                if eps > 0.0 {
                    let mut jittered = h.clone();
                    for i in 0..h.dim() {
                        let v = jittered.get(i, i) + Complex64::new(eps, 0.0);
                        jittered.set_pair(i, i, v);
                    }
                    if let Ok(f) = Self::factor_raw(&jittered) {
                        return Ok(f);
                    }
                }
                Err(Error::NotPositiveDefinite { dim: h.dim() })
            }
        }
    }

    fn factor_raw(h: &HermitianMatrix) -> Result<Self> {
        let n = h.dim();
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut sum = 0.0;
            for k in 0..j {
                sum += l[j * n + k].norm_sqr();
            }
            let d = h.get(j, j).re - sum;
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { dim: n });
            }
            let ljj = d.sqrt();
            l[j * n + j] = Complex64::new(ljj, 0.0);
            for i in (j + 1)..n {
                let mut acc = h.get(i, j);
                for k in 0..j {
                    acc -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = acc / ljj;
            }
        }
        Ok(Self { dim: n, lower: l })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Log-determinant of the factored matrix: 2 * sum log L_ii.
    pub fn logdet(&self) -> f64 {
        let n = self.dim;
        (0..n).map(|i| self.lower[i * n + i].re.ln()).sum::<f64>() * 2.0
    }

    /// The lower-triangular factor as a dense matrix (coloring factor for
    /// Gaussian sampling: A = L L^H).
    pub fn factor_matrix(&self) -> ComplexMatrix {
        let n = self.dim;
        ComplexMatrix::from_fn(n, n, |i, j| {
            if j <= i {
                self.lower[i * n + j]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Multiply the factor into a vector: y = L z.
    pub fn apply_factor(&self, z: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim;
        debug_assert_eq!(z.len(), n);
        debug_assert_eq!(out.len(), n);
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..=i {
                acc += self.lower[i * n + j] * z[j];
            }
            out[i] = acc;
        }
    }

    /// Inverse of the factored matrix via L^{-H} L^{-1}.
    pub fn inverse(&self) -> HermitianMatrix {
        let n = self.dim;
        // invert L by forward substitution, column by column
        let mut linv = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            linv[j * n + j] = Complex64::new(1.0 / self.lower[j * n + j].re, 0.0);
            for i in (j + 1)..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in j..i {
                    acc += self.lower[i * n + k] * linv[k * n + j];
                }
                linv[i * n + j] = -acc / self.lower[i * n + i].re;
            }
        }
        // A^{-1} = L^{-H} L^{-1}: entry (i,j) = sum_k conj(linv[k,i]) linv[k,j]
        let mut out = HermitianMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in j..n {
                    acc += linv[k * n + i].conj() * linv[k * n + j];
                }
                out.set_pair(i, j, acc);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn factor_reconstructs() {
        let mut rng = crate::testutil::rng(10);
        for dim in [2, 3, 6] {
            let a = crate::testutil::random_pd(&mut rng, dim);
            let f = a.cholesky().unwrap();
            let l = f.factor_matrix();
            let rec = l.mul(&l.adjoint());
            assert!(rec.max_abs_diff(&a.to_complex()) < 1e-10 * a.trace());
        }
    }

    #[test]
    fn logdet_examples() {
        assert_relative_eq!(HermitianMatrix::identity(6).logdet_psd().unwrap(), 0.0);
        let d = HermitianMatrix::diagonal(&[1.0, 2.0, 4.0]);
        assert_relative_eq!(d.logdet_psd().unwrap(), 8.0f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn logdet_matches_eigenvalue_sum() {
        let mut rng = crate::testutil::rng(11);
        let a = crate::testutil::random_pd(&mut rng, 6);
        let ld = a.logdet_psd().unwrap();
        let oracle: f64 = a.eigenvalues().iter().map(|v| v.ln()).sum();
        assert_relative_eq!(ld, oracle, max_relative = 1e-10);
    }

    #[test]
    fn indefinite_matrix_errors() {
        let a = HermitianMatrix::diagonal(&[1.0, -1.0, 2.0]);
        assert!(matches!(
            a.logdet_psd(),
            Err(Error::NotPositiveDefinite { dim: 3 })
        ));
    }

    #[test]
    fn near_singular_psd_recovers_with_jitter() {
        // rank-2 PSD 3x3: positive trace, singular; jitter makes it factorable
        let mut rng = crate::testutil::rng(12);
        let v = crate::testutil::random_complex_matrix(&mut rng, 3, 2);
        let a = HermitianMatrix::from_complex(&v.mul(&v.adjoint())).unwrap();
        assert!(a.cholesky().is_ok());
    }

    #[test]
    fn zero_matrix_still_errors() {
        let a = HermitianMatrix::zeros(3);
        assert!(a.cholesky().is_err());
    }

    #[test]
    fn inverse_matches_identity() {
        let mut rng = crate::testutil::rng(13);
        for dim in [2, 3, 4, 6] {
            let a = crate::testutil::random_pd(&mut rng, dim);
            let inv = a.inverse_psd().unwrap();
            let prod = a.to_complex().mul(&inv.to_complex());
            assert!(prod.max_abs_diff(&ComplexMatrix::identity(dim)) < 1e-9);
        }
    }
}
