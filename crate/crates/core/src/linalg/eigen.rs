//! Hermitian eigendecomposition by cyclic Jacobi rotations. Intended for the
//! small fixed sizes used throughout (3x3 coherence matrices, 3M x 3M sample
//! covariances); not a general-purpose eigensolver.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, HermitianMatrix};

const MAX_SWEEPS: usize = 64;

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn eigenvalues(h: &HermitianMatrix) -> Vec<f64> {
    let (vals, _) = jacobi(h, false);
    vals
}

/// Full eigendecomposition: ascending eigenvalues and the unitary matrix
/// whose columns are the matching eigenvectors (A = V diag(w) V^H).
pub fn eigen_decompose(h: &HermitianMatrix) -> (Vec<f64>, ComplexMatrix) {
    let (vals, vecs) = jacobi(h, true);
    (vals, vecs.expect("vectors requested"))
}

fn jacobi(h: &HermitianMatrix, want_vectors: bool) -> (Vec<f64>, Option<ComplexMatrix>) {
    let n = h.dim();
    let mut a: Vec<Complex64> = (0..n * n)
        .map(|idx| h.get(idx / n, idx % n))
        .collect();
    let mut v = if want_vectors {
        let mut id = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            id[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Some(id)
    } else {
        None
    };

    let scale: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    let tol = 1e-15 * scale;

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let g = apq.norm();
                if g <= tol * 1e-2 {
                    continue;
                }
                let phase = apq / g;
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // plane rotation R: R[p][p]=c, R[p][q]=s*phase,
                // R[q][p]=-s*conj(phase), R[q][q]=c; A <- R^H A R
                let sp = phase * s;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c - akq * sp.conj();
                    a[k * n + q] = akp * sp + akq * c;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c - aqk * sp;
                    a[q * n + k] = apk * sp.conj() + aqk * c;
                }
                // keep the diagonal strictly real and the target entry zero
                a[p * n + p] = Complex64::new(a[p * n + p].re, 0.0);
                a[q * n + q] = Complex64::new(a[q * n + q].re, 0.0);
                a[p * n + q] = Complex64::new(0.0, 0.0);
                a[q * n + p] = Complex64::new(0.0, 0.0);

                if let Some(vm) = v.as_mut() {
                    for k in 0..n {
                        let vkp = vm[k * n + p];
                        let vkq = vm[k * n + q];
                        vm[k * n + p] = vkp * c - vkq * sp.conj();
                        vm[k * n + q] = vkp * sp + vkq * c;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.partial_cmp(&a[j * n + j].re).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| a[i * n + i].re).collect();
    let vecs = v.map(|vm| {
        ComplexMatrix::from_fn(n, n, |i, j| vm[i * n + order[j]])
    });
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_matrix_eigenvalues() {
        let h = HermitianMatrix::diagonal(&[3.0, -1.0, 2.0]);
        let vals = eigenvalues(&h);
        assert_relative_eq!(vals[0], -1.0);
        assert_relative_eq!(vals[1], 2.0);
        assert_relative_eq!(vals[2], 3.0);
    }

    #[test]
    fn known_2x2_hermitian() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3
        let h = HermitianMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) | (1, 1) => Complex64::new(2.0, 0.0),
            (0, 1) => Complex64::new(0.0, 1.0),
            _ => Complex64::new(0.0, -1.0),
        });
        let vals = eigenvalues(&h);
        assert_relative_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(vals[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn reconstruction_random() {
        let mut rng = crate::testutil::rng(20);
        for dim in [2, 3, 6, 8] {
            let h = crate::testutil::random_pd(&mut rng, dim);
            let (vals, vecs) = eigen_decompose(&h);
            // A V = V diag(w)
            let av = h.to_complex().mul(&vecs);
            let mut vd = ComplexMatrix::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    vd.set(i, j, vecs.get(i, j) * Complex64::new(vals[j], 0.0));
                }
            }
            assert!(av.max_abs_diff(&vd) < 1e-10 * h.trace().max(1.0));
            // V unitary
            let vhv = vecs.adjoint().mul(&vecs);
            assert!(vhv.max_abs_diff(&ComplexMatrix::identity(dim)) < 1e-12);
        }
    }

    #[test]
    fn degenerate_spectrum() {
        let h = HermitianMatrix::identity(3).scaled(2.5);
        let (vals, vecs) = eigen_decompose(&h);
        for v in vals {
            assert_relative_eq!(v, 2.5);
        }
        let vhv = vecs.adjoint().mul(&vecs);
        assert!(vhv.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn trace_preserved() {
        let mut rng = crate::testutil::rng(21);
        let h = crate::testutil::random_pd(&mut rng, 5);
        let vals = eigenvalues(&h);
        assert_relative_eq!(vals.iter().sum::<f64>(), h.trace(), max_relative = 1e-12);
    }
}
