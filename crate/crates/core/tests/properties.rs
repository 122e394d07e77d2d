//! Property tests over randomly generated matrices and samples.

use num_complex::Complex64;
use proptest::prelude::*;

use polsar_core::flipflop;
use polsar_core::linalg::{
    block, commutation_matrix, kronecker, ComplexMatrix, HermitianMatrix, MultipassSample,
};
use polsar_core::symmetry::{self, SymmetryHypothesis};

fn complex_entry() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(re, im)| Complex64::new(re, im))
}

/// Full-rank-with-probability-one PSD matrix A A^H + eps I.
fn psd_matrix(dim: usize) -> impl Strategy<Value = HermitianMatrix> {
    proptest::collection::vec(complex_entry(), dim * dim).prop_map(move |entries| {
        let a = ComplexMatrix::from_fn(dim, dim, |i, j| entries[i * dim + j]);
        let h = HermitianMatrix::from_complex(&a.mul(&a.adjoint())).unwrap();
        h.add(&HermitianMatrix::identity(dim).scaled(1e-3))
    })
}

fn hypothesis() -> impl Strategy<Value = SymmetryHypothesis> {
    (0usize..4).prop_map(|i| SymmetryHypothesis::from_index(i).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent_and_in_structure(s in psd_matrix(3), h in hypothesis()) {
        let p1 = symmetry::project(&s, h).unwrap();
        let p2 = symmetry::project(&p1, h).unwrap();
        let scale = 1.0 + p1.trace();
        prop_assert!(p2.max_abs_diff(&p1) <= 1e-12 * scale);
        prop_assert!(symmetry::structure_residual(&p1, h) <= 1e-12 * scale);
        // Hermitian PSD preserved
        let eigs = p1.eigenvalues();
        prop_assert!(eigs[0] >= -1e-10 * scale);
    }

    #[test]
    fn commutation_transposes_vec(m in 1usize..5, n in 1usize..5,
                                  entries in proptest::collection::vec(complex_entry(), 16)) {
        let a = ComplexMatrix::from_fn(m, n, |i, j| entries[(i * n + j) % entries.len()]);
        let k = commutation_matrix(m, n);
        // column-major vec
        let vec_of = |mat: &ComplexMatrix| -> Vec<Complex64> {
            let mut v = Vec::new();
            for j in 0..mat.cols() {
                for i in 0..mat.rows() {
                    v.push(mat.get(i, j));
                }
            }
            v
        };
        let va = vec_of(&a);
        let vat = vec_of(&a.transpose());
        for i in 0..m * n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m * n {
                acc += k.get(i, j) * va[j];
            }
            prop_assert_eq!(acc, vat[i]);
        }
        // orthogonality is exact for a 0/1 permutation
        let kkt = k.mul(&k.transpose());
        prop_assert_eq!(kkt.max_abs_diff(&ComplexMatrix::identity(m * n)), 0.0);
    }

    #[test]
    fn kronecker_logdet_splits(a in psd_matrix(2), b in psd_matrix(3)) {
        let ld = kronecker(&a, &b).logdet_psd().unwrap();
        let expected = 3.0 * a.logdet_psd().unwrap() + 2.0 * b.logdet_psd().unwrap();
        prop_assert!((ld - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
    }

    #[test]
    fn block_tiling_reconstructs(s in psd_matrix(6)) {
        let mut tiled = ComplexMatrix::zeros(6, 6);
        for k in 0..2 {
            for l in 0..2 {
                let blk = block(&s, k, l, 3).unwrap();
                for i in 0..3 {
                    for j in 0..3 {
                        tiled.set(3 * k + i, 3 * l + j, blk.get(i, j));
                    }
                }
            }
        }
        prop_assert_eq!(tiled.max_abs_diff(&s.to_complex()), 0.0);
    }

    #[test]
    fn flip_flop_nll_trace_is_monotone(entries in proptest::collection::vec(complex_entry(), 6 * 8),
                                       h in hypothesis()) {
        let x = MultipassSample::new(2, 8, entries).unwrap();
        if let Ok(est) = flipflop::flip_flop(&x, h, &flipflop::FlipFlopConfig::default()) {
            for w in est.nll_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-10);
            }
            prop_assert!(symmetry::structure_residual(&est.c_p, h) <= 1e-10 * (1.0 + est.c_p.trace()));
            // gauge: trace(C_t) = M
            prop_assert!((est.c_t.trace() - 2.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn sample_covariance_is_hermitian_psd(entries in proptest::collection::vec(complex_entry(), 6 * 10)) {
        let x = MultipassSample::new(2, 10, entries).unwrap();
        let s = x.sample_covariance();
        for i in 0..6 {
            for j in 0..6 {
                prop_assert_eq!(s.get(i, j), s.get(j, i).conj());
            }
        }
        let eigs = s.eigenvalues();
        let max = eigs.iter().cloned().fold(0.0f64, f64::max);
        prop_assert!(eigs[0] >= -1e-12 * max.max(1.0));
    }
}
