//! Alternating (flip-flop) maximum-likelihood estimation of the Kronecker
//! factors (C_t, C_p) from multipass samples, with the polarimetric factor
//! constrained to a symmetry structure at every step.
//!
//! Each iteration performs the closed-form coordinate updates: the
//! polarimetric statistic given the current temporal factor, the structured
//! projection, then the temporal factor given the projected polarimetric
//! estimate. Both coordinate steps are exact minimizers, so the negative
//! log-likelihood trace is non-increasing.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{kronecker, HermitianMatrix, MultipassSample, CHANNELS};
use crate::symmetry::{self, SymmetryHypothesis};

/// Iteration control for the flip-flop estimator.
#[derive(Clone, Debug)]
pub struct FlipFlopConfig {
    /// Maximum number of full sweeps (default 5).
    pub max_iterations: usize,
    /// Early-exit threshold on the relative NLL change between sweeps,
    /// measured as |delta| / (1 + |previous|).
    pub nll_rel_tol: f64,
    /// Initial temporal factor; identity when `None`. Must be positive
    /// definite.
    pub ct_init: Option<HermitianMatrix>,
}

impl Default for FlipFlopConfig {
    fn default() -> Self {
        Self {
            max_iterations: 5,
            nll_rel_tol: 1e-8,
            ct_init: None,
        }
    }
}

impl FlipFlopConfig {
    pub fn with_iterations(max_iterations: usize) -> Self {
        Self {
            max_iterations,
            ..Self::default()
        }
    }
}

/// Result of a constrained Kronecker ML fit.
///
/// The factors are gauge-fixed so that trace(C_t) = M; the product
/// C_t (x) C_p is unaffected by this normalization.
#[derive(Clone, Debug)]
pub struct KroneckerEstimate {
    pub c_t: HermitianMatrix,
    pub c_p: HermitianMatrix,
    /// Negative log-likelihood after each completed sweep.
    pub nll_trace: Vec<f64>,
    pub hypothesis: SymmetryHypothesis,
}

impl KroneckerEstimate {
    /// Assembled covariance C_t (x) C_p.
    pub fn reconstruct(&self) -> HermitianMatrix {
        kronecker(&self.c_t, &self.c_p)
    }
}

/// Relative NLL change used for convergence checks; the +1 keeps the measure
/// meaningful when the NLL crosses zero.
#[inline]
pub fn relative_nll_change(previous: f64, current: f64) -> f64 {
    (current - previous).abs() / (1.0 + previous.abs())
}

/// Polarimetric statistic for a fixed temporal factor:
/// (1/M) sum_{k,l} S^{kl} [C_t^{-1}]_{l,k}, with S^{kl} the (k,l)-th 3x3
/// block of the sample covariance.
pub fn polarimetric_update(
    s_hat: &HermitianMatrix,
    c_t: &HermitianMatrix,
) -> Result<HermitianMatrix> {
    let m = c_t.dim();
    check_stacked_dim(s_hat, m)?;
    let ct_inv = c_t.inverse_psd()?;
    let mut out = HermitianMatrix::zeros(CHANNELS);
    let inv_m = 1.0 / m as f64;
    for a in 0..CHANNELS {
        for b in a..CHANNELS {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..m {
                for l in 0..m {
                    acc += s_hat.get(k * CHANNELS + a, l * CHANNELS + b) * ct_inv.get(l, k);
                }
            }
            out.set_pair(a, b, acc * inv_m);
        }
    }
    Ok(out)
}

/// Temporal statistic for a fixed polarimetric factor:
/// (1/N) sum_{k,l} Sbar^{kl} [C_p^{-1}]_{l,k}, where Sbar is the sample
/// covariance re-indexed channel-major by the commutation permutation and
/// Sbar^{kl} its (k,l)-th MxM block.
pub fn temporal_update(s_hat: &HermitianMatrix, c_p: &HermitianMatrix) -> Result<HermitianMatrix> {
    if c_p.dim() != CHANNELS {
        return Err(Error::DimensionMismatch(format!(
            "polarimetric factor must be 3x3, got {}x{}",
            c_p.dim(),
            c_p.dim()
        )));
    }
    if s_hat.dim() % CHANNELS != 0 {
        return Err(Error::DimensionMismatch(format!(
            "sample covariance dimension {} is not a multiple of 3",
            s_hat.dim()
        )));
    }
    let m = s_hat.dim() / CHANNELS;
    let cp_inv = c_p.inverse_psd()?;
    let mut out = HermitianMatrix::zeros(m);
    let inv_n = 1.0 / CHANNELS as f64;
    for i in 0..m {
        for j in i..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..CHANNELS {
                for l in 0..CHANNELS {
                    acc += s_hat.get(i * CHANNELS + k, j * CHANNELS + l) * cp_inv.get(l, k);
                }
            }
            out.set_pair(i, j, acc * inv_n);
        }
    }
    Ok(out)
}

/// Negative log-likelihood of the Kronecker model,
/// K [N logdet(C_t) + M logdet(C_p) + tr(S (C_t^{-1} (x) C_p^{-1}))]
/// + NMK log(pi).
pub fn negative_log_likelihood(
    c_t: &HermitianMatrix,
    c_p: &HermitianMatrix,
    s_hat: &HermitianMatrix,
    looks: usize,
) -> Result<f64> {
    let m = c_t.dim();
    check_stacked_dim(s_hat, m)?;
    let ld_t = c_t.logdet_psd()?;
    let ld_p = c_p.logdet_psd()?;
    let tr = kronecker_quadratic_trace(s_hat, c_t, c_p)?;
    let k = looks as f64;
    let n = CHANNELS as f64;
    Ok(k * (n * ld_t + m as f64 * ld_p + tr) + n * m as f64 * k * std::f64::consts::PI.ln())
}

/// tr(S (C_t^{-1} (x) C_p^{-1})) computed blockwise.
pub(crate) fn kronecker_quadratic_trace(
    s_hat: &HermitianMatrix,
    c_t: &HermitianMatrix,
    c_p: &HermitianMatrix,
) -> Result<f64> {
    let m = c_t.dim();
    check_stacked_dim(s_hat, m)?;
    let a = c_t.inverse_psd()?;
    let b = c_p.inverse_psd()?;
    let mut total = 0.0;
    for k in 0..m {
        for l in 0..m {
            // tr(S^{kl} B) * A(l,k)
            let mut tr_block = Complex64::new(0.0, 0.0);
            for p in 0..CHANNELS {
                for q in 0..CHANNELS {
                    tr_block += s_hat.get(k * CHANNELS + p, l * CHANNELS + q) * b.get(q, p);
                }
            }
            total += (tr_block * a.get(l, k)).re;
        }
    }
    Ok(total)
}

/// Constrained Kronecker ML fit by alternating minimization.
pub fn flip_flop(
    x: &MultipassSample,
    hypothesis: SymmetryHypothesis,
    cfg: &FlipFlopConfig,
) -> Result<KroneckerEstimate> {
    let s_hat = x.sample_covariance();
    flip_flop_scm(&s_hat, x.passes(), x.looks(), hypothesis, cfg)
}

/// As `flip_flop` but starting from a precomputed sample covariance, so the
/// SCM can be shared across the four hypothesis fits.
///
/// Iteration stops at `max_iterations`, on a relative NLL change below
/// `nll_rel_tol`, or at the last completed sweep if a later sweep fails to
/// factor (rank-deficient windows with K far below 3M). A failure in the
/// first sweep is an error carrying the iteration index.
pub fn flip_flop_scm(
    s_hat: &HermitianMatrix,
    passes: usize,
    looks: usize,
    hypothesis: SymmetryHypothesis,
    cfg: &FlipFlopConfig,
) -> Result<KroneckerEstimate> {
    check_stacked_dim(s_hat, passes)?;
    if cfg.max_iterations < 1 {
        return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
    }
    if !(cfg.nll_rel_tol > 0.0) {
        return Err(Error::InvalidParameter("nll_rel_tol must be > 0".into()));
    }
    let mut c_t = match &cfg.ct_init {
        Some(init) => {
            if init.dim() != passes {
                return Err(Error::DimensionMismatch(format!(
                    "ct_init is {}x{} but there are {} passes",
                    init.dim(),
                    init.dim(),
                    passes
                )));
            }
            init.cholesky().map_err(|_| {
                Error::InvalidParameter("ct_init must be positive definite".into())
            })?;
            init.clone()
        }
        None => HermitianMatrix::identity(passes),
    };
    let mut c_p = HermitianMatrix::identity(CHANNELS);
    let mut nll_trace = Vec::with_capacity(cfg.max_iterations);

    for iter in 1..=cfg.max_iterations {
        let mut next_t = c_t.clone();
        let mut next_p = c_p.clone();
        let step = (|| -> Result<f64> {
            let stat = polarimetric_update(s_hat, &next_t)?;
            next_p = symmetry::project(&stat, hypothesis)?;
            next_t = temporal_update(s_hat, &next_p)?;
            negative_log_likelihood(&next_t, &next_p, s_hat, looks)
        })();
        match step {
            Ok(nll) => {
                c_t = next_t;
                c_p = next_p;
                nll_trace.push(nll);
            }
            // a sweep after the first can fail to factor on numerically
            // degenerate input (e.g. K far below 3M); stop at the last
            // completed sweep rather than discarding a valid estimate
            Err(_) if iter > 1 => break,
            Err(e) => {
                return Err(Error::IterationFailure {
                    iteration: iter,
                    source: Box::new(e),
                });
            }
        }
        if nll_trace.len() >= 2 {
            let prev = nll_trace[nll_trace.len() - 2];
            let cur = nll_trace[nll_trace.len() - 1];
            if relative_nll_change(prev, cur) < cfg.nll_rel_tol {
                break;
            }
        }
    }

    // gauge fix: trace(C_t) = M
    let scale = passes as f64 / c_t.trace();
    Ok(KroneckerEstimate {
        c_t: c_t.scaled(scale),
        c_p: c_p.scaled(1.0 / scale),
        nll_trace,
        hypothesis,
    })
}

/// Structured estimate of the polarimetric covariance that ignores temporal
/// correlation: the symmetry projection of the pass-averaged sample
/// covariance.
pub fn tusml(x: &MultipassSample, hypothesis: SymmetryHypothesis) -> Result<HermitianMatrix> {
    symmetry::project(&x.pass_averaged_covariance(), hypothesis)
}

fn check_stacked_dim(s_hat: &HermitianMatrix, passes: usize) -> Result<()> {
    if s_hat.dim() != CHANNELS * passes {
        return Err(Error::DimensionMismatch(format!(
            "sample covariance is {}x{} but 3M = {}",
            s_hat.dim(),
            s_hat.dim(),
            CHANNELS * passes
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{block, commutation_matrix, ComplexMatrix};
    use crate::sim;
    use approx::assert_relative_eq;

    #[test]
    fn polarimetric_update_single_pass_returns_scm() {
        let mut rng = crate::testutil::rng(40);
        let s = crate::testutil::random_psd(&mut rng, 3);
        let out = polarimetric_update(&s, &HermitianMatrix::identity(1)).unwrap();
        assert!(out.max_abs_diff(&s) < 1e-15);
    }

    #[test]
    fn polarimetric_update_identity_inputs() {
        let out =
            polarimetric_update(&HermitianMatrix::identity(6), &HermitianMatrix::identity(2))
                .unwrap();
        assert!(out.max_abs_diff(&HermitianMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn polarimetric_update_identity_ct_averages_diagonal_blocks() {
        let mut rng = crate::testutil::rng(41);
        let s = crate::testutil::random_psd(&mut rng, 6);
        let out = polarimetric_update(&s, &HermitianMatrix::identity(2)).unwrap();
        let b00 = block(&s, 0, 0, 3).unwrap();
        let b11 = block(&s, 1, 1, 3).unwrap();
        let oracle = b00.add(&b11).scaled(Complex64::new(0.5, 0.0));
        assert!(out.to_complex().max_abs_diff(&oracle) < 1e-12);
    }

    #[test]
    fn temporal_update_identity_inputs() {
        let out = temporal_update(&HermitianMatrix::identity(6), &HermitianMatrix::identity(3))
            .unwrap();
        assert!(out.max_abs_diff(&HermitianMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn temporal_update_matches_commutation_matrix_oracle() {
        // independent route: build Sbar = K^T S K explicitly, then sum blocks
        let mut rng = crate::testutil::rng(42);
        let s = crate::testutil::random_pd(&mut rng, 6);
        let c_p = crate::testutil::random_pd(&mut rng, 3);
        let out = temporal_update(&s, &c_p).unwrap();

        let k = commutation_matrix(2, 3);
        let sbar_c = k.transpose().mul(&s.to_complex()).mul(&k);
        let sbar = HermitianMatrix::from_complex(&sbar_c).unwrap();
        let cp_inv = c_p.inverse_psd().unwrap();
        let mut oracle = ComplexMatrix::zeros(2, 2);
        for kk in 0..3 {
            for ll in 0..3 {
                let b = block(&sbar, kk, ll, 2).unwrap();
                let w = cp_inv.get(ll, kk);
                oracle = oracle.add(&b.scaled(w));
            }
        }
        let oracle = oracle.scaled(Complex64::new(1.0 / 3.0, 0.0));
        assert!(out.to_complex().max_abs_diff(&oracle) < 1e-12);
    }

    #[test]
    fn noise_free_kronecker_is_fixed_point() {
        let c_t = sim::exponential_temporal(2, 0.9).unwrap();
        let c_p = sim::nominal_polarimetric(SymmetryHypothesis::Azimuth);
        let s = kronecker(&c_t, &c_p);

        // one full sweep from the true C_t reproduces the factors
        let cp_est = polarimetric_update(&s, &c_t).unwrap();
        assert!(cp_est.max_abs_diff(&c_p) < 1e-12);
        let ct_est = temporal_update(&s, &cp_est).unwrap();
        assert!(kronecker(&ct_est, &cp_est).max_abs_diff(&s) < 1e-8);

        // the full algorithm reconstructs S as well
        let est = flip_flop_scm(&s, 2, 10, SymmetryHypothesis::Azimuth, &FlipFlopConfig::default())
            .unwrap();
        assert!(est.reconstruct().max_abs_diff(&s) < 1e-9);
        // gauge: trace(C_t) = M, so the factors match the unit-diagonal nominal
        assert!(est.c_p.max_abs_diff(&c_p) < 1e-9);
    }

    #[test]
    fn nll_identity_example() {
        let v = negative_log_likelihood(
            &HermitianMatrix::identity(2),
            &HermitianMatrix::identity(3),
            &HermitianMatrix::identity(6),
            1,
        )
        .unwrap();
        assert_relative_eq!(v, 6.0 + 6.0 * std::f64::consts::PI.ln(), max_relative = 1e-14);
    }

    #[test]
    fn nll_kronecker_gauge_invariance() {
        let mut rng = crate::testutil::rng(43);
        let c_t = crate::testutil::random_pd(&mut rng, 2);
        let c_p = crate::testutil::random_pd(&mut rng, 3);
        let s = crate::testutil::random_pd(&mut rng, 6);
        let a = 2.9;
        let v1 = negative_log_likelihood(&c_t, &c_p, &s, 7).unwrap();
        let v2 = negative_log_likelihood(&c_t.scaled(a), &c_p.scaled(1.0 / a), &s, 7).unwrap();
        assert_relative_eq!(v1, v2, max_relative = 1e-12);
    }

    #[test]
    fn nll_matches_full_matrix_oracle() {
        let mut rng = crate::testutil::rng(44);
        for _ in 0..20 {
            let c_t = crate::testutil::random_pd(&mut rng, 2);
            let c_p = crate::testutil::random_pd(&mut rng, 3);
            let s = crate::testutil::random_pd(&mut rng, 6);
            let k = 25;
            let v = negative_log_likelihood(&c_t, &c_p, &s, k).unwrap();
            // direct evaluation on the assembled 6x6 covariance
            let c = kronecker(&c_t, &c_p);
            let oracle = k as f64
                * (c.logdet_psd().unwrap() + c.inverse_psd().unwrap().trace_product(&s))
                + 6.0 * k as f64 * std::f64::consts::PI.ln();
            assert_relative_eq!(v, oracle, max_relative = 1e-9);
        }
    }

    #[test]
    fn single_pass_estimate_equals_direct_projection() {
        let mut rng = crate::testutil::rng(45);
        for h in SymmetryHypothesis::ALL {
            let x = crate::testutil::random_sample(&mut rng, 1, 9);
            let est = flip_flop(&x, h, &FlipFlopConfig::default()).unwrap();
            let oracle = symmetry::project(&x.sample_covariance(), h).unwrap();
            assert!(est.c_p.max_abs_diff(&oracle) < 1e-10);
            assert!(est.c_t.max_abs_diff(&HermitianMatrix::identity(1)) < 1e-10);
        }
    }

    #[test]
    fn nll_trace_is_monotone() {
        let mut rng = crate::testutil::rng(46);
        for _ in 0..20 {
            let x = crate::testutil::random_sample(&mut rng, 2, 8);
            let est = flip_flop(&x, SymmetryHypothesis::NoSymmetry, &FlipFlopConfig::default())
                .unwrap();
            for w in est.nll_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-10);
            }
            assert!(est.nll_trace[est.nll_trace.len() - 1] <= est.nll_trace[0] + 1e-10);
        }
    }

    #[test]
    fn ct_init_rescaling_leaves_product_and_trace_unchanged() {
        let mut rng = crate::testutil::rng(47);
        let x = crate::testutil::random_sample(&mut rng, 2, 12);
        let cfg_a = FlipFlopConfig::default();
        let cfg_b = FlipFlopConfig {
            ct_init: Some(HermitianMatrix::identity(2).scaled(5.0)),
            ..FlipFlopConfig::default()
        };
        let ea = flip_flop(&x, SymmetryHypothesis::Reflection, &cfg_a).unwrap();
        let eb = flip_flop(&x, SymmetryHypothesis::Reflection, &cfg_b).unwrap();
        let pa = ea.reconstruct();
        let pb = eb.reconstruct();
        assert!(pa.max_abs_diff(&pb) < 1e-9 * (1.0 + pa.trace()));
        for (a, b) in ea.nll_trace.iter().zip(eb.nll_trace.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn statistical_consistency_large_k() {
        // azimuth-constrained fit on many looks recovers the nominal product
        let c_t = sim::exponential_temporal(2, 0.9).unwrap();
        let c_p = sim::nominal_polarimetric(SymmetryHypothesis::Azimuth);
        let c = kronecker(&c_t, &c_p);
        let x = sim::draw_samples(&c, 10_000, 777).unwrap();
        let est = flip_flop(&x, SymmetryHypothesis::Azimuth, &FlipFlopConfig::default()).unwrap();
        let recon = est.reconstruct();
        let err = {
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..6 {
                for j in 0..6 {
                    num += (recon.get(i, j) - c.get(i, j)).norm_sqr();
                    den += c.get(i, j).norm_sqr();
                }
            }
            (num / den).sqrt()
        };
        assert!(err <= 0.05, "reconstruction NRMSE {} > 0.05", err);
    }

    #[test]
    fn final_nll_respects_hypothesis_nesting() {
        // azimuth is a sub-model of both reflection and rotation, which are
        // sub-models of the unconstrained fit; the attained NLL must order
        // accordingly
        let mut rng = crate::testutil::rng(49);
        let cfg = FlipFlopConfig::default();
        for _ in 0..20 {
            let x = crate::testutil::random_sample(&mut rng, 2, 25);
            let nll = |h: SymmetryHypothesis| -> f64 {
                let e = flip_flop(&x, h, &cfg).unwrap();
                *e.nll_trace.last().unwrap()
            };
            let l_none = nll(SymmetryHypothesis::NoSymmetry);
            let l_refl = nll(SymmetryHypothesis::Reflection);
            let l_rot = nll(SymmetryHypothesis::Rotation);
            let l_azi = nll(SymmetryHypothesis::Azimuth);
            let tol = 1e-6 * (1.0 + l_azi.abs());
            assert!(l_none <= l_refl + tol);
            assert!(l_refl <= l_azi + tol);
            assert!(l_none <= l_rot + tol);
            assert!(l_rot <= l_azi + tol);
        }
    }

    #[test]
    fn zero_data_reports_iteration_failure() {
        let x = MultipassSample::new(2, 4, vec![Complex64::new(0.0, 0.0); 24]).unwrap();
        let err = flip_flop(&x, SymmetryHypothesis::NoSymmetry, &FlipFlopConfig::default())
            .unwrap_err();
        match err {
            Error::IterationFailure { iteration, .. } => assert_eq!(iteration, 1),
            other => panic!("expected IterationFailure, got {other}"),
        }
    }

    #[test]
    fn tusml_examples() {
        let mut rng = crate::testutil::rng(48);
        // M=1: identical to direct projection of the SCM
        let x1 = crate::testutil::random_sample(&mut rng, 1, 7);
        let t = tusml(&x1, SymmetryHypothesis::Reflection).unwrap();
        let p = symmetry::project(&x1.sample_covariance(), SymmetryHypothesis::Reflection).unwrap();
        assert!(t.max_abs_diff(&p) < 1e-14);

        // M=2 with identical passes: equals the single-pass projection
        let cols: Vec<Vec<Complex64>> = (0..5)
            .map(|_| {
                let v: Vec<Complex64> = (0..3).map(|_| crate::testutil::random_complex(&mut rng)).collect();
                let mut col = v.clone();
                col.extend_from_slice(&v);
                col
            })
            .collect();
        let x2 = MultipassSample::from_columns(2, &cols).unwrap();
        let single_cols: Vec<Vec<Complex64>> =
            cols.iter().map(|c| c[0..3].to_vec()).collect();
        let x_single = MultipassSample::from_columns(1, &single_cols).unwrap();
        let t2 = tusml(&x2, SymmetryHypothesis::Azimuth).unwrap();
        let p2 = symmetry::project(&x_single.sample_covariance(), SymmetryHypothesis::Azimuth)
            .unwrap();
        assert!(t2.max_abs_diff(&p2) < 1e-12);

        // random input against the brute-force per-pass averaging oracle
        let x3 = crate::testutil::random_sample(&mut rng, 3, 6);
        let t3 = tusml(&x3, SymmetryHypothesis::NoSymmetry).unwrap();
        let mut oracle = ComplexMatrix::zeros(3, 3);
        for m in 0..3 {
            for k in 0..6 {
                let look = x3.look(k);
                for i in 0..3 {
                    for j in 0..3 {
                        let v = oracle.get(i, j)
                            + look[m * 3 + i] * look[m * 3 + j].conj() / Complex64::new(18.0, 0.0);
                        oracle.set(i, j, v);
                    }
                }
            }
        }
        assert!(t3.to_complex().max_abs_diff(&oracle) < 1e-12);
    }
}
