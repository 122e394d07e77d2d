//! Gaussian data generation with Kronecker-structured covariance and the
//! Monte Carlo experiments: estimation error (NRMSE), confusion matrices,
//! accuracies and Cohen's kappa, for both the flip-flop classifier and the
//! temporal-uncorrelated baseline.
//!
//! Reproducibility: every trial draws from its own counter-derived ChaCha
//! stream keyed by (seed, scenario hash, trial index), so serial and
//! parallel runs produce bit-identical results. The stream key does not
//! depend on the rule or classifier, so competing methods see the same data.

use std::io::Write as IoWrite;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flipflop::{self, FlipFlopConfig};
use crate::linalg::{Cholesky, HermitianMatrix, MultipassSample, CHANNELS};
use crate::mos::{self, MosRule};
use crate::symmetry::SymmetryHypothesis;

/// Temporal covariance model for simulated scenes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TemporalModel {
    Identity,
    /// Exponentially shaped: C_t(n, m) = rho^|n-m|.
    Exponential { rho: f64 },
}

impl TemporalModel {
    pub fn matrix(self, passes: usize) -> Result<HermitianMatrix> {
        match self {
            TemporalModel::Identity => Ok(HermitianMatrix::identity(passes)),
            TemporalModel::Exponential { rho } => exponential_temporal(passes, rho),
        }
    }

    fn hash_bits(self) -> u64 {
        match self {
            TemporalModel::Identity => 1,
            TemporalModel::Exponential { rho } => 2u64.wrapping_add(rho.to_bits()),
        }
    }
}

/// One Monte Carlo setting: data shape, temporal model, true polarimetric
/// class, trial count and seed.
#[derive(Clone, Copy, Debug)]
pub struct Scenario {
    pub passes: usize,
    pub looks: usize,
    pub temporal: TemporalModel,
    /// Class the data is drawn from.
    pub hypothesis: SymmetryHypothesis,
    pub trials: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.passes < 1 || self.looks < 1 || self.trials < 1 {
            return Err(Error::InvalidParameter(
                "passes, looks and trials must be >= 1".into(),
            ));
        }
        if let TemporalModel::Exponential { rho } = self.temporal {
            if !(rho.abs() < 1.0) {
                return Err(Error::InvalidParameter(format!("|rho| must be < 1, got {rho}")));
            }
        }
        Ok(())
    }

    /// Nominal covariance C_t (x) C_p for this scenario.
    pub fn nominal_covariance(&self) -> Result<HermitianMatrix> {
        Ok(crate::linalg::kronecker(
            &self.temporal.matrix(self.passes)?,
            &nominal_polarimetric(self.hypothesis),
        ))
    }

    fn stream_hash(&self) -> u64 {
        let mut h = 0x9e3779b97f4a7c15u64;
        for v in [
            self.passes as u64,
            self.looks as u64,
            self.temporal.hash_bits(),
            self.hypothesis.index() as u64,
        ] {
            h = splitmix64(h ^ v);
        }
        h
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Counter-derived per-trial generator; identical regardless of execution
/// order.
pub fn trial_rng(seed: u64, stream: u64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = splitmix64(seed) ^ stream;
    state = splitmix64(state ^ trial.wrapping_mul(0xd1342543de82ef95));
    for chunk in key.chunks_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Nominal polarimetric covariance for each class; all four are positive
/// definite.
pub fn nominal_polarimetric(h: SymmetryHypothesis) -> HermitianMatrix {
    let c = Complex64::new;
    let mut m = HermitianMatrix::zeros(3);
    match h {
        SymmetryHypothesis::NoSymmetry => {
            m.set_pair(0, 0, c(1.0, 0.0));
            m.set_pair(1, 1, c(0.25, 0.0));
            m.set_pair(2, 2, c(0.8, 0.0));
            m.set_pair(0, 1, c(0.2, 0.3));
            m.set_pair(0, 2, c(0.5, -0.3));
            m.set_pair(1, 2, c(-0.2, -0.2));
        }
        SymmetryHypothesis::Reflection => {
            m.set_pair(0, 0, c(1.0, 0.0));
            m.set_pair(1, 1, c(0.25, 0.0));
            m.set_pair(2, 2, c(0.4, 0.0));
            m.set_pair(0, 2, c(0.5, -0.3));
        }
        SymmetryHypothesis::Rotation => {
            m.set_pair(0, 0, c(1.0, 0.0));
            m.set_pair(1, 1, c(0.4, 0.0));
            m.set_pair(2, 2, c(1.0, 0.0));
            m.set_pair(0, 1, c(0.0, 0.3));
            m.set_pair(1, 2, c(0.0, 0.3));
            m.set_pair(0, 2, c(0.2, 0.0));
        }
        SymmetryHypothesis::Azimuth => {
            m.set_pair(0, 0, c(1.0, 0.0));
            m.set_pair(1, 1, c(0.25, 0.0));
            m.set_pair(2, 2, c(1.0, 0.0));
            m.set_pair(0, 2, c(0.5, 0.0));
        }
    }
    m
}

/// Toeplitz temporal covariance with unit diagonal, C_t(n, m) = rho^|n-m|.
pub fn exponential_temporal(passes: usize, rho: f64) -> Result<HermitianMatrix> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "|rho| must be < 1, got {rho}"
        )));
    }
    let mut m = HermitianMatrix::zeros(passes);
    for i in 0..passes {
        for j in i..passes {
            m.set_pair(i, j, Complex64::new(rho.powi((j - i) as i32), 0.0));
        }
    }
    Ok(m)
}

/// Draw K zero-mean complex circular Gaussian looks with covariance C;
/// deterministic given the seed.
pub fn draw_samples(c: &HermitianMatrix, looks: usize, seed: u64) -> Result<MultipassSample> {
    if c.dim() % CHANNELS != 0 {
        return Err(Error::DimensionMismatch(format!(
            "covariance dimension {} is not a multiple of 3",
            c.dim()
        )));
    }
    let factor = c.cholesky()?;
    let mut rng = trial_rng(seed, 0, 0);
    Ok(draw_with_rng(&factor, c.dim() / CHANNELS, looks, &mut rng))
}

/// Colored draw x_k = L z_k with z_k standard complex circular Gaussian
/// (unit covariance: real and imaginary parts N(0, 1/2)).
pub fn draw_with_rng(
    factor: &Cholesky,
    passes: usize,
    looks: usize,
    rng: &mut ChaCha8Rng,
) -> MultipassSample {
    let dim = factor.dim();
    debug_assert_eq!(dim, CHANNELS * passes);
    let mut data = vec![Complex64::new(0.0, 0.0); dim * looks];
    let mut z = vec![Complex64::new(0.0, 0.0); dim];
    for k in 0..looks {
        for zi in z.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *zi = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        }
        factor.apply_factor(&z, &mut data[k * dim..(k + 1) * dim]);
    }
    MultipassSample::new(passes, looks, data).expect("valid shape")
}

/// Covariance estimator compared in the NRMSE experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CovEstimator {
    FlipFlop,
    Tusml,
}

impl CovEstimator {
    pub fn label(self) -> &'static str {
        match self {
            CovEstimator::FlipFlop => "flipflop",
            CovEstimator::Tusml => "tusml",
        }
    }
}

/// Classifier compared in the confusion experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassifierKind {
    FlipFlop,
    Tusml,
}

impl ClassifierKind {
    pub fn label(self) -> &'static str {
        match self {
            ClassifierKind::FlipFlop => "flipflop",
            ClassifierKind::Tusml => "tusml",
        }
    }
}

/// Normalized RMS error of a polarimetric covariance estimator, with the
/// number of failed (excluded) trials.
#[derive(Clone, Copy, Debug)]
pub struct NrmseResult {
    pub nrmse: f64,
    pub failures: usize,
}

/// Monte Carlo NRMSE of the polarimetric factor estimate against the
/// scenario's nominal C_p, sqrt(mean ||C_p - est||_F^2 / ||C_p||_F^2).
///
/// The flip-flop estimate is gauge-fixed by matching its trace to the
/// nominal's before comparing; the baseline estimator has no scale
/// ambiguity.
pub fn nrmse_experiment(
    scenario: &Scenario,
    estimator: CovEstimator,
    cfg: &FlipFlopConfig,
) -> Result<NrmseResult> {
    let c_p = nominal_polarimetric(scenario.hypothesis);
    match estimator {
        CovEstimator::FlipFlop => nrmse_with_estimator(scenario, move |x| {
            let e = flipflop::flip_flop(x, scenario.hypothesis, cfg)?;
            // gauge fix against the nominal scale
            let scale = c_p.trace() / e.c_p.trace();
            Ok(e.c_p.scaled(scale))
        }),
        CovEstimator::Tusml => {
            nrmse_with_estimator(scenario, move |x| flipflop::tusml(x, scenario.hypothesis))
        }
    }
}

/// Monte Carlo NRMSE of an arbitrary polarimetric estimator; test seam for
/// oracle estimators.
pub(crate) fn nrmse_with_estimator<F>(scenario: &Scenario, estimate: F) -> Result<NrmseResult>
where
    F: Fn(&MultipassSample) -> Result<HermitianMatrix> + Sync,
{
    scenario.validate()?;
    let c_p = nominal_polarimetric(scenario.hypothesis);
    let c = scenario.nominal_covariance()?;
    let factor = c.cholesky()?;
    let stream = scenario.stream_hash();
    let den: f64 = c_p.frobenius_norm().powi(2);

    let per_trial: Vec<Option<f64>> = (0..scenario.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(scenario.seed, stream, trial as u64);
            let x = draw_with_rng(&factor, scenario.passes, scenario.looks, &mut rng);
            estimate(&x).ok().map(|m| {
                let mut num = 0.0;
                for i in 0..CHANNELS {
                    for j in 0..CHANNELS {
                        num += (m.get(i, j) - c_p.get(i, j)).norm_sqr();
                    }
                }
                num / den
            })
        })
        .collect();

    let failures = per_trial.iter().filter(|v| v.is_none()).count();
    let used = scenario.trials - failures;
    if used == 0 {
        return Err(Error::InvalidParameter(
            "all trials failed; no estimate available".into(),
        ));
    }
    // compensated (Kahan) summation over the deterministic trial order
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in per_trial.into_iter().flatten() {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok(NrmseResult {
        nrmse: (sum / used as f64).sqrt(),
        failures,
    })
}

/// 4x4 tally of (true class row, selected class column), with per-row
/// failure counts for excluded trials.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 4]; 4],
    pub failures: [u64; 4],
}

impl ConfusionMatrix {
    pub const LABELS: [&'static str; 4] = ["none", "reflection", "rotation", "azimuth"];

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn total(&self) -> u64 {
        (0..4).map(|i| self.row_sum(i)).sum()
    }

    /// Fraction of row i selected correctly.
    pub fn accuracy(&self, h: SymmetryHypothesis) -> f64 {
        let i = h.index();
        self.counts[i][i] as f64 / self.row_sum(i) as f64
    }

    pub fn accuracies(&self) -> [f64; 4] {
        [
            self.accuracy(SymmetryHypothesis::NoSymmetry),
            self.accuracy(SymmetryHypothesis::Reflection),
            self.accuracy(SymmetryHypothesis::Rotation),
            self.accuracy(SymmetryHypothesis::Azimuth),
        ]
    }
}

/// Chance-corrected agreement kappa = (p_o - p_e)/(1 - p_e) from the
/// confusion matrix marginals.
pub fn cohens_kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let n = cm.total();
    if (0..4).any(|i| cm.row_sum(i) == 0) {
        return Err(Error::InvalidParameter(
            "confusion matrix has an empty row".into(),
        ));
    }
    let nf = n as f64;
    let po: f64 = (0..4).map(|i| cm.counts[i][i] as f64).sum::<f64>() / nf;
    let pe: f64 = (0..4)
        .map(|i| {
            let row: f64 = cm.row_sum(i) as f64;
            let col: f64 = (0..4).map(|r| cm.counts[r][i] as f64).sum();
            row * col
        })
        .sum::<f64>()
        / (nf * nf);
    if (1.0 - pe).abs() < 1e-15 {
        return Err(Error::InvalidParameter(
            "degenerate marginals: chance agreement is 1".into(),
        ));
    }
    Ok((po - pe) / (1.0 - pe))
}

/// Confusion experiment for a single selection rule.
pub fn confusion_experiment(
    scenario: &Scenario,
    rule: MosRule,
    kind: ClassifierKind,
    cfg: &FlipFlopConfig,
) -> Result<ConfusionMatrix> {
    Ok(confusion_experiment_rules(scenario, &[rule], kind, cfg)?.remove(0))
}

/// Confusion experiment evaluating several rules on the same draws and the
/// same hypothesis fits. The scenario's own `hypothesis` field is ignored;
/// every true class is simulated in turn.
pub fn confusion_experiment_rules(
    scenario: &Scenario,
    rules: &[MosRule],
    kind: ClassifierKind,
    cfg: &FlipFlopConfig,
) -> Result<Vec<ConfusionMatrix>> {
    scenario.validate()?;
    for rule in rules {
        rule.penalty(scenario.looks)?;
    }
    let mut out = vec![ConfusionMatrix::default(); rules.len()];
    for truth in SymmetryHypothesis::ALL {
        let class_scenario = Scenario {
            hypothesis: truth,
            ..*scenario
        };
        let c = class_scenario.nominal_covariance()?;
        let factor = c.cholesky()?;
        let stream = class_scenario.stream_hash();

        // Vec of per-rule selections (None on estimator failure)
        let selections: Vec<Option<Vec<SymmetryHypothesis>>> = (0..scenario.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(scenario.seed, stream, trial as u64);
                let x = draw_with_rng(&factor, scenario.passes, scenario.looks, &mut rng);
                match kind {
                    ClassifierKind::FlipFlop => mos::fit_all(
                        &x.sample_covariance(),
                        scenario.passes,
                        scenario.looks,
                        cfg,
                    )
                    .ok()
                    .and_then(|fits| {
                        rules.iter().map(|&r| fits.select(r).ok()).collect()
                    }),
                    ClassifierKind::Tusml => rules
                        .iter()
                        .map(|&r| mos::tusml_classify(&x, r).ok())
                        .collect::<Option<Vec<_>>>(),
                }
            })
            .collect();

        for sel in selections {
            match sel {
                Some(per_rule) => {
                    for (ri, h) in per_rule.into_iter().enumerate() {
                        out[ri].counts[truth.index()][h.index()] += 1;
                    }
                }
                None => {
                    for cm in out.iter_mut() {
                        cm.failures[truth.index()] += 1;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// One row per (scenario, estimator, metric) as CSV.
pub fn write_nrmse_csv<W: IoWrite>(
    w: &mut W,
    rows: &[(Scenario, CovEstimator, NrmseResult)],
) -> std::io::Result<()> {
    writeln!(w, "m,k,temporal,class,estimator,trials,failures,nrmse")?;
    for (sc, est, res) in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{:.6}",
            sc.passes,
            sc.looks,
            temporal_label(sc.temporal),
            sc.hypothesis.label(),
            est.label(),
            sc.trials,
            res.failures,
            res.nrmse
        )?;
    }
    Ok(())
}

/// A labelled 4x4 block per confusion matrix.
pub fn write_confusion_csv<W: IoWrite>(
    w: &mut W,
    header: &str,
    cm: &ConfusionMatrix,
) -> std::io::Result<()> {
    writeln!(w, "# {header}")?;
    writeln!(w, "true\\selected,{}", ConfusionMatrix::LABELS.join(","))?;
    for i in 0..4 {
        let row: Vec<String> = (0..4).map(|j| cm.counts[i][j].to_string()).collect();
        writeln!(w, "{},{}", ConfusionMatrix::LABELS[i], row.join(","))?;
    }
    Ok(())
}

pub fn temporal_label(t: TemporalModel) -> String {
    match t {
        TemporalModel::Identity => "identity".to_string(),
        TemporalModel::Exponential { rho } => format!("rho={rho}"),
    }
}
