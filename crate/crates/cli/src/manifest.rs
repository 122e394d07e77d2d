//! Manifest files (TOML) describing batch runs.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use polsar_core::imaging::Region;
use polsar_core::mos::MosRule;
use polsar_core::sim::{ClassifierKind, CovEstimator, TemporalModel};
use polsar_core::symmetry::SymmetryHypothesis;

use crate::CliError;

/// Manifest for `polsar simulate`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateManifest {
    pub seed: u64,
    pub trials: usize,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub nrmse: Vec<NrmseSpec>,
    #[serde(default)]
    pub confusion: Vec<ConfusionSpec>,
}

/// One NRMSE grid: estimation error of the polarimetric factor per
/// (class, estimator, K).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NrmseSpec {
    pub name: String,
    pub passes: usize,
    pub looks: Vec<usize>,
    /// Exponential temporal correlation; omit for uncorrelated passes.
    pub rho: Option<f64>,
    #[serde(default = "all_class_labels")]
    pub classes: Vec<String>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<String>,
    pub trials: Option<usize>,
}

/// One confusion grid: classification tallies per (passes, K, rule,
/// classifier).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfusionSpec {
    pub name: String,
    pub passes: Vec<usize>,
    pub looks: Vec<usize>,
    pub rho: Option<f64>,
    #[serde(default = "default_rules")]
    pub rules: Vec<String>,
    pub gic_delta: Option<u32>,
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<String>,
    pub trials: Option<usize>,
}

fn all_class_labels() -> Vec<String> {
    SymmetryHypothesis::ALL
        .iter()
        .map(|h| h.label().to_string())
        .collect()
}

fn default_estimators() -> Vec<String> {
    vec!["flipflop".into(), "tusml".into()]
}

fn default_rules() -> Vec<String> {
    vec!["bic".into()]
}

fn default_classifiers() -> Vec<String> {
    vec!["flipflop".into()]
}

/// Manifest for `polsar classify` and `polsar decompose`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageManifest {
    pub header: PathBuf,
    pub payload: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default = "default_rule")]
    pub rule: String,
    pub gic_delta: Option<u32>,
    #[serde(default = "default_window")]
    pub window: [usize; 2],
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub single_image: bool,
    /// A run fails (exit code 4) when the fraction of sentinel pixels
    /// exceeds this threshold.
    #[serde(default = "default_failure_rate")]
    pub max_failure_rate: f64,
    #[serde(default)]
    pub region: Vec<RegionSpec>,
}

fn default_rule() -> String {
    "bic".into()
}

fn default_window() -> [usize; 2] {
    [5, 5]
}

fn default_iterations() -> usize {
    5
}

fn default_failure_rate() -> f64 {
    0.05
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub name: String,
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl RegionSpec {
    pub fn to_region(&self) -> Region {
        Region {
            name: self.name.clone(),
            row: self.row,
            col: self.col,
            height: self.height,
            width: self.width,
        }
    }
}

pub fn load_manifest<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Manifest(format!("cannot read manifest {}: {e}", path.display()))
    })?;
    toml::from_str(&text).map_err(|e| CliError::Manifest(format!("{}: {e}", path.display())))
}

pub fn parse_rule(label: &str, gic_delta: Option<u32>) -> Result<MosRule, CliError> {
    match label {
        "aic" => Ok(MosRule::Aic),
        "bic" => Ok(MosRule::Bic),
        "hqc" => Ok(MosRule::Hqc),
        "gic" => Ok(MosRule::Gic {
            delta: gic_delta.unwrap_or(2),
        }),
        other => Err(CliError::Manifest(format!(
            "field 'rule': unknown value '{other}' (expected aic, bic, gic or hqc)"
        ))),
    }
}

pub fn parse_class(label: &str) -> Result<SymmetryHypothesis, CliError> {
    SymmetryHypothesis::from_label(label).ok_or_else(|| {
        CliError::Manifest(format!(
            "field 'classes': unknown value '{label}' (expected none, reflection, rotation or azimuth)"
        ))
    })
}

pub fn parse_estimator(label: &str) -> Result<CovEstimator, CliError> {
    match label {
        "flipflop" => Ok(CovEstimator::FlipFlop),
        "tusml" => Ok(CovEstimator::Tusml),
        other => Err(CliError::Manifest(format!(
            "field 'estimators': unknown value '{other}' (expected flipflop or tusml)"
        ))),
    }
}

pub fn parse_classifier(label: &str) -> Result<ClassifierKind, CliError> {
    match label {
        "flipflop" => Ok(ClassifierKind::FlipFlop),
        "tusml" => Ok(ClassifierKind::Tusml),
        other => Err(CliError::Manifest(format!(
            "field 'classifiers': unknown value '{other}' (expected flipflop or tusml)"
        ))),
    }
}

pub fn temporal_model(rho: Option<f64>) -> Result<TemporalModel, CliError> {
    match rho {
        None => Ok(TemporalModel::Identity),
        Some(r) if r.abs() < 1.0 => Ok(TemporalModel::Exponential { rho: r }),
        Some(r) => Err(CliError::Manifest(format!(
            "field 'rho': |{r}| is not < 1"
        ))),
    }
}
