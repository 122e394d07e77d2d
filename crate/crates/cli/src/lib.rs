//! Command implementations for the `polsar` binary: manifest-driven
//! simulation reproduction, per-pixel image classification, H/alpha
//! decomposition, and synthetic stack generation.

pub mod manifest;
pub mod reference;

use std::fmt::Write as FmtWrite;
use std::fs;
use std::path::{Path, PathBuf};

use polsar_core::flipflop::FlipFlopConfig;
use polsar_core::imaging::{self, MultipassStack};
use polsar_core::mos::{self, MosRule};
use polsar_core::sim::{
    self, cohens_kappa, ClassifierKind, ConfusionMatrix, Scenario, TemporalModel,
};
use polsar_core::symmetry::SymmetryHypothesis;

use manifest::{
    load_manifest, parse_class, parse_classifier, parse_estimator, parse_rule, temporal_model,
    ImageManifest, SimulateManifest,
};

/// Errors with distinct process exit codes: manifest problems exit 2, I/O
/// and estimation setup problems exit 3, failure-rate breaches exit 4.
#[derive(thiserror::Error, Debug)]
pub enum CliError {
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Core(#[from] polsar_core::Error),
    #[error("numerical failure rate {rate:.4} exceeds threshold {threshold:.4}")]
    FailureRate { rate: f64, threshold: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Manifest(_) => 2,
            CliError::Io(_) | CliError::Core(_) => 3,
            CliError::FailureRate { .. } => 4,
        }
    }
}

/// Cap the rayon worker count; repeated initialization is ignored so tests
/// can call commands in-process.
pub fn configure_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

#[derive(Debug, Default, Clone)]
pub struct SimulateOverrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
}

#[derive(Debug, Default, Clone)]
pub struct ImageOverrides {
    pub rule: Option<String>,
    pub gic_delta: Option<u32>,
    pub window: Option<(usize, usize)>,
    pub iterations: Option<usize>,
    pub single_image: bool,
}

/// Run the Monte Carlo grids declared in the manifest, write CSV reports,
/// and print a summary with deltas against the embedded reference values.
pub fn cmd_simulate(manifest_path: &Path, overrides: &SimulateOverrides) -> Result<(), CliError> {
    let m: SimulateManifest = load_manifest(manifest_path)?;
    let seed = overrides.seed.unwrap_or(m.seed);
    let base_trials = overrides.trials.unwrap_or(m.trials);
    if base_trials < 1 {
        return Err(CliError::Manifest("field 'trials': must be >= 1".into()));
    }
    fs::create_dir_all(&m.output_dir)?;
    let cfg = FlipFlopConfig::default();

    for spec in &m.nrmse {
        let temporal = temporal_model(spec.rho)?;
        let trials = overrides.trials.unwrap_or(spec.trials.unwrap_or(base_trials));
        let mut rows = Vec::new();
        for &looks in &spec.looks {
            for class_label in &spec.classes {
                let class = parse_class(class_label)?;
                for est_label in &spec.estimators {
                    let estimator = parse_estimator(est_label)?;
                    let scenario = Scenario {
                        passes: spec.passes,
                        looks,
                        temporal,
                        hypothesis: class,
                        trials,
                        seed,
                    };
                    let result = sim::nrmse_experiment(&scenario, estimator, &cfg)?;
                    rows.push((scenario, estimator, result));
                }
            }
        }
        let path = m.output_dir.join(format!("nrmse_{}.csv", spec.name));
        let mut file = fs::File::create(&path)?;
        sim::write_nrmse_csv(&mut file, &rows)?;
        println!("simulate: wrote {} ({} rows)", path.display(), rows.len());
    }

    for spec in &m.confusion {
        let temporal = temporal_model(spec.rho)?;
        let trials = overrides.trials.unwrap_or(spec.trials.unwrap_or(base_trials));
        let rules: Vec<MosRule> = spec
            .rules
            .iter()
            .map(|r| parse_rule(r, spec.gic_delta))
            .collect::<Result<_, _>>()?;
        let classifiers: Vec<ClassifierKind> = spec
            .classifiers
            .iter()
            .map(|c| parse_classifier(c))
            .collect::<Result<_, _>>()?;

        let confusion_path = m.output_dir.join(format!("confusion_{}.csv", spec.name));
        let kappa_path = m.output_dir.join(format!("kappa_{}.csv", spec.name));
        let mut confusion_file = fs::File::create(&confusion_path)?;
        let mut kappa_csv = String::from("classifier,rule,m,k,temporal,trials,kappa\n");

        for &passes in &spec.passes {
            for &looks in &spec.looks {
                let scenario = Scenario {
                    passes,
                    looks,
                    temporal,
                    hypothesis: SymmetryHypothesis::NoSymmetry,
                    trials,
                    seed,
                };
                for &classifier in &classifiers {
                    let cms =
                        sim::confusion_experiment_rules(&scenario, &rules, classifier, &cfg)?;
                    for (rule, cm) in rules.iter().zip(cms.iter()) {
                        let header = format!(
                            "classifier={} rule={} m={} k={} temporal={} trials={}",
                            classifier.label(),
                            rule,
                            passes,
                            looks,
                            sim::temporal_label(temporal),
                            trials
                        );
                        sim::write_confusion_csv(&mut confusion_file, &header, cm)?;
                        let kappa = cohens_kappa(cm)
                            .map_err(|e| CliError::Manifest(format!("kappa: {e}")))?;
                        writeln!(
                            kappa_csv,
                            "{},{},{},{},{},{},{:.4}",
                            classifier.label(),
                            rule.label(),
                            passes,
                            looks,
                            sim::temporal_label(temporal),
                            trials,
                            kappa
                        )
                        .expect("string write");
                        print_reference_summary(
                            classifier,
                            *rule,
                            passes,
                            looks,
                            temporal,
                            cm,
                            kappa,
                        );
                    }
                }
            }
        }
        fs::write(&kappa_path, kappa_csv)?;
        println!(
            "simulate: wrote {} and {}",
            confusion_path.display(),
            kappa_path.display()
        );
    }
    Ok(())
}

fn print_reference_summary(
    classifier: ClassifierKind,
    rule: MosRule,
    passes: usize,
    looks: usize,
    temporal: TemporalModel,
    cm: &ConfusionMatrix,
    kappa: f64,
) {
    let acc = cm.accuracies().map(|a| 100.0 * a);
    let is_rho09 = matches!(temporal, TemporalModel::Exponential { rho } if (rho - 0.9).abs() < 1e-12);

    if is_rho09 && rule == MosRule::Bic && classifier == ClassifierKind::FlipFlop {
        if let Some(reference) = reference::bic_rho09_accuracy(passes, looks) {
            let deltas: Vec<String> = acc
                .iter()
                .zip(reference.iter())
                .map(|(a, r)| format!("{:+.1}", a - r))
                .collect();
            println!(
                "summary: bic rho=0.9 M={passes} K={looks}: accuracies {:.1}/{:.1}/{:.1}/{:.1} vs reference {:.1}/{:.1}/{:.1}/{:.1} (delta {})",
                acc[0], acc[1], acc[2], acc[3],
                reference[0], reference[1], reference[2], reference[3],
                deltas.join("/")
            );
        }
    }
    if matches!(temporal, TemporalModel::Identity)
        && passes == 2
        && classifier == ClassifierKind::FlipFlop
    {
        if let Some(reference) = reference::identity_m2_kappa(looks, rule.label()) {
            println!(
                "summary: {} identity M=2 K={looks}: kappa {kappa:.3} vs reference {reference:.2} (delta {:+.3})",
                rule.label(),
                kappa - reference
            );
        }
    }
    if is_rho09 && passes == 2 && looks == 25 && rule == MosRule::Bic {
        if let Some(reference) = reference::rho09_m2_k25_bic_kappa(classifier.label()) {
            println!(
                "summary: {} rho=0.9 M=2 K=25 bic: kappa {kappa:.3} vs reference {reference:.2} (delta {:+.3})",
                classifier.label(),
                kappa - reference
            );
        }
    }
}

struct ImageSetup {
    stack: MultipassStack,
    rule: MosRule,
    w1: usize,
    w2: usize,
    cfg: FlipFlopConfig,
    output_dir: PathBuf,
    max_failure_rate: f64,
    regions: Vec<imaging::Region>,
}

fn prepare_image_run(
    manifest_path: &Path,
    overrides: &ImageOverrides,
) -> Result<ImageSetup, CliError> {
    let m: ImageManifest = load_manifest(manifest_path)?;
    if !m.header.exists() {
        return Err(CliError::Manifest(format!(
            "field 'header': {} does not exist",
            m.header.display()
        )));
    }
    if !m.payload.exists() {
        return Err(CliError::Manifest(format!(
            "field 'payload': {} does not exist",
            m.payload.display()
        )));
    }
    let rule_label = overrides.rule.clone().unwrap_or_else(|| m.rule.clone());
    let rule = parse_rule(&rule_label, overrides.gic_delta.or(m.gic_delta))?;
    let (w1, w2) = overrides.window.unwrap_or((m.window[0], m.window[1]));
    if w1 < 1 || w2 < 1 {
        return Err(CliError::Manifest(
            "field 'window': entries must be >= 1".into(),
        ));
    }
    let iterations = overrides.iterations.unwrap_or(m.iterations);
    if iterations < 1 {
        return Err(CliError::Manifest(
            "field 'iterations': must be >= 1".into(),
        ));
    }
    let mut stack = imaging::load_stack(&m.header, &m.payload)?;
    if overrides.single_image || m.single_image {
        stack = stack.first_pass();
    }
    let looks = w1 * w2;
    let none_params = mos::effective_zeta(SymmetryHypothesis::NoSymmetry, stack.passes());
    if looks < none_params {
        eprintln!(
            "warning: window {}x{} gives K={} looks, below the {} parameters of the \
             unconstrained fit; estimates will be ill-conditioned",
            w1, w2, looks, none_params
        );
    }
    fs::create_dir_all(&m.output_dir)?;
    Ok(ImageSetup {
        stack,
        rule,
        w1,
        w2,
        cfg: FlipFlopConfig::with_iterations(iterations),
        output_dir: m.output_dir,
        max_failure_rate: m.max_failure_rate,
        regions: m.region.iter().map(|r| r.to_region()).collect(),
    })
}

fn check_failure_rate(failures: usize, pixels: usize, threshold: f64) -> Result<(), CliError> {
    let rate = failures as f64 / pixels as f64;
    if rate > threshold {
        return Err(CliError::FailureRate {
            rate,
            threshold,
        });
    }
    Ok(())
}

/// Classify every pixel and write the rendered map, the raw label raster
/// and optional per-region class percentages.
pub fn cmd_classify(manifest_path: &Path, overrides: &ImageOverrides) -> Result<(), CliError> {
    let setup = prepare_image_run(manifest_path, overrides)?;
    let map = imaging::classify_map(&setup.stack, setup.rule, setup.w1, setup.w2, &setup.cfg)?;

    let png_path = setup.output_dir.join("classes.png");
    imaging::render_map(&map)
        .save(&png_path)
        .map_err(|e| CliError::Manifest(format!("cannot write {}: {e}", png_path.display())))?;
    let labels_path = setup.output_dir.join("classes.labels");
    fs::write(&labels_path, imaging::class_labels(&map))?;

    if !setup.regions.is_empty() {
        let mut file = fs::File::create(setup.output_dir.join("class_regions.csv"))?;
        imaging::write_class_region_csv(&mut file, &map, &setup.regions)?;
    }

    let pixels = map.rows() * map.cols();
    println!(
        "classify: {}x{} map, {} failures of {} pixels -> {}",
        map.rows(),
        map.cols(),
        map.failures,
        pixels,
        png_path.display()
    );
    check_failure_rate(map.failures, pixels, setup.max_failure_rate)
}

/// Classify, decompose the per-pixel structured estimates into H/alpha and
/// zones, and write the zone map, rasters and per-region zone percentages.
pub fn cmd_decompose(manifest_path: &Path, overrides: &ImageOverrides) -> Result<(), CliError> {
    let setup = prepare_image_run(manifest_path, overrides)?;
    let maps = imaging::decompose_map(&setup.stack, setup.rule, setup.w1, setup.w2, &setup.cfg)?;

    let png_path = setup.output_dir.join("zones.png");
    imaging::render_zone_map(&maps)
        .save(&png_path)
        .map_err(|e| CliError::Manifest(format!("cannot write {}: {e}", png_path.display())))?;
    let zone_labels: Vec<u8> = maps
        .zones
        .iter()
        .map(|z| z.map(|z| z.number() as u8).unwrap_or(0))
        .collect();
    fs::write(setup.output_dir.join("zones.labels"), zone_labels)?;

    imaging::save_real_raster(
        maps.rows(),
        maps.cols(),
        &maps.entropy,
        &setup.output_dir.join("entropy.hdr"),
        &setup.output_dir.join("entropy.dat"),
    )?;
    imaging::save_real_raster(
        maps.rows(),
        maps.cols(),
        &maps.mean_alpha_deg,
        &setup.output_dir.join("alpha.hdr"),
        &setup.output_dir.join("alpha.dat"),
    )?;

    if !setup.regions.is_empty() {
        let mut file = fs::File::create(setup.output_dir.join("zone_regions.csv"))?;
        imaging::write_zone_region_csv(&mut file, &maps, &setup.regions)?;
    }

    let pixels = maps.rows() * maps.cols();
    println!(
        "decompose: {}x{} maps, {} failures of {} pixels -> {}",
        maps.rows(),
        maps.cols(),
        maps.failures,
        pixels,
        png_path.display()
    );
    check_failure_rate(maps.failures, pixels, setup.max_failure_rate)
}

/// Synthetic scene layouts for `polsar synth`.
#[derive(Debug, Clone)]
pub enum SynthLayout {
    /// Left half reflection, right half azimuth.
    TwoRegion,
    /// Quadrants: none / reflection / rotation / azimuth.
    Quadrants,
    /// A single class everywhere.
    Uniform(SymmetryHypothesis),
}

impl SynthLayout {
    pub fn parse(s: &str) -> Result<SynthLayout, CliError> {
        match s {
            "two-region" => Ok(SynthLayout::TwoRegion),
            "quadrants" => Ok(SynthLayout::Quadrants),
            other => {
                if let Some(class) = other.strip_prefix("uniform:") {
                    Ok(SynthLayout::Uniform(parse_class(class)?))
                } else {
                    Err(CliError::Manifest(format!(
                        "unknown layout '{other}' (expected two-region, quadrants or uniform:<class>)"
                    )))
                }
            }
        }
    }
}

/// Generate a synthetic stack and write it as a header/payload pair.
#[allow(clippy::too_many_arguments)]
pub fn cmd_synth(
    rows: usize,
    cols: usize,
    passes: usize,
    rho: Option<f64>,
    seed: u64,
    layout: &SynthLayout,
    header_path: &Path,
    payload_path: &Path,
) -> Result<(), CliError> {
    let temporal = temporal_model(rho)?;
    let layout = layout.clone();
    let class_of = move |r: usize, c: usize| match layout {
        SynthLayout::TwoRegion => {
            if c < cols / 2 {
                SymmetryHypothesis::Reflection
            } else {
                SymmetryHypothesis::Azimuth
            }
        }
        SynthLayout::Quadrants => match (r < rows / 2, c < cols / 2) {
            (true, true) => SymmetryHypothesis::NoSymmetry,
            (true, false) => SymmetryHypothesis::Reflection,
            (false, true) => SymmetryHypothesis::Rotation,
            (false, false) => SymmetryHypothesis::Azimuth,
        },
        SynthLayout::Uniform(h) => h,
    };
    let stack = imaging::synthesize_stack(rows, cols, passes, temporal, seed, class_of)?;
    imaging::save_stack(&stack, header_path, payload_path, imaging::Dtype::Complex128)?;
    println!(
        "synth: wrote {}x{} stack with {} passes -> {} + {}",
        rows,
        cols,
        passes,
        header_path.display(),
        payload_path.display()
    );
    Ok(())
}
