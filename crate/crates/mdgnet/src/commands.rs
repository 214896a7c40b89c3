//! The five subcommands as library functions. Each is a pure function of
//! its configuration and input files.

use std::fs;
use std::path::{Path, PathBuf};

use mdgnet_core::dataset::{split_and_standardize, Sample};
use mdgnet_core::grid::{aggregate, evaluate_mse, ConventionalSigmaMdg, ConventionalSnr, EchoEstimator, ErrorGrid, Estimator, NnEstimator};
use mdgnet_core::mlp::{train, Target, TrainHistory};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::formats::{self, SavedModel};
use crate::pipeline;

pub const DATASET_FILE: &str = "dataset.csv";
pub const MANIFEST_FILE: &str = "dataset.manifest.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const GRID_DIR: &str = "grid";
pub const GRID_SUMMARY_FILE: &str = "summary.json";

/// Held-out MSE bounds for the trained networks, dB².
pub const NN_SIGMA_MDG_MSE_MAX: f64 = 0.05;
pub const NN_SNR_MSE_MAX: f64 = 1.0;

pub fn model_file(target: Target) -> String {
    format!("model_{}.json", target.name())
}

pub fn history_file(target: Target) -> String {
    format!("history_{}.csv", target.name())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })
}

#[derive(Serialize)]
struct Manifest<'a> {
    file: &'static str,
    samples: usize,
    sha256: &'a str,
    config: RunConfig,
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub dataset: PathBuf,
    pub manifest: PathBuf,
    pub samples: usize,
    pub sha256: String,
}

pub fn generate(cfg: &RunConfig, out_dir: &Path) -> Result<Generated> {
    cfg.validate()?;
    let samples = pipeline::generate_samples(&cfg.dataset())?;
    create_dir(out_dir)?;
    let dataset = out_dir.join(DATASET_FILE);
    let bytes = formats::save_dataset(&dataset, &samples)?;
    let sha256 = formats::sha256_hex(&bytes);
    // The output location is not part of the run's identity.
    let echo = RunConfig { out_dir: None, ..cfg.clone() };
    let manifest = out_dir.join(MANIFEST_FILE);
    let m = Manifest { file: DATASET_FILE, samples: samples.len(), sha256: &sha256, config: echo };
    formats::write_file(&manifest, &formats::to_json_bytes(&m))?;
    Ok(Generated { dataset, manifest, samples: samples.len(), sha256 })
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: PathBuf,
    pub history_file: PathBuf,
    pub saved: SavedModel,
    pub history: TrainHistory,
}

pub fn train_target(cfg: &RunConfig, dataset: &Path, target: Target, out_dir: &Path) -> Result<Trained> {
    cfg.validate()?;
    let bytes = formats::read_file(dataset)?;
    let samples = formats::dataset_from_bytes(dataset, &bytes)?;
    let split = split_and_standardize(&samples, &cfg.dataset())?;
    let train_cfg = cfg.train();
    let (params, history) = train(&split, target, &train_cfg)?;
    let saved = SavedModel {
        params,
        train_fingerprint: formats::train_fingerprint(&train_cfg, target, &formats::sha256_hex(&bytes)),
    };
    create_dir(out_dir)?;
    let model = out_dir.join(model_file(target));
    formats::save_model(&model, &saved)?;
    let history_path = out_dir.join(history_file(target));
    formats::write_file(&history_path, &formats::history_to_bytes(&history))?;
    Ok(Trained { model, history_file: history_path, saved, history })
}

/// Loads models, insisting each exists and, when `expected` is given, that
/// it was trained for that target.
pub fn load_models(paths: &[PathBuf], expected: Option<Target>) -> Result<Vec<SavedModel>> {
    paths
        .iter()
        .map(|p| {
            if !p.exists() {
                return Err(Error::Usage(format!("model file {} does not exist", p.display())));
            }
            let m = formats::load_model(p)?;
            if let Some(t) = expected {
                m.params.require_target(t)?;
            }
            Ok(m)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorMetrics {
    pub estimator: String,
    pub target: &'static str,
    pub mse_db2: f64,
    pub mae_db: f64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse_max_db2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub dataset_sha256: String,
    pub held_out_samples: usize,
    pub estimators: Vec<EstimatorMetrics>,
    pub pass: bool,
}

fn nn_mse_bound(target: Target) -> f64 {
    match target {
        Target::SigmaMdg => NN_SIGMA_MDG_MSE_MAX,
        Target::Snr => NN_SNR_MSE_MAX,
    }
}

fn metrics_entry(est: &dyn Estimator, test: &[Sample], bound: Option<f64>) -> Result<EstimatorMetrics> {
    let r = evaluate_mse(est, test)?;
    Ok(EstimatorMetrics {
        estimator: est.name().to_string(),
        target: est.target().name(),
        mse_db2: r.mse,
        mae_db: r.mae,
        n: r.n,
        mse_max_db2: bound,
        pass: bound.map(|b| r.mse <= b),
    })
}

/// Held-out metrics of the conventional estimators, every model and,
/// with `echo`, the label-echo debug estimator. With `strict`, a model over
/// its MSE bound is an error (after the metrics file is written).
pub fn evaluate(
    cfg: &RunConfig,
    dataset: &Path,
    models: &[PathBuf],
    expected: Option<Target>,
    echo: bool,
    strict: bool,
    out_dir: &Path,
) -> Result<(PathBuf, Metrics)> {
    cfg.validate()?;
    let loaded = load_models(models, expected)?;
    let bytes = formats::read_file(dataset)?;
    let samples = formats::dataset_from_bytes(dataset, &bytes)?;
    let split = split_and_standardize(&samples, &cfg.dataset())?;
    let test = &split.test_raw;
    let mut estimators = vec![metrics_entry(&ConventionalSigmaMdg, test, None)?, metrics_entry(&ConventionalSnr, test, None)?];
    for m in loaded {
        let bound = nn_mse_bound(m.params.target);
        estimators.push(metrics_entry(&NnEstimator::new(m.params), test, Some(bound))?);
    }
    if echo {
        for target in [Target::SigmaMdg, Target::Snr] {
            estimators.push(metrics_entry(&EchoEstimator { target, offset_db: 0.0 }, test, Some(0.0))?);
        }
    }
    let pass = estimators.iter().all(|e| e.pass != Some(false));
    let metrics = Metrics { dataset_sha256: formats::sha256_hex(&bytes), held_out_samples: test.len(), estimators, pass };
    create_dir(out_dir)?;
    let path = out_dir.join(METRICS_FILE);
    formats::write_file(&path, &formats::to_json_bytes(&metrics))?;
    if strict && !pass {
        return Err(Error::CheckFailed(format!("held-out MSE above the acceptance bound; see {}", path.display())));
    }
    Ok((path, metrics))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailureEntry {
    pub sigma_mdg_db: f64,
    pub snr_db: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridEntry {
    pub name: String,
    pub file: String,
    pub estimator: String,
    pub target: &'static str,
    pub cells: usize,
    pub sparse_cells: usize,
    pub max_abs_mean_signed_error_db: f64,
    pub fraction_within_0_5_db: f64,
    pub failures: Vec<CellFailureEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: &'static str,
    pub description: &'static str,
    pub value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Improvement {
    pub target: &'static str,
    pub region: &'static str,
    pub conventional_mean_abs_bias_db: f64,
    pub nn_mean_abs_bias_db: f64,
    pub improved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSummary {
    pub grids: Vec<GridEntry>,
    pub checks: Vec<Check>,
    pub improvements: Vec<Improvement>,
    pub pass: bool,
}

fn grid_entry(g: &ErrorGrid) -> GridEntry {
    GridEntry {
        name: g.name(),
        file: format!("{}.csv", g.name()),
        estimator: g.estimator.clone(),
        target: g.target.name(),
        cells: g.cells.len(),
        sparse_cells: g.cells.iter().filter(|c| c.sparse).count(),
        max_abs_mean_signed_error_db: g.max_abs_mean_signed_error(),
        fraction_within_0_5_db: g.fraction_within(0.5),
        failures: g
            .failures
            .iter()
            .map(|f| CellFailureEntry {
                sigma_mdg_db: g.sigma_axis_db[f.sigma_index],
                snr_db: g.snr_axis_db[f.snr_index],
                message: f.message.clone(),
            })
            .collect(),
    }
}

fn find<'a>(grids: &'a [ErrorGrid], estimator: &str, target: Target) -> Option<&'a ErrorGrid> {
    grids.iter().find(|g| g.estimator == estimator && g.target == target)
}

/// Threshold verdicts for whichever grids and cells are present.
pub fn grid_checks(grids: &[ErrorGrid]) -> Vec<Check> {
    let mut checks = Vec::new();
    let mut cell_check = |g: Option<&ErrorGrid>, sigma, snr, id, description, abs: bool, ok: fn(f64) -> bool| {
        if let Some(c) = g.and_then(|g| g.find_cell(sigma, snr)).filter(|c| c.count > 0) {
            let value = if abs { c.mean_abs_error_db } else { c.mean_signed_error_db };
            checks.push(Check { id, description, value, pass: ok(value) });
        }
    };
    let conv_sigma = find(grids, "conventional", Target::SigmaMdg);
    let conv_snr = find(grids, "conventional", Target::Snr);
    cell_check(
        conv_sigma,
        6.0,
        5.0,
        "conventional_sigma_mdg_bias_6db_5db",
        "conventional sigma_mdg mean signed error at (6 dB, 5 dB) in [1.0, 2.5] dB",
        false,
        |v| (1.0..=2.5).contains(&v),
    );
    cell_check(
        conv_sigma,
        1.0,
        22.0,
        "conventional_sigma_mdg_bias_1db_22db",
        "conventional sigma_mdg |mean signed error| at (1 dB, 22 dB) <= 0.2 dB",
        false,
        |v| v.abs() <= 0.2,
    );
    cell_check(
        conv_snr,
        6.0,
        22.0,
        "conventional_snr_error_6db_22db",
        "conventional SNR mean |error| at (6 dB, 22 dB) >= 2.0 dB",
        true,
        |v| v >= 2.0,
    );
    cell_check(
        conv_snr,
        0.5,
        10.0,
        "conventional_snr_error_0_5db_10db",
        "conventional SNR mean |error| at (0.5 dB, 10 dB) <= 0.3 dB",
        true,
        |v| v <= 0.3,
    );
    if let Some(g) = find(grids, "nn", Target::SigmaMdg) {
        let v = g.max_abs_mean_signed_error();
        checks.push(Check {
            id: "nn_sigma_mdg_max_bias",
            description: "NN sigma_mdg |mean signed error| <= 0.3 dB in every cell",
            value: v,
            pass: v <= 0.3,
        });
    }
    if let Some(g) = find(grids, "nn", Target::Snr) {
        let f = g.fraction_within(0.5);
        checks.push(Check {
            id: "nn_snr_fraction_within_0_5db",
            description: "NN SNR: at least 80% of cells with |mean signed error| <= 0.5 dB",
            value: f,
            pass: f >= 0.8,
        });
        let v = g.max_abs_mean_signed_error();
        checks.push(Check {
            id: "nn_snr_max_bias",
            description: "NN SNR |mean signed error| <= 1.5 dB in every cell",
            value: v,
            pass: v <= 1.5,
        });
    }
    checks
}

fn region_bias(g: &ErrorGrid, in_region: impl Fn(f64, f64) -> bool) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0;
    for (i, &s) in g.sigma_axis_db.iter().enumerate() {
        for (j, &r) in g.snr_axis_db.iter().enumerate() {
            let c = g.cell(i, j);
            if in_region(s, r) && c.count > 0 {
                sum += c.mean_signed_error_db.abs();
                n += 1;
            }
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// NN vs conventional in the regions where the conventional method is known
/// to be biased: high MDG at low SNR for `σ_mdg`, high MDG at high SNR for
/// SNR.
pub fn improvements(grids: &[ErrorGrid]) -> Vec<Improvement> {
    let regions: [(Target, &'static str, fn(f64, f64) -> bool); 2] = [
        (Target::SigmaMdg, "sigma_mdg >= 4 dB, snr <= 10 dB", |s, r| s >= 4.0 && r <= 10.0),
        (Target::Snr, "sigma_mdg >= 4 dB, snr >= 16 dB", |s, r| s >= 4.0 && r >= 16.0),
    ];
    regions
        .into_iter()
        .filter_map(|(target, region, in_region)| {
            let conv = region_bias(find(grids, "conventional", target)?, in_region)?;
            let nn = region_bias(find(grids, "nn", target)?, in_region)?;
            Some(Improvement {
                target: target.name(),
                region,
                conventional_mean_abs_bias_db: conv,
                nn_mean_abs_bias_db: nn,
                improved: nn < conv,
            })
        })
        .collect()
}

/// Writes one CSV per grid plus the summary into `dir`.
pub fn compare_report(grids: &[ErrorGrid], dir: &Path) -> Result<GridSummary> {
    if grids.is_empty() {
        return Err(mdgnet_core::Error::EmptyGrid.into());
    }
    create_dir(dir)?;
    for g in grids {
        formats::write_file(&dir.join(format!("{}.csv", g.name())), &formats::grid_to_bytes(g))?;
    }
    let checks = grid_checks(grids);
    let improvements = improvements(grids);
    let pass = checks.iter().all(|c| c.pass) && improvements.iter().all(|i| i.improved);
    let summary = GridSummary { grids: grids.iter().map(grid_entry).collect(), checks, improvements, pass };
    formats::write_file(&dir.join(GRID_SUMMARY_FILE), &formats::to_json_bytes(&summary))?;
    Ok(summary)
}

/// Conventional grids for both targets, plus one NN grid per model, on
/// fresh seed-disjoint channels. Refuses to write into an existing grid
/// directory unless `force`.
pub fn grid(cfg: &RunConfig, models: &[PathBuf], out_dir: &Path, force: bool, strict: bool) -> Result<(PathBuf, Vec<ErrorGrid>, GridSummary)> {
    cfg.validate()?;
    let dir = out_dir.join(GRID_DIR);
    if dir.exists() && !force {
        return Err(Error::Usage(format!("{} already exists; pass --force to overwrite", dir.display())));
    }
    let loaded = load_models(models, None)?;
    let grid_cfg = cfg.grid()?;
    let samples = pipeline::grid_samples(&grid_cfg)?;
    let mut estimators: Vec<Box<dyn Estimator>> = vec![Box::new(ConventionalSigmaMdg), Box::new(ConventionalSnr)];
    for m in loaded {
        estimators.push(Box::new(NnEstimator::new(m.params)));
    }
    let grids = estimators.iter().map(|e| aggregate(e.as_ref(), &grid_cfg, &samples)).collect::<Result<Vec<_>, _>>()?;
    let summary = compare_report(&grids, &dir)?;
    if strict && !summary.pass {
        return Err(Error::CheckFailed(format!("grid checks failed; see {}", dir.join(GRID_SUMMARY_FILE).display())));
    }
    Ok((dir, grids, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub cases: Vec<pipeline::OracleCase>,
    pub max_deviation_db: f64,
    pub threshold_db: f64,
    pub pass: bool,
}

pub fn oracle_check(cfg: &RunConfig) -> Result<OracleReport> {
    cfg.validate()?;
    let cases = pipeline::oracle_matrix(cfg)?;
    let max_deviation_db = cases.iter().map(|c| c.max_deviation_db).fold(0.0, f64::max);
    Ok(OracleReport { pass: max_deviation_db <= cfg.oracle_threshold_db, cases, max_deviation_db, threshold_db: cfg.oracle_threshold_db })
}
