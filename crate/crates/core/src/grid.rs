//! Held-out MSE and signed-error surfaces over the (`σ_mdg`, SNR) plane.
//!
//! Errors are always `actual − estimated`. Grid channels are drawn from the
//! [`Namespace::Grid`] seed namespace, disjoint from the training data.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::channel::{CalibrationTable, LinkConfig, CALIBRATION_DRAWS};
use crate::dataset::{calibration_table, features_for, fit_channel, uniform_points, Sample, SINR_OFFSET};
use crate::mlp::{MlpParams, Target};
use crate::mmse::SnrPoint;
use crate::seed::Namespace;
use crate::units::{db_to_linear, linear_to_db, mean_std};
use crate::{Error, Result};

/// An estimator of one target from a raw sample.
pub trait Estimator {
    fn name(&self) -> &str;
    fn target(&self) -> Target;
    fn estimate(&self, sample: &Sample) -> Result<f64>;
}

/// `σ_mdg` read off the MMSE equalizer's inverse: the population std of the
/// eigenvalue features.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConventionalSigmaMdg;

impl Estimator for ConventionalSigmaMdg {
    fn name(&self) -> &str {
        "conventional"
    }

    fn target(&self) -> Target {
        Target::SigmaMdg
    }

    fn estimate(&self, s: &Sample) -> Result<f64> {
        Ok(mean_std(s.eigen_block()).1)
    }
}

/// SNR as the dB value of the mean linear SINR.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConventionalSnr;

impl Estimator for ConventionalSnr {
    fn name(&self) -> &str {
        "conventional"
    }

    fn target(&self) -> Target {
        Target::Snr
    }

    fn estimate(&self, s: &Sample) -> Result<f64> {
        let block = &s.features[SINR_OFFSET..];
        Ok(linear_to_db(block.iter().map(|&d| db_to_linear(d)).sum::<f64>() / block.len() as f64))
    }
}

#[derive(Debug, Clone)]
pub struct NnEstimator {
    params: MlpParams,
}

impl NnEstimator {
    pub fn new(params: MlpParams) -> Self {
        NnEstimator { params }
    }

    /// Wraps `params`, refusing a network trained for another target.
    pub fn for_target(params: MlpParams, target: Target) -> Result<Self> {
        params.require_target(target)?;
        Ok(NnEstimator { params })
    }

    pub fn params(&self) -> &MlpParams {
        &self.params
    }
}

impl Estimator for NnEstimator {
    fn name(&self) -> &str {
        "nn"
    }

    fn target(&self) -> Target {
        self.params.target
    }

    fn estimate(&self, s: &Sample) -> Result<f64> {
        self.params.predict(&s.features)
    }
}

/// Echoes the label plus a fixed offset. Debug and test aid.
#[derive(Debug, Clone, Copy)]
pub struct EchoEstimator {
    pub target: Target,
    pub offset_db: f64,
}

impl Estimator for EchoEstimator {
    fn name(&self) -> &str {
        "echo"
    }

    fn target(&self) -> Target {
        self.target
    }

    fn estimate(&self, s: &Sample) -> Result<f64> {
        Ok(self.target.label(s) + self.offset_db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseReport {
    /// dB².
    pub mse: f64,
    /// dB.
    pub mae: f64,
    pub n: usize,
}

pub fn evaluate_mse<E: Estimator + ?Sized>(est: &E, samples: &[Sample]) -> Result<MseReport> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { found: 0, minimum: 1 });
    }
    let mut sq = 0.0;
    let mut abs = 0.0;
    for s in samples {
        let e = est.target().label(s) - est.estimate(s)?;
        sq += e * e;
        abs += e.abs();
    }
    let n = samples.len();
    Ok(MseReport { mse: sq / n as f64, mae: abs / n as f64, n })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub sigma_axis_db: Vec<f64>,
    pub snr_axis_db: Vec<f64>,
    pub channels_per_cell: usize,
    /// Cells with fewer samples are flagged sparse.
    pub min_count: usize,
    pub link: LinkConfig,
    pub sinr_imp_db: Option<f64>,
    pub master_seed: u64,
    pub calibration_draws: usize,
}

impl Default for GridConfig {
    /// `σ_mdg` 0.5…6.0 dB step 0.5, SNR 5…22 dB step 1, 50 channels a cell.
    fn default() -> Self {
        GridConfig {
            sigma_axis_db: uniform_points(0.5, 6.0, 12),
            snr_axis_db: uniform_points(5.0, 22.0, 18),
            channels_per_cell: 50,
            min_count: 10,
            link: LinkConfig::default(),
            sinr_imp_db: None,
            master_seed: 1,
            calibration_draws: CALIBRATION_DRAWS,
        }
    }
}

fn strictly_increasing(axis: &[f64]) -> bool {
    axis.iter().all(|v| v.is_finite()) && axis.windows(2).all(|w| w[0] < w[1])
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        self.link.validate()?;
        if self.sigma_axis_db.is_empty() || self.snr_axis_db.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if !strictly_increasing(&self.sigma_axis_db) || !strictly_increasing(&self.snr_axis_db) {
            return Err(Error::InvalidConfig("grid axes must be finite and strictly increasing".into()));
        }
        if self.sigma_axis_db[0] < 0.0 {
            return Err(Error::InvalidConfig("sigma_mdg axis must be non-negative".into()));
        }
        if self.channels_per_cell == 0 {
            return Err(Error::InvalidConfig("channels_per_cell must be at least 1".into()));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.sigma_axis_db.len() * self.snr_axis_db.len()
    }

    /// The calibration table matching this grid's link.
    pub fn calibration_table(&self) -> Result<CalibrationTable> {
        let top = *self.sigma_axis_db.last().ok_or(Error::EmptyGrid)?;
        calibration_table(&self.link, self.master_seed, self.calibration_draws, top.max(0.1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSample {
    pub sigma_index: usize,
    pub snr_index: usize,
    pub sample: Sample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub sigma_index: usize,
    pub snr_index: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridSamples {
    pub samples: Vec<GridSample>,
    pub failures: Vec<CellFailure>,
}

/// Fresh channels for one cell, each fitted to exactly the cell's `σ_mdg`.
pub fn cell_samples(cfg: &GridConfig, table: &CalibrationTable, sigma_index: usize, snr_index: usize) -> Result<Vec<GridSample>> {
    let target = cfg.sigma_axis_db[sigma_index];
    let p = SnrPoint { snr_db: cfg.snr_axis_db[snr_index], sinr_imp_db: cfg.sinr_imp_db };
    let cell = (sigma_index * cfg.snr_axis_db.len() + snr_index) as u64;
    (0..cfg.channels_per_cell as u64)
        .map(|c| {
            let index = cell * cfg.channels_per_cell as u64 + c;
            let (seed, h) = fit_channel(&cfg.link, table, cfg.master_seed, Namespace::Grid, index, target)?;
            Ok(GridSample {
                sigma_index,
                snr_index,
                sample: Sample {
                    features: features_for(&h, &p)?,
                    label_sigma_mdg_db: crate::channel::sigma_mdg(&h)?,
                    label_snr_db: p.snr_db,
                    channel_seed: seed,
                    sections: cfg.link.sections,
                },
            })
        })
        .collect()
}

/// Samples for every cell; cells whose channels cannot be generated are
/// skipped and reported.
pub fn generate_grid_samples(cfg: &GridConfig, table: &CalibrationTable) -> Result<GridSamples> {
    cfg.validate()?;
    let mut out = GridSamples::default();
    for i in 0..cfg.sigma_axis_db.len() {
        for j in 0..cfg.snr_axis_db.len() {
            collect_cell(&mut out, i, j, cell_samples(cfg, table, i, j));
        }
    }
    Ok(out)
}

/// Appends one cell's outcome to `out`.
pub fn collect_cell(out: &mut GridSamples, sigma_index: usize, snr_index: usize, cell: Result<Vec<GridSample>>) {
    match cell {
        Ok(samples) => out.samples.extend(samples),
        Err(e) => out.failures.push(CellFailure { sigma_index, snr_index, message: e.to_string() }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub mean_signed_error_db: f64,
    pub mean_abs_error_db: f64,
    pub count: usize,
    pub sparse: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorGrid {
    pub sigma_axis_db: Vec<f64>,
    pub snr_axis_db: Vec<f64>,
    /// Row-major: `σ_mdg` index outer, SNR index inner.
    pub cells: Vec<GridCell>,
    pub estimator: String,
    pub target: Target,
    pub failures: Vec<CellFailure>,
}

impl ErrorGrid {
    pub fn cell(&self, sigma_index: usize, snr_index: usize) -> &GridCell {
        &self.cells[sigma_index * self.snr_axis_db.len() + snr_index]
    }

    /// Cell whose centers match `(sigma_db, snr_db)` within 1e-9.
    pub fn find_cell(&self, sigma_db: f64, snr_db: f64) -> Option<&GridCell> {
        let i = self.sigma_axis_db.iter().position(|&s| (s - sigma_db).abs() < 1e-9)?;
        let j = self.snr_axis_db.iter().position(|&s| (s - snr_db).abs() < 1e-9)?;
        Some(self.cell(i, j))
    }

    /// Populated cells only.
    pub fn populated(&self) -> impl Iterator<Item = &GridCell> {
        self.cells.iter().filter(|c| c.count > 0)
    }

    pub fn max_abs_mean_signed_error(&self) -> f64 {
        self.populated().map(|c| c.mean_signed_error_db.abs()).fold(0.0, f64::max)
    }

    /// Fraction of populated cells with `|mean signed error| ≤ threshold`.
    pub fn fraction_within(&self, threshold_db: f64) -> f64 {
        let total = self.populated().count();
        if total == 0 {
            return 0.0;
        }
        self.populated().filter(|c| c.mean_signed_error_db.abs() <= threshold_db).count() as f64 / total as f64
    }

    pub fn name(&self) -> String {
        alloc::format!("{}_{}", self.estimator, self.target.name())
    }
}

/// Per-cell signed and absolute error of `est` over `samples`.
pub fn aggregate<E: Estimator + ?Sized>(est: &E, cfg: &GridConfig, samples: &GridSamples) -> Result<ErrorGrid> {
    cfg.validate()?;
    let n_snr = cfg.snr_axis_db.len();
    let mut signed = alloc::vec![0.0; cfg.cell_count()];
    let mut abs = alloc::vec![0.0; cfg.cell_count()];
    let mut count = alloc::vec![0usize; cfg.cell_count()];
    for gs in &samples.samples {
        let k = gs.sigma_index * n_snr + gs.snr_index;
        let e = est.target().label(&gs.sample) - est.estimate(&gs.sample)?;
        signed[k] += e;
        abs[k] += e.abs();
        count[k] += 1;
    }
    let cells = (0..cfg.cell_count())
        .map(|k| {
            let n = count[k];
            let (s, a) = if n > 0 { (signed[k] / n as f64, abs[k] / n as f64) } else { (0.0, 0.0) };
            GridCell { mean_signed_error_db: s, mean_abs_error_db: a, count: n, sparse: n < cfg.min_count }
        })
        .collect();
    Ok(ErrorGrid {
        sigma_axis_db: cfg.sigma_axis_db.clone(),
        snr_axis_db: cfg.snr_axis_db.clone(),
        cells,
        estimator: est.name().to_string(),
        target: est.target(),
        failures: samples.failures.clone(),
    })
}

/// Generates fresh grid channels and aggregates `est` over them.
pub fn error_grid<E: Estimator + ?Sized>(est: &E, cfg: &GridConfig, table: &CalibrationTable) -> Result<ErrorGrid> {
    aggregate(est, cfg, &generate_grid_samples(cfg, table)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tiny_cfg() -> GridConfig {
        GridConfig {
            sigma_axis_db: vec![1.0, 5.0],
            snr_axis_db: vec![6.0, 20.0],
            channels_per_cell: 4,
            min_count: 5,
            link: LinkConfig { sections: 10, ..LinkConfig::default() },
            calibration_draws: 32,
            master_seed: 3,
            ..GridConfig::default()
        }
    }

    fn sample(sigma: f64, snr: f64) -> Sample {
        Sample { features: [1.0; 12], label_sigma_mdg_db: sigma, label_snr_db: snr, channel_seed: 0, sections: 50 }
    }

    #[test]
    fn mse_of_echo_estimators() {
        let samples = vec![sample(1.0, 10.0), sample(3.0, 12.0)];
        let perfect = EchoEstimator { target: Target::Snr, offset_db: 0.0 };
        assert_eq!(evaluate_mse(&perfect, &samples).unwrap().mse, 0.0);
        let offset = EchoEstimator { target: Target::SigmaMdg, offset_db: 1.0 };
        let r = evaluate_mse(&offset, &samples).unwrap();
        assert_eq!((r.mse, r.mae, r.n), (1.0, 1.0, 2));
        assert!(evaluate_mse(&perfect, &[]).is_err());
    }

    #[test]
    fn default_axes() {
        let cfg = GridConfig::default();
        assert_eq!(cfg.sigma_axis_db.len(), 12);
        assert_eq!(cfg.snr_axis_db.len(), 18);
        assert!((cfg.sigma_axis_db[11] - 6.0).abs() < 1e-12 && (cfg.snr_axis_db[17] - 22.0).abs() < 1e-12);
        let bad = GridConfig { snr_axis_db: vec![5.0, 5.0], ..GridConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn tiny_grid_signs_and_namespaces() {
        let cfg = tiny_cfg();
        let table = cfg.calibration_table().unwrap();
        let samples = generate_grid_samples(&cfg, &table).unwrap();
        assert!(samples.failures.is_empty());
        assert_eq!(samples.samples.len(), 16);
        for gs in &samples.samples {
            assert_eq!(Namespace::of_channel_seed(gs.sample.channel_seed), Namespace::Grid.tag());
            assert!((gs.sample.label_sigma_mdg_db - cfg.sigma_axis_db[gs.sigma_index]).abs() < 1e-9);
        }
        let grid = aggregate(&ConventionalSigmaMdg, &cfg, &samples).unwrap();
        assert!(grid.cells.iter().all(|c| c.count == 4 && c.sparse));
        // MMSE compresses the gain spread: the conventional estimate is low.
        assert!(grid.cell(1, 0).mean_signed_error_db > 0.3);
        assert!(grid.cell(1, 0).mean_signed_error_db > grid.cell(1, 1).mean_signed_error_db);
        assert_eq!(grid.name(), "conventional_sigma_mdg");
        let echo = aggregate(&EchoEstimator { target: Target::Snr, offset_db: -0.5 }, &cfg, &samples).unwrap();
        assert!(echo.cells.iter().all(|c| (c.mean_signed_error_db - 0.5).abs() < 1e-12));
        assert_eq!(echo.fraction_within(0.5), 1.0);
        assert!(echo.find_cell(5.0, 20.0).is_some() && echo.find_cell(5.5, 20.0).is_none());
    }
}
