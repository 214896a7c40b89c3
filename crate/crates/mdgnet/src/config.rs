//! Run configuration: one flat TOML document covering link, dataset,
//! training, grid and oracle settings. Every key is optional; missing keys
//! take the defaults below.
//!
//! ```toml
//! seed = 1
//! sections = 50
//! n_channels = 615
//! sigma_mdg_low_db = 0.2
//! sigma_mdg_high_db = 6.2
//! snr_low_db = 5.0
//! snr_high_db = 22.0
//! snr_points = 20
//! epochs = 500
//! grid_channels_per_cell = 50
//! ```

use std::path::{Path, PathBuf};

use mdgnet_core::channel::{LinkConfig, CALIBRATION_DRAWS, DEFAULT_SECTIONS};
use mdgnet_core::dataset::{uniform_points, DatasetConfig};
use mdgnet_core::grid::GridConfig;
use mdgnet_core::mlp::TrainConfig;
use mdgnet_core::oracle::MIN_SYMBOLS;
use mdgnet_core::SPATIAL_MODES;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MDGNET_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "mdgnet-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed for every random stream of the run.
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,

    pub num_modes: usize,
    /// Amplified sections K.
    pub sections: usize,
    pub normalize_power: bool,

    pub n_channels: usize,
    pub sigma_mdg_low_db: f64,
    pub sigma_mdg_high_db: f64,
    pub snr_low_db: f64,
    pub snr_high_db: f64,
    pub snr_points: usize,
    /// Explicit SNR list; overrides the low/high/points triple.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_values_db: Option<Vec<f64>>,
    /// Back-to-back implementation penalty; absent means unbounded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sinr_imp_db: Option<f64>,
    pub train_fraction: f64,
    pub calibration_draws: usize,

    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Defaults to `seed`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_seed: Option<u64>,
    /// Defaults to `seed`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shuffle_seed: Option<u64>,

    pub grid_sigma_low_db: f64,
    pub grid_sigma_high_db: f64,
    pub grid_sigma_step_db: f64,
    pub grid_snr_low_db: f64,
    pub grid_snr_high_db: f64,
    pub grid_snr_step_db: f64,
    pub grid_channels_per_cell: usize,
    pub grid_min_count: usize,

    pub oracle_sigma_mdg_db: Vec<f64>,
    pub oracle_snr_db: Vec<f64>,
    pub oracle_symbols: usize,
    pub oracle_threshold_db: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        RunConfig {
            seed: 1,
            out_dir: None,
            num_modes: SPATIAL_MODES,
            sections: DEFAULT_SECTIONS,
            normalize_power: true,
            n_channels: 615,
            sigma_mdg_low_db: 0.2,
            sigma_mdg_high_db: 6.2,
            snr_low_db: 5.0,
            snr_high_db: 22.0,
            snr_points: 20,
            snr_values_db: None,
            sinr_imp_db: None,
            train_fraction: 0.9,
            calibration_draws: CALIBRATION_DRAWS,
            epochs: train.epochs,
            batch_size: train.batch_size,
            learning_rate: train.learning_rate,
            adam_beta1: train.adam_beta1,
            adam_beta2: train.adam_beta2,
            adam_epsilon: train.adam_epsilon,
            init_seed: None,
            shuffle_seed: None,
            grid_sigma_low_db: 0.5,
            grid_sigma_high_db: 6.0,
            grid_sigma_step_db: 0.5,
            grid_snr_low_db: 5.0,
            grid_snr_high_db: 22.0,
            grid_snr_step_db: 1.0,
            grid_channels_per_cell: 50,
            grid_min_count: 10,
            oracle_sigma_mdg_db: vec![0.0, 3.0, 6.0],
            oracle_snr_db: vec![5.0, 10.0, 20.0],
            oracle_symbols: 200_000,
            oracle_threshold_db: 0.15,
        }
    }
}

/// `lo, lo + step, …, hi`; `hi − lo` must be a whole number of steps.
fn stepped_axis(name: &str, lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 {
        return Err(Error::Config(format!("{name}: bounds and step must be finite with step > 0")));
    }
    if hi < lo {
        return Err(Error::Config(format!("{name}: high {hi} is below low {lo}")));
    }
    let steps = (hi - lo) / step;
    let n = steps.round();
    if (steps - n).abs() > 1e-9 * steps.max(1.0) {
        return Err(Error::Config(format!("{name}: range {lo}..{hi} is not a whole number of {step} steps")));
    }
    Ok(uniform_points(lo, hi, n as usize + 1))
}

impl RunConfig {
    /// Reads a TOML file; a missing file is a usage error.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    pub fn link(&self) -> LinkConfig {
        LinkConfig { num_modes: self.num_modes, sections: self.sections, sigma_g: 0.0, normalize_power: self.normalize_power }
    }

    pub fn snr_values(&self) -> Vec<f64> {
        match &self.snr_values_db {
            Some(v) => v.clone(),
            None if self.snr_points == 1 => vec![self.snr_low_db],
            None => uniform_points(self.snr_low_db, self.snr_high_db, self.snr_points),
        }
    }

    pub fn dataset(&self) -> DatasetConfig {
        DatasetConfig {
            n_channels: self.n_channels,
            sigma_mdg_range_db: (self.sigma_mdg_low_db, self.sigma_mdg_high_db),
            snr_values_db: self.snr_values(),
            link: self.link(),
            sinr_imp_db: self.sinr_imp_db,
            master_seed: self.seed,
            train_fraction: self.train_fraction,
            calibration_draws: self.calibration_draws,
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_epsilon: self.adam_epsilon,
            shuffle_seed: self.shuffle_seed.unwrap_or(self.seed),
            init_seed: self.init_seed.unwrap_or(self.seed),
        }
    }

    pub fn grid(&self) -> Result<GridConfig> {
        Ok(GridConfig {
            sigma_axis_db: stepped_axis("grid sigma_mdg axis", self.grid_sigma_low_db, self.grid_sigma_high_db, self.grid_sigma_step_db)?,
            snr_axis_db: stepped_axis("grid snr axis", self.grid_snr_low_db, self.grid_snr_high_db, self.grid_snr_step_db)?,
            channels_per_cell: self.grid_channels_per_cell,
            min_count: self.grid_min_count,
            link: self.link(),
            sinr_imp_db: self.sinr_imp_db,
            master_seed: self.seed,
            calibration_draws: self.calibration_draws,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let core = |e: mdgnet_core::Error| Error::Config(e.to_string());
        if self.sigma_mdg_high_db < self.sigma_mdg_low_db {
            return Err(Error::Config(format!(
                "sigma_mdg range: high {} is below low {}",
                self.sigma_mdg_high_db, self.sigma_mdg_low_db
            )));
        }
        if self.snr_values_db.is_none() && self.snr_points > 1 && self.snr_high_db < self.snr_low_db {
            return Err(Error::Config(format!("snr range: high {} is below low {}", self.snr_high_db, self.snr_low_db)));
        }
        if self.snr_values_db.is_none() && self.snr_points == 0 {
            return Err(Error::Config("snr_points must be at least 1".into()));
        }
        self.dataset().validate().map_err(core)?;
        self.train().validate().map_err(core)?;
        self.grid()?.validate().map_err(core)?;
        if self.oracle_symbols < MIN_SYMBOLS {
            return Err(Error::Config(format!("oracle_symbols {} is below the minimum {MIN_SYMBOLS}", self.oracle_symbols)));
        }
        if self.oracle_sigma_mdg_db.iter().chain(&self.oracle_snr_db).any(|v| !v.is_finite())
            || self.oracle_sigma_mdg_db.iter().any(|&s| s < 0.0)
        {
            return Err(Error::Config("oracle matrix entries must be finite, sigma_mdg non-negative".into()));
        }
        if !(self.oracle_threshold_db > 0.0) {
            return Err(Error::Config("oracle_threshold_db must be positive".into()));
        }
        Ok(())
    }

    /// Output directory: the config value, else `$MDGNET_OUT_DIR`, else
    /// `./mdgnet-out`.
    pub fn resolved_out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_core_defaults() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.dataset(), DatasetConfig::default());
        assert_eq!(cfg.train(), TrainConfig::default());
        let grid = cfg.grid().unwrap();
        assert_eq!(grid, GridConfig::default());
        assert_eq!(cfg.dataset().total_samples(), 12_300);
    }

    #[test]
    fn empty_document_is_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig { sinr_imp_db: Some(25.0), snr_values_db: Some(vec![5.0, 9.5]), ..RunConfig::default() };
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_documents() {
        for text in [
            "sigma_mdg_low_db = 4.0\nsigma_mdg_high_db = 2.0",
            "no_such_key = 1",
            "oracle_symbols = 10",
            "grid_sigma_step_db = 0.7",
            "epochs = 0",
            "seed = \"one\"",
        ] {
            assert!(matches!(RunConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }
}
