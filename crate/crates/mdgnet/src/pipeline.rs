//! Parallel drivers over the core crate. Work is split by channel or cell
//! index, each with its own derived seed, and results are collected in index
//! order, so output never depends on the thread count.

use mdgnet_core::channel::ChannelDraw;
use mdgnet_core::dataset::{DatasetConfig, DatasetGenerator, Sample};
use mdgnet_core::grid::{cell_samples, collect_cell, GridConfig, GridSamples};
use mdgnet_core::mmse::SnrPoint;
use mdgnet_core::oracle::oracle_check;
use mdgnet_core::seed::{channel_seed, channel_stream, stream, Namespace};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;

pub fn generate_samples(cfg: &DatasetConfig) -> Result<Vec<Sample>> {
    let generator = DatasetGenerator::new(cfg.clone())?;
    let per_channel: Vec<Vec<Sample>> =
        (0..cfg.n_channels).into_par_iter().map(|j| generator.channel_samples(j)).collect::<Result<_, _>>()?;
    Ok(per_channel.into_iter().flatten().collect())
}

pub fn grid_samples(cfg: &GridConfig) -> Result<GridSamples> {
    cfg.validate()?;
    let table = cfg.calibration_table()?;
    let n_snr = cfg.snr_axis_db.len();
    let cells: Vec<_> =
        (0..cfg.cell_count()).into_par_iter().map(|k| cell_samples(cfg, &table, k / n_snr, k % n_snr)).collect();
    let mut out = GridSamples::default();
    for (k, cell) in cells.into_iter().enumerate() {
        collect_cell(&mut out, k / n_snr, k % n_snr, cell);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCase {
    pub sigma_mdg_db: f64,
    pub snr_db: f64,
    pub channel_seed: u64,
    /// Largest per-stream |LS SINR − closed form| in dB.
    pub max_deviation_db: f64,
}

/// Symbol-level check of the closed-form SINR over the configured
/// (`σ_mdg`, SNR) matrix, one fresh channel per case.
pub fn oracle_matrix(cfg: &RunConfig) -> Result<Vec<OracleCase>> {
    let link = cfg.link();
    let cases: Vec<(f64, f64)> = cfg
        .oracle_sigma_mdg_db
        .iter()
        .flat_map(|&s| cfg.oracle_snr_db.iter().map(move |&r| (s, r)))
        .collect();
    cases
        .par_iter()
        .enumerate()
        .map(|(k, &(sigma_mdg_db, snr_db))| {
            let seed = channel_seed(cfg.seed, Namespace::Oracle, k as u64, 0);
            let draw = ChannelDraw::sample(link.streams(), link.sections, &mut channel_stream(seed))?;
            let (_, h) = draw.fit(sigma_mdg_db, 0.0, true)?;
            let p = SnrPoint { snr_db, sinr_imp_db: cfg.sinr_imp_db };
            let mut rng = stream(cfg.seed, Namespace::Oracle, k as u64);
            let max_deviation_db = oracle_check(&h, &p, cfg.oracle_symbols, &mut rng)?;
            Ok(OracleCase { sigma_mdg_db, snr_db, channel_seed: seed, max_deviation_db })
        })
        .collect()
}
