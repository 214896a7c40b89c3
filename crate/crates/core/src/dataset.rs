//! Labelled analytic dataset.
//!
//! Each channel is drawn for a target `σ_mdg`, then swept over the SNR list;
//! every (channel, SNR) pair yields one [`Sample`] with twelve features: the
//! six equalizer eigenvalues and the six post-MMSE SINRs, both in dB and
//! sorted descending.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::channel::{sigma_mdg, CalibrationTable, Calibrator, ChannelDraw, LinkConfig, CALIBRATION_DRAWS};
use crate::linalg::ComplexMatrix;
use crate::mmse::{effective_snr, equalizer_eigenvalues, mmse_matrix, sinr_per_stream, SinrVector, SnrPoint};
use crate::seed::{channel_seed, channel_stream, stream, Namespace};
use crate::units::linear_to_db;
use crate::{Error, Result, FEATURES, STREAMS};

/// Index of the first SINR feature.
pub const SINR_OFFSET: usize = STREAMS;
/// Fresh channel draws tried per target before giving up.
pub const MAX_DRAW_ATTEMPTS: u32 = 8;
const CALIBRATION_TABLE_POINTS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Eigenvalue block (dB, descending) then SINR block (dB, descending).
    pub features: [f64; FEATURES],
    pub label_sigma_mdg_db: f64,
    pub label_snr_db: f64,
    pub channel_seed: u64,
    pub sections: usize,
}

impl Sample {
    pub fn eigen_block(&self) -> &[f64] {
        &self.features[..SINR_OFFSET]
    }

    pub fn sinr_block(&self) -> &[f64] {
        &self.features[SINR_OFFSET..]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub n_channels: usize,
    pub sigma_mdg_range_db: (f64, f64),
    pub snr_values_db: Vec<f64>,
    pub link: LinkConfig,
    pub sinr_imp_db: Option<f64>,
    pub master_seed: u64,
    pub train_fraction: f64,
    /// Ensemble size behind the calibration table.
    pub calibration_draws: usize,
}

impl Default for DatasetConfig {
    /// 615 channels × 20 SNR points = 12,300 samples.
    fn default() -> Self {
        DatasetConfig {
            n_channels: 615,
            sigma_mdg_range_db: (0.2, 6.2),
            snr_values_db: uniform_points(5.0, 22.0, 20),
            link: LinkConfig::default(),
            sinr_imp_db: None,
            master_seed: 1,
            train_fraction: 0.9,
            calibration_draws: CALIBRATION_DRAWS,
        }
    }
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn uniform_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl DatasetConfig {
    pub fn total_samples(&self) -> usize {
        self.n_channels * self.snr_values_db.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.link.validate()?;
        let (lo, hi) = self.sigma_mdg_range_db;
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidConfig(alloc::format!(
                "sigma_mdg range must satisfy 0 <= low < high, got ({lo}, {hi})"
            )));
        }
        if self.n_channels == 0 || self.snr_values_db.is_empty() {
            return Err(Error::InvalidConfig("need at least one channel and one SNR value".into()));
        }
        if self.snr_values_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("snr_values_db"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(alloc::format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.link.streams() != STREAMS {
            return Err(Error::InvalidConfig(alloc::format!(
                "features are defined for {STREAMS} streams ({} spatial modes), got {}",
                crate::SPATIAL_MODES,
                self.link.streams()
            )));
        }
        if self.calibration_draws == 0 {
            return Err(Error::InvalidConfig("calibration_draws must be at least 1".into()));
        }
        Ok(())
    }
}

/// dB conversion, per-block descending sort, eigenvalues then SINRs.
pub fn build_features(eq_eigs: &[f64], sinrs: &SinrVector) -> Result<[f64; FEATURES]> {
    let sinrs = sinrs.as_slice();
    for (found, _) in [(eq_eigs.len(), 0), (sinrs.len(), 1)] {
        if found != STREAMS {
            return Err(Error::DimensionMismatch { expected: STREAMS, found });
        }
    }
    let mut out = [0.0; FEATURES];
    for (index, &value) in eq_eigs.iter().chain(sinrs).enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveFeature { index, value });
        }
        out[index] = linear_to_db(value);
    }
    out[..SINR_OFFSET].sort_by(|a, b| b.total_cmp(a));
    out[SINR_OFFSET..].sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// Features of channel `h` at operating point `p`.
pub fn features_for(h: &ComplexMatrix, p: &SnrPoint) -> Result<[f64; FEATURES]> {
    let eig = equalizer_eigenvalues(&mmse_matrix(h, effective_snr(p))?)?;
    build_features(&eig, &sinr_per_stream(h, p)?)
}

/// Deterministic per-channel sample generation.
///
/// Channel `j` gets a stratified target `σ_mdg` in its own slice of the
/// configured range. A fresh multisection draw is taken from the channel's
/// seed, started at the ensemble-calibrated `σ_g` for the target, and
/// refined so that the realization's own `σ_mdg` lands on the target. The
/// label is the measured `σ_mdg` of the resulting matrix.
#[derive(Debug, Clone)]
pub struct DatasetGenerator {
    cfg: DatasetConfig,
    table: CalibrationTable,
}

impl DatasetGenerator {
    pub fn new(cfg: DatasetConfig) -> Result<Self> {
        cfg.validate()?;
        let table = calibration_table(
            &cfg.link,
            cfg.master_seed,
            cfg.calibration_draws,
            cfg.sigma_mdg_range_db.1,
        )?;
        Ok(DatasetGenerator { cfg, table })
    }

    pub fn with_table(cfg: DatasetConfig, table: CalibrationTable) -> Result<Self> {
        cfg.validate()?;
        Ok(DatasetGenerator { cfg, table })
    }

    pub fn config(&self) -> &DatasetConfig {
        &self.cfg
    }

    pub fn table(&self) -> &CalibrationTable {
        &self.table
    }

    /// Target `σ_mdg` of channel `j`: uniform within the `j`-th of
    /// `n_channels` equal strata of the range.
    pub fn target(&self, j: usize) -> f64 {
        let (lo, hi) = self.cfg.sigma_mdg_range_db;
        let u: f64 = stream(self.cfg.master_seed, Namespace::Targets, j as u64).random();
        lo + (hi - lo) * (j as f64 + u) / self.cfg.n_channels as f64
    }

    /// All SNR samples of channel `j`, in SNR-list order.
    pub fn channel_samples(&self, j: usize) -> Result<Vec<Sample>> {
        let target = self.target(j);
        let (seed, h) = fit_channel(&self.cfg.link, &self.table, self.cfg.master_seed, Namespace::Dataset, j as u64, target)?;
        let label = sigma_mdg(&h)?;
        self.cfg
            .snr_values_db
            .iter()
            .map(|&snr_db| {
                let p = SnrPoint { snr_db, sinr_imp_db: self.cfg.sinr_imp_db };
                Ok(Sample {
                    features: features_for(&h, &p)?,
                    label_sigma_mdg_db: label,
                    label_snr_db: snr_db,
                    channel_seed: seed,
                    sections: self.cfg.link.sections,
                })
            })
            .collect()
    }

    /// Rebuilds a sample's channel from its seed and label.
    pub fn regenerate_channel(&self, sample: &Sample) -> Result<ComplexMatrix> {
        let link = LinkConfig { sections: sample.sections, ..self.cfg.link.clone() };
        let draw = ChannelDraw::sample(link.streams(), link.sections, &mut channel_stream(sample.channel_seed))?;
        let hint = self.table.sigma_g_for(sample.label_sigma_mdg_db.min(self.table.max_target_db()))?;
        draw.fit(sample.label_sigma_mdg_db, hint, link.normalize_power).map(|(_, h)| h)
    }

    /// Recomputes a sample's features from its seed and label.
    pub fn regenerate_features(&self, sample: &Sample) -> Result<[f64; FEATURES]> {
        let h = self.regenerate_channel(sample)?;
        features_for(&h, &SnrPoint { snr_db: sample.label_snr_db, sinr_imp_db: self.cfg.sinr_imp_db })
    }

    /// The whole dataset, channel-major.
    pub fn generate(&self) -> Result<Vec<Sample>> {
        let mut out = Vec::with_capacity(self.cfg.total_samples());
        for j in 0..self.cfg.n_channels {
            out.extend(self.channel_samples(j)?);
        }
        Ok(out)
    }
}

/// Ensemble calibration table for `link`, covering targets up to
/// `max_target_db`. Drawn from the calibration namespace of `master_seed`.
pub fn calibration_table(link: &LinkConfig, master_seed: u64, draws: usize, max_target_db: f64) -> Result<CalibrationTable> {
    let mut rng = stream(master_seed, Namespace::Calibration, link.sections as u64);
    Calibrator::new(link.streams(), link.sections, draws, &mut rng)?.table(max_target_db, CALIBRATION_TABLE_POINTS)
}

/// Draws a channel for task `index` of `namespace` whose `σ_mdg` equals
/// `target_db`, retrying with fresh seeds if a draw cannot be fitted.
pub fn fit_channel(
    link: &LinkConfig,
    table: &CalibrationTable,
    master_seed: u64,
    namespace: Namespace,
    index: u64,
    target_db: f64,
) -> Result<(u64, ComplexMatrix)> {
    let hint = table.sigma_g_for(target_db)?;
    let mut last = Error::Calibration { target_db, reason: "no attempts made" };
    for attempt in 0..MAX_DRAW_ATTEMPTS {
        let seed = channel_seed(master_seed, namespace, index, attempt);
        let draw = ChannelDraw::sample(link.streams(), link.sections, &mut channel_stream(seed))?;
        match draw.fit(target_db, hint, link.normalize_power) {
            Ok((_, h)) => return Ok((seed, h)),
            Err(e @ Error::Calibration { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// Generates the full dataset sequentially.
pub fn generate_dataset(cfg: &DatasetConfig) -> Result<Vec<Sample>> {
    DatasetGenerator::new(cfg.clone())?.generate()
}

/// Per-feature mean and standard deviation of the training split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardizationStats {
    pub mean: [f64; FEATURES],
    pub std: [f64; FEATURES],
}

/// Features already mapped through [`StandardizationStats::apply`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardized(pub [f64; FEATURES]);

impl StandardizationStats {
    pub fn fit(samples: &[Sample]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::TooFewSamples { found: 0, minimum: 1 });
        }
        let n = samples.len() as f64;
        let mut mean = [0.0; FEATURES];
        let mut std = [0.0; FEATURES];
        for s in samples {
            for (m, f) in mean.iter_mut().zip(&s.features) {
                *m += f;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        for s in samples {
            for ((v, f), m) in std.iter_mut().zip(&s.features).zip(&mean) {
                *v += (f - m) * (f - m);
            }
        }
        for (index, v) in std.iter_mut().enumerate() {
            *v = (*v / n).sqrt();
            if !(*v > 0.0) {
                return Err(Error::DegenerateFeature { index });
            }
        }
        Ok(StandardizationStats { mean, std })
    }

    pub fn apply(&self, features: &[f64; FEATURES]) -> Standardized {
        let mut z = [0.0; FEATURES];
        for i in 0..FEATURES {
            z[i] = (features[i] - self.mean[i]) / self.std[i];
        }
        Standardized(z)
    }

    pub fn validate(&self) -> Result<()> {
        for (index, (m, s)) in self.mean.iter().zip(&self.std).enumerate() {
            if !m.is_finite() || !s.is_finite() {
                return Err(Error::NonFinite("standardization stats"));
            }
            if !(*s > 0.0) {
                return Err(Error::DegenerateFeature { index });
            }
        }
        Ok(())
    }
}

/// A split of samples whose features are either raw or standardized.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    samples: Vec<Sample>,
    standardized: bool,
}

impl FeatureSet {
    pub fn raw(samples: Vec<Sample>) -> Self {
        FeatureSet { samples, standardized: false }
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Standardizes features in place; refuses a second application.
    pub fn standardize(&mut self, stats: &StandardizationStats) -> Result<()> {
        if self.standardized {
            return Err(Error::AlreadyStandardized);
        }
        for s in &mut self.samples {
            s.features = stats.apply(&s.features).0;
        }
        self.standardized = true;
        Ok(())
    }

    /// Network inputs; only available once standardized.
    pub fn inputs(&self) -> Result<Vec<Standardized>> {
        if !self.standardized {
            return Err(Error::NotStandardized);
        }
        Ok(self.samples.iter().map(|s| Standardized(s.features)).collect())
    }
}

pub const MIN_SPLIT_SAMPLES: usize = 10;

/// Seeded shuffle, train/test split and train-only standardization.
///
/// Returns the raw test split alongside, since estimators that work on raw
/// features (the conventional ones, and [`crate::mlp::MlpParams::predict`])
/// need it.
pub fn split_and_standardize(samples: &[Sample], cfg: &DatasetConfig) -> Result<SplitData> {
    if samples.len() < MIN_SPLIT_SAMPLES {
        return Err(Error::TooFewSamples { found: samples.len(), minimum: MIN_SPLIT_SAMPLES });
    }
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(Error::InvalidConfig("train_fraction must lie in (0, 1)".into()));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut stream(cfg.master_seed, Namespace::Split, 0));
    let n_train = ((cfg.train_fraction * samples.len() as f64).round() as usize).clamp(1, samples.len() - 1);
    let train_raw: Vec<Sample> = order[..n_train].iter().map(|&i| samples[i].clone()).collect();
    let test_raw: Vec<Sample> = order[n_train..].iter().map(|&i| samples[i].clone()).collect();
    let stats = StandardizationStats::fit(&train_raw)?;
    let mut train = FeatureSet::raw(train_raw);
    let mut test = FeatureSet::raw(test_raw.clone());
    train.standardize(&stats)?;
    test.standardize(&stats)?;
    Ok(SplitData { train, test, test_raw, stats })
}

#[derive(Debug, Clone)]
pub struct SplitData {
    pub train: FeatureSet,
    pub test: FeatureSet,
    pub test_raw: Vec<Sample>,
    pub stats: StandardizationStats,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn small_cfg() -> DatasetConfig {
        DatasetConfig {
            n_channels: 6,
            snr_values_db: vec![5.0, 12.0, 22.0],
            link: LinkConfig { sections: 10, ..LinkConfig::default() },
            calibration_draws: 32,
            master_seed: 17,
            ..DatasetConfig::default()
        }
    }

    #[test]
    fn default_counts() {
        let cfg = DatasetConfig::default();
        assert_eq!(cfg.total_samples(), 12_300);
        assert_eq!(cfg.snr_values_db.len(), 20);
        assert_eq!(cfg.snr_values_db[0], 5.0);
        assert_eq!(cfg.snr_values_db[19], 22.0);
    }

    #[test]
    fn build_features_cases() {
        let f = build_features(&[1.0; 6], &SinrVector(vec![10.0; 6])).unwrap();
        assert_eq!(f, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0]);
        let f = build_features(&[4.0, 0.25, 1.0, 1.0, 1.0, 1.0], &SinrVector(vec![1.0; 6])).unwrap();
        assert!((f[0] - 6.0206).abs() < 1e-4 && (f[5] + 6.0206).abs() < 1e-4);
        assert!(f[1..5].iter().all(|&x| x == 0.0));
        let err = build_features(&[1.0, 1.0, 0.0, 1.0, 1.0, 1.0], &SinrVector(vec![1.0; 6]));
        assert!(matches!(err, Err(Error::NonPositiveFeature { index: 2, .. })));
        assert!(build_features(&[1.0; 5], &SinrVector(vec![1.0; 6])).is_err());
    }

    #[test]
    fn identity_channel_features() {
        let f = features_for(&ComplexMatrix::identity(6), &SnrPoint::new(15.0)).unwrap();
        assert!(f[..6].iter().all(|&x| (x - f[0]).abs() < 1e-12));
        assert!(f[6..].iter().all(|&x| (x - 15.0).abs() < 1e-9));
    }

    #[test]
    fn generation_is_deterministic_and_consistent() {
        let cfg = small_cfg();
        let gen = DatasetGenerator::new(cfg.clone()).unwrap();
        let a = gen.generate().unwrap();
        assert_eq!(a.len(), 18);
        assert_eq!(a, generate_dataset(&cfg).unwrap());
        for s in &a {
            let (lo, hi) = cfg.sigma_mdg_range_db;
            assert!(s.label_sigma_mdg_db > lo - 1e-9 && s.label_sigma_mdg_db < hi + 1e-9);
            assert!(s.eigen_block().windows(2).all(|w| w[0] >= w[1]));
            assert!(s.sinr_block().windows(2).all(|w| w[0] >= w[1]));
            let h = gen.regenerate_channel(s).unwrap();
            assert!((sigma_mdg(&h).unwrap() - s.label_sigma_mdg_db).abs() < 1e-9);
            let f = gen.regenerate_features(s).unwrap();
            for (x, y) in f.iter().zip(&s.features) {
                assert!((x - y).abs() < 1e-9);
            }
        }
        for ch in a.chunks(3) {
            for w in ch.windows(2) {
                for i in SINR_OFFSET..FEATURES {
                    assert!(w[1].features[i] >= w[0].features[i]);
                }
            }
        }
    }

    #[test]
    fn single_sample_dataset() {
        let cfg = DatasetConfig { n_channels: 1, snr_values_db: vec![11.0], ..small_cfg() };
        let samples = generate_dataset(&cfg).unwrap();
        assert_eq!(samples.len(), 1);
    }

    #[test]
    fn invalid_range_rejected() {
        let cfg = DatasetConfig { sigma_mdg_range_db: (3.0, 1.0), ..small_cfg() };
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        let cfg = DatasetConfig { link: LinkConfig { num_modes: 2, ..LinkConfig::default() }, ..small_cfg() };
        assert!(cfg.validate().is_err());
    }

    fn synthetic(n: usize) -> Vec<Sample> {
        (0..n)
            .map(|i| {
                let mut features = [0.0; FEATURES];
                for (k, f) in features.iter_mut().enumerate() {
                    *f = ((i * 7 + k * 13) % 23) as f64 - 4.0 + k as f64;
                }
                Sample { features, label_sigma_mdg_db: 1.0, label_snr_db: 10.0, channel_seed: i as u64, sections: 50 }
            })
            .collect()
    }

    #[test]
    fn split_sizes_and_moments() {
        let cfg = DatasetConfig::default();
        let samples = synthetic(12_300);
        let split = split_and_standardize(&samples, &cfg).unwrap();
        assert_eq!((split.train.len(), split.test.len()), (11_070, 1_230));
        assert_eq!(split.test_raw.len(), 1_230);
        let inputs = split.train.inputs().unwrap();
        for k in 0..FEATURES {
            let col: Vec<f64> = inputs.iter().map(|z| z.0[k]).collect();
            let (m, s) = crate::units::mean_std(&col);
            assert!(m.abs() < 1e-9 && (s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn double_standardization_refused() {
        let samples = synthetic(40);
        let stats = StandardizationStats::fit(&samples).unwrap();
        let mut set = FeatureSet::raw(samples);
        assert_eq!(set.inputs(), Err(Error::NotStandardized));
        set.standardize(&stats).unwrap();
        assert_eq!(set.standardize(&stats), Err(Error::AlreadyStandardized));
    }

    #[test]
    fn degenerate_feature_named() {
        let mut samples = synthetic(20);
        for s in &mut samples {
            s.features[4] = 2.5;
        }
        assert_eq!(StandardizationStats::fit(&samples), Err(Error::DegenerateFeature { index: 4 }));
        assert!(split_and_standardize(&samples[..9], &DatasetConfig::default()).is_err());
    }
}
