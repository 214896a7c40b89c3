//! Multisection random channel model of a strongly coupled SDM link.
//!
//! A link of `K` amplified spans is the product of `K` sections, each a
//! Haar unitary, a diagonal of log-normal power gains and another Haar
//! unitary:
//!
//! ```text
//! H = Π_k U_k · diag(exp(g_k / 2)) · V_kᴴ,    g_k,i ~ N(0, σ_g²) nepers
//! ```
//!
//! The accumulated MDG of a realization is measured by [`sigma_mdg`], the
//! population standard deviation of the eigenvalues of `HHᴴ` in dB.

use alloc::vec::Vec;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{hermitian_eigenvalues, sample_haar_unitary, ComplexMatrix};
use crate::seed::{channel_stream, Stream};
use crate::units::{linear_to_db, mean_std, DB_PER_NEPER};
use crate::{Error, Result};

/// 2,500 km at 50 km amplifier spacing.
pub const DEFAULT_SECTIONS: usize = 50;
/// Ensemble size used by [`calibrate_sigma_g`].
pub const CALIBRATION_DRAWS: usize = 1000;
/// `HHᴴ` eigenvalues below this fraction of the largest count as zero.
const SINGULAR_RATIO: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub num_modes: usize,
    pub sections: usize,
    /// Per-section gain standard deviation, nepers of log-power.
    pub sigma_g: f64,
    pub normalize_power: bool,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            num_modes: crate::SPATIAL_MODES,
            sections: DEFAULT_SECTIONS,
            sigma_g: 0.0,
            normalize_power: true,
        }
    }
}

impl LinkConfig {
    /// Total streams, two polarizations per spatial mode.
    pub fn streams(&self) -> usize {
        2 * self.num_modes
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_modes == 0 {
            return Err(Error::InvalidConfig("num_modes must be at least 1".into()));
        }
        if self.sections == 0 {
            return Err(Error::InvalidConfig("section count K must be at least 1".into()));
        }
        if !(self.sigma_g >= 0.0) || !self.sigma_g.is_finite() {
            return Err(Error::InvalidConfig(alloc::format!(
                "sigma_g must be finite and non-negative, got {}",
                self.sigma_g
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: ComplexMatrix,
    pub sigma_mdg_db: f64,
    pub seed: u64,
}

/// One section with explicit gains: `U · diag(exp(g/2)) · Vᴴ`.
#[derive(Debug, Clone)]
pub struct Section {
    pub input: ComplexMatrix,
    /// Log-power gains in nepers.
    pub log_gains: Vec<f64>,
    pub output: ComplexMatrix,
}

/// `σ_mdg` in dB: population standard deviation of `10·log10(λ_i²)` over the
/// eigenvalues `λ_i²` of `HHᴴ`.
pub fn sigma_mdg(h: &ComplexMatrix) -> Result<f64> {
    h.require_square()?;
    let eig = hermitian_eigenvalues(&h.outer_gram())?;
    let largest = eig[eig.len() - 1];
    if !(eig[0] > largest * SINGULAR_RATIO) {
        return Err(Error::SingularChannel { eigenvalue: eig[0] });
    }
    let db: Vec<f64> = eig.iter().map(|&l| linear_to_db(l)).collect();
    Ok(mean_std(&db).1)
}

/// [`sigma_mdg`] for trial gains: a numerically singular product means the
/// trial is far above any sensible target, so it maps to `+∞`.
fn saturating_sigma_mdg(h: &ComplexMatrix) -> Result<f64> {
    match sigma_mdg(h) {
        Err(Error::SingularChannel { .. }) => Ok(f64::INFINITY),
        other => other,
    }
}

/// Composes explicit sections into a channel matrix.
pub fn channel_from_sections(sections: &[Section], normalize_power: bool) -> Result<ComplexMatrix> {
    let first = sections
        .first()
        .ok_or_else(|| Error::InvalidConfig("at least one section is required".into()))?;
    let n = first.input.require_square()?;
    let mut h = ComplexMatrix::identity(n);
    for s in sections {
        if s.log_gains.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: s.log_gains.len() });
        }
        let mut left = &h * &s.input;
        let gains: Vec<f64> = s.log_gains.iter().map(|g| (g / 2.0).exp()).collect();
        left.scale_columns(&gains);
        h = &left * &s.output.adjoint();
    }
    Ok(if normalize_power { normalize(&h) } else { h })
}

/// Scales `h` so that `‖h‖_F² = D`.
pub fn normalize(h: &ComplexMatrix) -> ComplexMatrix {
    let f = h.frobenius_norm_sqr();
    h.scale_real((h.rows() as f64 / f).sqrt())
}

/// The random ingredients of one realization, independent of `σ_g`.
///
/// Adjacent unitaries are pre-multiplied (`V_kᴴ U_{k+1}`), so realizing the
/// channel at a given `σ_g` costs one diagonal scaling and one product per
/// section.
#[derive(Debug, Clone)]
pub struct ChannelDraw {
    links: Vec<ComplexMatrix>,
    unit_gains: Vec<Vec<f64>>,
}

impl ChannelDraw {
    pub fn sample<R: Rng + ?Sized>(streams: usize, sections: usize, rng: &mut R) -> Result<Self> {
        if sections == 0 {
            return Err(Error::InvalidConfig("section count K must be at least 1".into()));
        }
        let mut links = Vec::with_capacity(sections + 1);
        let mut unit_gains = Vec::with_capacity(sections);
        let mut pending: Option<ComplexMatrix> = None;
        for _ in 0..sections {
            let u = sample_haar_unitary(streams, rng)?;
            let z: Vec<f64> = (0..streams).map(|_| StandardNormal.sample(rng)).collect();
            let v = sample_haar_unitary(streams, rng)?;
            links.push(match pending.take() {
                Some(prev_vh) => &prev_vh * &u,
                None => u,
            });
            unit_gains.push(z);
            pending = Some(v.adjoint());
        }
        links.push(pending.expect("at least one section"));
        Ok(ChannelDraw { links, unit_gains })
    }

    pub fn streams(&self) -> usize {
        self.links[0].rows()
    }

    pub fn sections(&self) -> usize {
        self.unit_gains.len()
    }

    /// The channel matrix for per-section gain deviation `sigma_g`.
    pub fn realize(&self, sigma_g: f64, normalize_power: bool) -> ComplexMatrix {
        let mut h = self.links[0].clone();
        let mut gains = alloc::vec![0.0; self.streams()];
        for (z, link) in self.unit_gains.iter().zip(&self.links[1..]) {
            for (g, zi) in gains.iter_mut().zip(z) {
                *g = (sigma_g * zi / 2.0).exp();
            }
            h.scale_columns(&gains);
            h = &h * link;
        }
        if normalize_power {
            normalize(&h)
        } else {
            h
        }
    }

    /// Finds the `σ_g` at which this particular draw has `σ_mdg = target`,
    /// by bisection started from `hint`, and returns it with the channel.
    pub fn fit(&self, target_db: f64, hint: f64, normalize_power: bool) -> Result<(f64, ComplexMatrix)> {
        if !(target_db >= 0.0) || !target_db.is_finite() {
            return Err(Error::Calibration { target_db, reason: "target must be finite and non-negative" });
        }
        if target_db == 0.0 {
            return Ok((0.0, self.realize(0.0, normalize_power)));
        }
        let f = |s: f64| saturating_sigma_mdg(&self.realize(s, false));
        let mut hi = if hint > 0.0 && hint.is_finite() { hint } else { target_db / DB_PER_NEPER };
        let mut lo = 0.0;
        if f(hi)? >= target_db {
            lo = hi * 0.5;
            while f(lo)? >= target_db {
                hi = lo;
                lo *= 0.5;
                if lo < 1e-12 {
                    lo = 0.0;
                    break;
                }
            }
        } else {
            let mut doublings = 0;
            while f(hi)? < target_db {
                lo = hi;
                hi *= 2.0;
                doublings += 1;
                if doublings > 40 {
                    return Err(Error::Calibration { target_db, reason: "no gain brackets the target" });
                }
            }
        }
        for _ in 0..200 {
            if hi - lo <= 1e-13 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if f(mid)? < target_db {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let sigma_g = 0.5 * (lo + hi);
        Ok((sigma_g, self.realize(sigma_g, normalize_power)))
    }
}

/// Draws one channel from the multisection model.
///
/// A channel seed is taken from `rng` first, so the realization can be
/// regenerated from [`ChannelRealization::seed`] alone via
/// [`generate_channel_from_seed`].
pub fn generate_channel<R: RngCore + ?Sized>(cfg: &LinkConfig, rng: &mut R) -> Result<ChannelRealization> {
    let seed = rng.next_u64();
    generate_channel_from_seed(cfg, seed)
}

pub fn generate_channel_from_seed(cfg: &LinkConfig, seed: u64) -> Result<ChannelRealization> {
    cfg.validate()?;
    let mut rng: Stream = channel_stream(seed);
    let draw = ChannelDraw::sample(cfg.streams(), cfg.sections, &mut rng)?;
    let h = draw.realize(cfg.sigma_g, cfg.normalize_power);
    let sigma_mdg_db = sigma_mdg(&h)?;
    Ok(ChannelRealization { h, sigma_mdg_db, seed })
}

/// Common-random-number ensemble for calibrating `σ_g` against a target
/// ensemble-mean `σ_mdg`. Reusing the same draws for every trial `σ_g`
/// makes the mean a smooth function of `σ_g`, so bisection is well posed.
#[derive(Debug, Clone)]
pub struct Calibrator {
    sections: usize,
    draws: Vec<ChannelDraw>,
}

const MAX_BISECTIONS: usize = 60;
const CALIBRATION_REL_TOL: f64 = 1e-4;

impl Calibrator {
    pub fn new<R: Rng + ?Sized>(streams: usize, sections: usize, n_draws: usize, rng: &mut R) -> Result<Self> {
        if n_draws == 0 {
            return Err(Error::InvalidConfig("calibration needs at least one draw".into()));
        }
        let draws = (0..n_draws)
            .map(|_| ChannelDraw::sample(streams, sections, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Calibrator { sections, draws })
    }

    pub fn sections(&self) -> usize {
        self.sections
    }

    pub fn mean_sigma_mdg(&self, sigma_g: f64) -> Result<f64> {
        let mut total = 0.0;
        for d in &self.draws {
            total += saturating_sigma_mdg(&d.realize(sigma_g, false))?;
        }
        Ok(total / self.draws.len() as f64)
    }

    /// Monotone bisection over `σ_g` for the ensemble-mean target.
    pub fn calibrate(&self, target_db: f64) -> Result<f64> {
        if !(target_db >= 0.0) || !target_db.is_finite() {
            return Err(Error::Calibration { target_db, reason: "target must be finite and non-negative" });
        }
        if target_db == 0.0 {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = self.bracket(target_db)?;
        for _ in 0..MAX_BISECTIONS {
            if hi - lo <= CALIBRATION_REL_TOL * hi {
                return Ok(0.5 * (lo + hi));
            }
            let mid = 0.5 * (lo + hi);
            if self.mean_sigma_mdg(mid)? < target_db {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::Calibration { target_db, reason: "bisection budget exhausted" })
    }

    fn bracket(&self, target_db: f64) -> Result<(f64, f64)> {
        // Weak-MDG accumulation: σ_mdg ≈ σ_g·√K.
        let mut hi = target_db / DB_PER_NEPER / (self.sections as f64).sqrt();
        let mut lo = 0.0;
        for _ in 0..40 {
            if self.mean_sigma_mdg(hi)? >= target_db {
                return Ok((lo, hi));
            }
            lo = hi;
            hi *= 2.0;
        }
        Err(Error::Calibration { target_db, reason: "no gain brackets the target" })
    }

    /// Tabulates the ensemble-mean curve on `points` equally spaced gains
    /// covering targets up to `max_target_db`.
    pub fn table(&self, max_target_db: f64, points: usize) -> Result<CalibrationTable> {
        if points < 2 || !(max_target_db > 0.0) {
            return Err(Error::InvalidConfig("calibration table needs >= 2 points and a positive range".into()));
        }
        let (_, top) = self.bracket(max_target_db)?;
        let mut sigma_g = Vec::with_capacity(points);
        let mut mean_db = Vec::with_capacity(points);
        for i in 0..points {
            let s = top * i as f64 / (points - 1) as f64;
            let m = if i == 0 { 0.0 } else { self.mean_sigma_mdg(s)? };
            if let Some(&prev) = mean_db.last() {
                if m <= prev {
                    return Err(Error::Calibration { target_db: m, reason: "ensemble mean is not increasing in sigma_g" });
                }
            }
            sigma_g.push(s);
            mean_db.push(m);
        }
        Ok(CalibrationTable { sigma_g, mean_db })
    }
}

/// Tabulated, strictly increasing map from `σ_g` to ensemble-mean `σ_mdg`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    sigma_g: Vec<f64>,
    mean_db: Vec<f64>,
}

impl CalibrationTable {
    pub fn max_target_db(&self) -> f64 {
        self.mean_db[self.mean_db.len() - 1]
    }

    /// Inverse interpolation of the tabulated curve.
    pub fn sigma_g_for(&self, target_db: f64) -> Result<f64> {
        if !(target_db >= 0.0) || target_db > self.max_target_db() {
            return Err(Error::Calibration { target_db, reason: "target outside the tabulated range" });
        }
        let i = self.mean_db.partition_point(|&m| m < target_db);
        if i == 0 {
            return Ok(0.0);
        }
        let (m0, m1) = (self.mean_db[i - 1], self.mean_db[i]);
        let (s0, s1) = (self.sigma_g[i - 1], self.sigma_g[i]);
        Ok(s0 + (s1 - s0) * (target_db - m0) / (m1 - m0))
    }
}

/// Per-section `σ_g` whose ensemble-mean `σ_mdg` over [`CALIBRATION_DRAWS`]
/// draws matches `target_db`.
pub fn calibrate_sigma_g<R: Rng + ?Sized>(target_db: f64, sections: usize, streams: usize, rng: &mut R) -> Result<f64> {
    if target_db == 0.0 {
        return Ok(0.0);
    }
    Calibrator::new(streams, sections, CALIBRATION_DRAWS, rng)?.calibrate(target_db)
}
