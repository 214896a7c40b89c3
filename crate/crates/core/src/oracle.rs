//! Symbol-level Monte Carlo check of the closed-form SINR.
//!
//! QPSK symbols go through `y = Hx + n`, are equalized with the MMSE matrix
//! and each stream's SINR is measured with a single-coefficient
//! least-squares fit against the transmitted reference. With
//! `‖H‖_F² = D` and unit-power streams, a per-stream noise variance of
//! `1/SNR` makes total signal over total noise equal to `SNR`.

use alloc::vec::Vec;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{ComplexMatrix, C64};
use crate::mmse::{mmse_matrix, sinr_per_stream, SnrPoint};
use crate::seed::{channel_stream, Stream};
use crate::units::{db_to_linear, linear_to_db};
use crate::{Error, Result};

pub const MIN_SYMBOLS: usize = 1000;
/// Returned by [`ls_sinr_estimate`] when the residual vanishes (noise-free
/// input): 150 dB.
pub const LS_SINR_CEILING: f64 = 1e15;
const POWER_NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct TransmissionRun {
    pub h: ComplexMatrix,
    pub snr_db: f64,
    pub n_symbols: usize,
    /// One vector per stream.
    pub tx_symbols: Vec<Vec<C64>>,
    pub rx_symbols: Vec<Vec<C64>>,
    pub eq_symbols: Vec<Vec<C64>>,
    pub seed: u64,
}

fn qpsk<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let a = core::f64::consts::FRAC_1_SQRT_2;
    let re = if rng.random::<bool>() { a } else { -a };
    let im = if rng.random::<bool>() { a } else { -a };
    C64::new(re, im)
}

/// Transmits `n_symbols` QPSK vectors over `h` at `snr_db` and equalizes
/// them with the MMSE matrix for the same SNR.
pub fn simulate_transmission<R: RngCore + ?Sized>(
    h: &ComplexMatrix,
    snr_db: f64,
    n_symbols: usize,
    rng: &mut R,
) -> Result<TransmissionRun> {
    let d = h.require_square()?;
    let f = h.frobenius_norm_sqr();
    if (f - d as f64).abs() > POWER_NORMALIZATION_TOL * d as f64 {
        return Err(Error::UnnormalizedChannel { frobenius_sqr: f, expected: d as f64 });
    }
    if n_symbols < MIN_SYMBOLS {
        return Err(Error::TooFewSymbols { found: n_symbols, minimum: MIN_SYMBOLS });
    }
    let seed = rng.next_u64();
    let mut rng: Stream = channel_stream(seed);
    let snr = db_to_linear(snr_db);
    let w = mmse_matrix(h, snr)?;
    let noise_std = (0.5 / snr).sqrt();

    let mut tx = alloc::vec![Vec::with_capacity(n_symbols); d];
    let mut rx = alloc::vec![Vec::with_capacity(n_symbols); d];
    let mut eq = alloc::vec![Vec::with_capacity(n_symbols); d];
    let mut x = alloc::vec![C64::new(0.0, 0.0); d];
    for _ in 0..n_symbols {
        for xi in x.iter_mut() {
            *xi = qpsk(&mut rng);
        }
        let mut y = h.mul_vec(&x);
        for yi in y.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *yi += C64::new(re, im) * noise_std;
        }
        let z = w.mul_vec(&y);
        for i in 0..d {
            tx[i].push(x[i]);
            rx[i].push(y[i]);
            eq[i].push(z[i]);
        }
    }
    Ok(TransmissionRun {
        h: h.clone(),
        snr_db,
        n_symbols,
        tx_symbols: tx,
        rx_symbols: rx,
        eq_symbols: eq,
        seed,
    })
}

/// Single-coefficient least-squares SINR of `eq_stream` against the known
/// `ref_stream`: `ĥ = Σ y·x̄ / Σ |x|²`, `SINR = |ĥ|²·mean|x|² / mean|y − ĥx|²`.
///
/// A vanishing residual returns [`LS_SINR_CEILING`].
pub fn ls_sinr_estimate(eq_stream: &[C64], ref_stream: &[C64]) -> Result<f64> {
    ls_fit(eq_stream, ref_stream).map(|(_, sinr)| sinr)
}

/// The LS coefficient `ĥ` and the SINR.
pub fn ls_fit(eq_stream: &[C64], ref_stream: &[C64]) -> Result<(C64, f64)> {
    if eq_stream.len() != ref_stream.len() {
        return Err(Error::DimensionMismatch { expected: ref_stream.len(), found: eq_stream.len() });
    }
    if ref_stream.len() < MIN_SYMBOLS {
        return Err(Error::TooFewSymbols { found: ref_stream.len(), minimum: MIN_SYMBOLS });
    }
    let n = ref_stream.len() as f64;
    let ref_power: f64 = ref_stream.iter().map(|x| x.norm_sqr()).sum();
    if !(ref_power > 0.0) {
        return Err(Error::ZeroPowerReference);
    }
    let cross: C64 = eq_stream.iter().zip(ref_stream).map(|(y, x)| y * x.conj()).sum();
    let coeff = cross / ref_power;
    let residual: f64 = eq_stream.iter().zip(ref_stream).map(|(y, x)| (y - coeff * x).norm_sqr()).sum::<f64>() / n;
    let signal = coeff.norm_sqr() * ref_power / n;
    let sinr = if residual > 0.0 { (signal / residual).min(LS_SINR_CEILING) } else { LS_SINR_CEILING };
    Ok((coeff, sinr))
}

/// Per-stream LS SINR estimates of a run.
pub fn measured_sinrs(run: &TransmissionRun) -> Result<Vec<f64>> {
    run.eq_symbols.iter().zip(&run.tx_symbols).map(|(y, x)| ls_sinr_estimate(y, x)).collect()
}

/// Largest per-stream `|LS SINR − closed-form SINR|` in dB.
///
/// The transmission itself only models `p.snr_db`; an implementation
/// penalty in `p` enters the closed form alone and so shows up as a
/// deviation.
pub fn oracle_check<R: RngCore + ?Sized>(h: &ComplexMatrix, p: &SnrPoint, n_symbols: usize, rng: &mut R) -> Result<f64> {
    let run = simulate_transmission(h, p.snr_db, n_symbols, rng)?;
    let measured = measured_sinrs(&run)?;
    let analytic = sinr_per_stream(h, p)?;
    Ok(measured
        .iter()
        .zip(analytic.as_slice())
        .map(|(m, a)| (linear_to_db(*m) - linear_to_db(*a)).abs())
        .fold(0.0, f64::max))
}
