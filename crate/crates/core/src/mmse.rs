//! Closed-form MMSE equalizer analytics and the conventional estimators.
//!
//! For a frequency-flat channel `H` and linear SNR `s`:
//!
//! ```text
//! W     = (I/s + HᴴH)⁻¹ Hᴴ
//! SINR_i = 1 / [(I + s'·HᴴH)⁻¹]_ii − 1,     s' = 1 / (1/s + 1/SINR_imp)
//! ```
//!
//! The conventional `σ_mdg` estimate reads the eigenvalues of `W⁻¹W⁻ᴴ` as if
//! `W⁻¹` were `H`; the conventional SNR estimate averages the per-stream
//! SINRs. Both are biased once MDG is large, which is what the networks in
//! [`crate::mlp`] correct.

use alloc::vec::Vec;

use crate::linalg::{hermitian_eigenvalues, invert, ComplexMatrix};
use crate::units::{db_to_linear, linear_to_db, mean_std};
use crate::{Error, Result};

/// Operating point at the receiver input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    /// Total signal power over total noise power across all streams, dB.
    pub snr_db: f64,
    /// Back-to-back implementation-penalty SINR in dB; `None` is unbounded.
    pub sinr_imp_db: Option<f64>,
}

impl SnrPoint {
    pub fn new(snr_db: f64) -> Self {
        SnrPoint { snr_db, sinr_imp_db: None }
    }

    pub fn with_penalty(snr_db: f64, sinr_imp_db: f64) -> Self {
        SnrPoint { snr_db, sinr_imp_db: Some(sinr_imp_db) }
    }

    fn validate(&self) -> Result<()> {
        if !self.snr_db.is_finite() {
            return Err(Error::NonFinite("snr_db"));
        }
        if let Some(imp) = self.sinr_imp_db {
            if !imp.is_finite() {
                return Err(Error::NonFinite("sinr_imp_db"));
            }
        }
        Ok(())
    }
}

/// Per-stream linear SINRs.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrVector(pub Vec<f64>);

impl SinrVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::NonFinite("SINR vector (entries must be finite and positive)"));
        }
        Ok(SinrVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `SNR' = 1/(SNR⁻¹ + SINR_imp⁻¹)`, linear.
pub fn effective_snr(p: &SnrPoint) -> f64 {
    let snr = db_to_linear(p.snr_db);
    match p.sinr_imp_db {
        None => snr,
        Some(imp) => 1.0 / (1.0 / snr + 1.0 / db_to_linear(imp)),
    }
}

/// `W = (I/SNR + HᴴH)⁻¹ Hᴴ`.
pub fn mmse_matrix(h: &ComplexMatrix, snr_linear: f64) -> Result<ComplexMatrix> {
    let n = h.require_square()?;
    if !(snr_linear > 0.0) || !snr_linear.is_finite() {
        return Err(Error::InvalidConfig(alloc::format!("SNR must be positive and finite, got {snr_linear}")));
    }
    let regularized = ComplexMatrix::identity(n).scale_real(1.0 / snr_linear).add(&h.gram());
    Ok(&invert(&regularized)? * &h.adjoint())
}

/// Eigenvalues of `W⁻¹(W⁻¹)ᴴ`, descending: the equalizer's view of the
/// channel's power gains.
pub fn equalizer_eigenvalues(w: &ComplexMatrix) -> Result<Vec<f64>> {
    let w_inv = invert(w)?;
    let mut eig = hermitian_eigenvalues(&w_inv.outer_gram())?;
    if !(eig[0] > 0.0) {
        return Err(Error::SingularChannel { eigenvalue: eig[0] });
    }
    eig.reverse();
    Ok(eig)
}

/// Population std of the equalizer eigenvalues in dB, equalizer built at
/// the effective SNR.
pub fn conventional_sigma_mdg_estimate(h: &ComplexMatrix, p: &SnrPoint) -> Result<f64> {
    p.validate()?;
    let eig = equalizer_eigenvalues(&mmse_matrix(h, effective_snr(p))?)?;
    Ok(sigma_db_of_gains(&eig))
}

/// Population std, in dB, of linear power gains.
pub fn sigma_db_of_gains(gains: &[f64]) -> f64 {
    let db: Vec<f64> = gains.iter().map(|&g| linear_to_db(g)).collect();
    mean_std(&db).1
}

/// Post-MMSE SINR of every stream.
pub fn sinr_per_stream(h: &ComplexMatrix, p: &SnrPoint) -> Result<SinrVector> {
    p.validate()?;
    let n = h.require_square()?;
    let snr_eff = effective_snr(p);
    let a = ComplexMatrix::identity(n).add(&h.gram().scale_real(snr_eff));
    let inv = invert(&a)?;
    SinrVector::new((0..n).map(|i| 1.0 / inv[(i, i)].re - 1.0).collect())
}

/// `10·log10` of the arithmetic mean of the linear SINRs.
pub fn conventional_snr_estimate(s: &SinrVector) -> f64 {
    linear_to_db(s.0.iter().sum::<f64>() / s.0.len() as f64)
}
