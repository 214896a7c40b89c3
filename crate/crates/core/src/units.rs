//! dB conversions. Public interfaces take dB; internal math is linear.


/// Reference noise bandwidth of an optical spectrum analyzer OSNR reading.
pub const OSNR_REFERENCE_BANDWIDTH_HZ: f64 = 12.5e9;

/// Nepers of log-power per dB: `10 / ln 10`.
pub const DB_PER_NEPER: f64 = 10.0 / core::f64::consts::LN_10;

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Converts an OSNR reading (12.5 GHz reference bandwidth) to the
/// signal-bandwidth SNR: `SNR = OSNR · T_s · 12.5 GHz`.
pub fn osnr_to_snr(osnr_db: f64, symbol_time_s: f64) -> crate::Result<f64> {
    if !(symbol_time_s > 0.0) || !symbol_time_s.is_finite() {
        return Err(crate::Error::InvalidConfig(alloc::format!(
            "symbol time must be positive, got {symbol_time_s}"
        )));
    }
    Ok(osnr_db + linear_to_db(symbol_time_s * OSNR_REFERENCE_BANDWIDTH_HZ))
}

/// Population mean and standard deviation (divide by `n`).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
