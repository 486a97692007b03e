use rand::Rng;
use rand_distr::StandardNormal;

use crate::covariance::SignalBatch;
use crate::error::{Error, Result};

/// Per-component noise variance `((1/n) Σ ‖x_i‖²) / 10^(snr_db/10)`;
/// zero for `snr_db = +∞`.
pub fn awgn_variance(batch: &SignalBatch, snr_db: f64) -> Result<f64> {
    if snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidInput(format!("SNR must be finite or +inf, got {snr_db}")));
    }
    let power = batch.mean_sq_norm();
    if power == 0.0 {
        return Err(Error::UndefinedSnr);
    }
    Ok(power / 10f64.powf(snr_db / 10.0))
}

/// `batch + ε` with i.i.d. `N(0, σ²)` entries; `snr_db = +∞` returns the batch unchanged.
pub fn add_awgn(batch: &SignalBatch, snr_db: f64, rng: &mut impl Rng) -> Result<SignalBatch> {
    let var = awgn_variance(batch, snr_db)?;
    if var == 0.0 {
        return Ok(batch.clone());
    }
    let sd = var.sqrt();
    let mut cols = batch.columns().clone();
    for v in cols.iter_mut() {
        *v += sd * rng.sample::<f64, _>(StandardNormal);
    }
    SignalBatch::new(cols)
}
