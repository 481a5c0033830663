//! Sign-invariant reconstruction SNR and the consistency index.

use ndarray::ArrayView1;

use crate::error::{QprError, Result};
use crate::measurement::{MeasurementEnsemble, QuantizedObservation};
use crate::quantizer::Quantizer;

/// `10 log10(||x*||^2 / min_{alpha = +-1} ||alpha x_hat - x*||^2)`;
/// `+inf` on an exact hit.
pub fn reconstruction_snr(x_hat: ArrayView1<f64>, x_star: ArrayView1<f64>) -> Result<f64> {
    if x_hat.len() != x_star.len() {
        return Err(QprError::DimensionMismatch {
            expected: x_star.len(),
            found: x_hat.len(),
        });
    }
    let energy = x_star.dot(&x_star);
    if energy == 0.0 {
        return Err(QprError::domain("reconstruction_snr", "x_star is zero"));
    }
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (h, s) in x_hat.iter().zip(x_star.iter()) {
        plus += (h - s) * (h - s);
        minus += (h + s) * (h + s);
    }
    let err = plus.min(minus);
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (energy / err).log10())
}

/// Normalised squared error, the reciprocal of the linear SNR.
pub fn mse(x_hat: ArrayView1<f64>, x_star: ArrayView1<f64>) -> Result<f64> {
    let snr = reconstruction_snr(x_hat, x_star)?;
    Ok(10f64.powf(-snr / 10.0))
}

/// Fraction of rows whose noiseless bin under `x_hat` equals `bins`.
pub fn consistency_upsilon(
    e: &MeasurementEnsemble,
    q: &Quantizer,
    x_hat: ArrayView1<f64>,
    bins: &[usize],
) -> Result<f64> {
    if bins.len() != e.m() {
        return Err(QprError::DimensionMismatch {
            expected: e.m(),
            found: bins.len(),
        });
    }
    let b = e.intensities(x_hat)?;
    Ok(upsilon_from_intensities(q, &b, bins))
}

/// Consistency of `x_hat` against the noiseless bins of `x_star`.
pub fn consistency_upsilon_truth(
    e: &MeasurementEnsemble,
    q: &Quantizer,
    x_hat: ArrayView1<f64>,
    x_star: ArrayView1<f64>,
) -> Result<f64> {
    let bins: Vec<usize> = e.intensities(x_star)?.iter().map(|&v| q.encode(v)).collect();
    consistency_upsilon(e, q, x_hat, &bins)
}

pub(crate) fn upsilon_from_intensities(q: &Quantizer, b: &[f64], bins: &[usize]) -> f64 {
    if bins.is_empty() {
        return 1.0;
    }
    let hits = b
        .iter()
        .zip(bins)
        .filter(|(v, j)| q.encode(**v) == **j)
        .count();
    hits as f64 / bins.len() as f64
}

/// Final-estimate quality summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconReport {
    pub snr_db: f64,
    pub mse: f64,
    pub upsilon: f64,
}

impl ReconReport {
    pub fn evaluate(
        e: &MeasurementEnsemble,
        obs: &QuantizedObservation,
        x_hat: ArrayView1<f64>,
        x_star: ArrayView1<f64>,
    ) -> Result<Self> {
        let snr_db = reconstruction_snr(x_hat, x_star)?;
        Ok(ReconReport {
            snr_db,
            mse: 10f64.powf(-snr_db / 10.0),
            upsilon: consistency_upsilon(e, &obs.quantizer, x_hat, &obs.bins)?,
        })
    }

    pub fn is_exact(&self) -> bool {
        self.snr_db == f64::INFINITY
    }
}

/// Format a dB value for CSV: `inf` for exact hits.
pub fn format_db(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}
