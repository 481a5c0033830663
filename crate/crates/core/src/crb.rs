//! Fisher information and Cramér-Rao bound for `k`-level quantized intensity
//! measurements corrupted by Gaussian noise before quantization.
//!
//! With `u_i = a_i^T x*` the bin probabilities are
//! `P_j = Phi(tau_j - u^2) - Phi(tau_{j-1} - u^2)` with `tau_0 = -inf` and
//! `tau_k = +inf`, and the Fisher information is `-sum beta_bar(u_i) a_i a_i^T`.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{QprError, Result};
use crate::linalg::{jacobi_eigen, weighted_gram};
use crate::measurement::MeasurementEnsemble;
use crate::quantizer::Quantizer;
use crate::specfun::{gauss_cdf_family, GaussParams};

/// Default relative eigenvalue cutoff for the pseudo-inverse.
pub const DEFAULT_CUTOFF: f64 = 1e-10;

/// Bin probabilities below this are left out of the information sum.
pub const MIN_BIN_PROB: f64 = 1e-300;

/// `beta_bar` with the number of bins skipped for vanishing probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaBar {
    pub value: f64,
    pub skipped: usize,
}

/// `-4 u^2 sum_j [Phi'(tau_j - u^2) - Phi'(tau_{j-1} - u^2)]^2 / P_j`.
pub fn beta_bar(u: f64, q: &Quantizer, sigma: f64) -> Result<f64> {
    Ok(beta_bar_counted(u, q, sigma)?.value)
}

pub fn beta_bar_counted(u: f64, q: &Quantizer, sigma: f64) -> Result<BetaBar> {
    let g = GaussParams::new(sigma)?;
    let u2 = u * u;
    if u2 == 0.0 {
        return Ok(BetaBar {
            value: 0.0,
            skipped: 0,
        });
    }
    let k = q.levels();
    let edge = |j: usize| -> f64 {
        if j == 0 {
            f64::NEG_INFINITY
        } else if j == k {
            f64::INFINITY
        } else {
            q.thresholds()[j - 1]
        }
    };
    let mut sum = 0.0;
    let mut skipped = 0;
    let mut lo = gauss_cdf_family(edge(0) - u2, g);
    for j in 1..=k {
        let hi = gauss_cdf_family(edge(j) - u2, g);
        let p = g.interval_prob(edge(j - 1) - u2, edge(j) - u2);
        if p < MIN_BIN_PROB {
            skipped += 1;
        } else {
            let d = hi.phi_prime - lo.phi_prime;
            sum += d * d / p;
        }
        lo = hi;
    }
    Ok(BetaBar {
        value: -4.0 * u2 * sum,
        skipped,
    })
}

/// Fisher information matrix and the count of skipped bin terms.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherInfo {
    pub fim: Array2<f64>,
    pub skipped_terms: usize,
}

/// `FIM = -sum_i beta_bar(a_i^T x*) a_i a_i^T`.
pub fn fisher_matrix(
    e: &MeasurementEnsemble,
    x_star: ArrayView1<f64>,
    q: &Quantizer,
    sigma: f64,
) -> Result<FisherInfo> {
    let u = e.project(x_star)?;
    let mut w = Vec::with_capacity(e.m());
    let mut skipped_terms = 0;
    for &ui in u.iter() {
        let b = beta_bar_counted(ui, q, sigma)?;
        skipped_terms += b.skipped;
        w.push(-b.value);
    }
    Ok(FisherInfo {
        fim: weighted_gram(e.rows(), &w),
        skipped_terms,
    })
}

/// Trace of the eigenvalue pseudo-inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoInverseTrace {
    pub trace: f64,
    /// Some eigenvalue fell below `cutoff * lambda_max` and was dropped.
    pub rank_deficient: bool,
    pub cutoff: f64,
}

pub fn crb_trace(fim: ArrayView2<f64>, cutoff: f64) -> Result<PseudoInverseTrace> {
    if !(cutoff >= 0.0 && cutoff < 1.0) {
        return Err(QprError::Config(format!("cutoff {cutoff} must lie in [0, 1)")));
    }
    let eig = jacobi_eigen(fim)?;
    let lmax = eig.values.first().copied().unwrap_or(0.0);
    if !(lmax > 0.0) {
        return Err(QprError::Uninformative);
    }
    let floor = cutoff * lmax;
    let mut trace = 0.0;
    let mut rank_deficient = false;
    for &l in eig.values.iter() {
        if l > floor && l > 0.0 {
            trace += 1.0 / l;
        } else {
            rank_deficient = true;
        }
    }
    Ok(PseudoInverseTrace {
        trace,
        rank_deficient,
        cutoff,
    })
}

/// Full bound for one ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct CrbResult {
    pub fim: Array2<f64>,
    pub crb_trace: f64,
    pub rank_deficient: bool,
    pub eigen_cutoff_used: f64,
    pub skipped_terms: usize,
}

impl CrbResult {
    pub fn crb_db(&self) -> f64 {
        10.0 * self.crb_trace.log10()
    }
}

pub fn crb(
    e: &MeasurementEnsemble,
    x_star: ArrayView1<f64>,
    q: &Quantizer,
    sigma: f64,
    cutoff: f64,
) -> Result<CrbResult> {
    let info = fisher_matrix(e, x_star, q, sigma)?;
    let pi = crb_trace(info.fim.view(), cutoff)?;
    Ok(CrbResult {
        fim: info.fim,
        crb_trace: pi.trace,
        rank_deficient: pi.rank_deficient,
        eigen_cutoff_used: cutoff,
        skipped_terms: info.skipped_terms,
    })
}

/// `10 log10( sum |a_i^T x*|^4 / (m sigma^2) )`.
pub fn input_snr(e: &MeasurementEnsemble, x_star: ArrayView1<f64>, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(QprError::domain("input_snr", format!("sigma = {sigma} must be > 0")));
    }
    let p4 = fourth_moment(e, x_star)?;
    Ok(10.0 * (p4 / (sigma * sigma)).log10())
}

/// Noise level giving the requested input SNR on this ensemble.
pub fn sigma_for_input_snr(
    e: &MeasurementEnsemble,
    x_star: ArrayView1<f64>,
    snr_db: f64,
) -> Result<f64> {
    let p4 = fourth_moment(e, x_star)?;
    if p4 == 0.0 {
        return Err(QprError::Uninformative);
    }
    Ok((p4 / 10f64.powf(snr_db / 10.0)).sqrt())
}

fn fourth_moment(e: &MeasurementEnsemble, x_star: ArrayView1<f64>) -> Result<f64> {
    let b = e.intensities(x_star)?;
    Ok(b.iter().map(|v| v * v).sum::<f64>() / e.m() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizer::LastSymbolRule;
    use ndarray::{array, Array1};

    #[test]
    fn zero_u_gives_zero() {
        let q = Quantizer::equiprobable(4, LastSymbolRule::TwoDelta).unwrap();
        assert_eq!(beta_bar(0.0, &q, 0.3).unwrap(), 0.0);
        assert!(beta_bar(1.0, &q, 0.0).is_err());
        assert!(beta_bar(1.2, &q, 0.3).unwrap() < 0.0);
    }

    #[test]
    fn binary_closed_form() {
        // k = 2: 4 u^2 phi(t)^2 / (Phi(t) (1 - Phi(t))) with t = tau_1 - u^2
        let q = Quantizer::new(vec![0.7], vec![0.3, 1.5]).unwrap();
        let (u, s) = (0.9, 0.4);
        let g = GaussParams::new(s).unwrap();
        let t = 0.7 - u * u;
        let f = gauss_cdf_family(t, g);
        let expect = -4.0 * u * u * f.phi_prime * f.phi_prime / (f.phi * (1.0 - f.phi));
        assert!((beta_bar(u, &q, s).unwrap() - expect).abs() < 1e-12 * expect.abs());
    }

    #[test]
    fn pseudo_inverse_cases() {
        let fim = Array2::from_diag(&array![4.0, 4.0, 4.0]);
        let r = crb_trace(fim.view(), DEFAULT_CUTOFF).unwrap();
        assert!((r.trace - 0.75).abs() < 1e-12 && !r.rank_deficient);
        let fim = Array2::from_diag(&array![2.0, 0.0]);
        let r = crb_trace(fim.view(), DEFAULT_CUTOFF).unwrap();
        assert!((r.trace - 0.5).abs() < 1e-12 && r.rank_deficient);
        let z = Array2::<f64>::zeros((2, 2));
        assert!(matches!(crb_trace(z.view(), 1e-10), Err(QprError::Uninformative)));
    }

    #[test]
    fn zero_signal_fim_is_zero() {
        let e = MeasurementEnsemble::gaussian(10, 3, 1).unwrap();
        let q = Quantizer::equiprobable(4, LastSymbolRule::TwoDelta).unwrap();
        let f = fisher_matrix(&e, Array1::zeros(3).view(), &q, 0.2).unwrap();
        assert!(f.fim.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn input_snr_round_trip() {
        let e = MeasurementEnsemble::gaussian(50, 4, 2).unwrap();
        let x = array![0.5, 0.5, 0.5, 0.5];
        let s = sigma_for_input_snr(&e, x.view(), 27.0).unwrap();
        assert!((input_snr(&e, x.view(), s).unwrap() - 27.0).abs() < 1e-10);
    }
}
