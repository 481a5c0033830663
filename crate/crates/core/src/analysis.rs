//! Distinguishability of signal pairs under quantized intensity sampling,
//! noise robustness of the quantizer, and two-sided bounds on the
//! consistency cost.

use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;

use crate::error::{QprError, Result};
use crate::linalg::jacobi_eigen;
use crate::measurement::MeasurementEnsemble;
use crate::objective::{cost_f, cost_q, BinPartition, LiftedEstimate, LiftedOperand};
use crate::quantizer::Quantizer;
use crate::rng::{chi2_1, standard_normal, stream_rng, Stream};
use crate::solvers::Problem;
use crate::specfun::{adaptive_simpson, bessel_k0, chi2_1_cdf, chi2_1_sf};

/// Spectral structure of `V = x1 x1^T - x2 x2^T` for unit `x1`, `x2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGeometry {
    /// `|x1^T x2|`.
    pub rho: f64,
    /// Magnitude of the two nonzero eigenvalues `+-nu1`.
    pub nu1: f64,
    /// Orthonormal eigenvectors of `V` as columns: `+nu1`, then `-nu1`,
    /// then the null space.
    pub frame: Array2<f64>,
    /// Eigenvalues matching the columns of `frame`.
    pub eigenvalues: Array1<f64>,
}

impl PairGeometry {
    /// Coordinates `(a~_1, a~_2)` of `a` along the two signed eigenvectors.
    pub fn rotate(&self, a: ArrayView1<f64>) -> (f64, f64) {
        (self.frame.column(0).dot(&a), self.frame.column(1).dot(&a))
    }
}

const UNIT_TOL: f64 = 1e-8;

fn check_unit(x: ArrayView1<f64>, what: &str) -> Result<()> {
    let nrm2 = x.dot(&x);
    if (nrm2 - 1.0).abs() > UNIT_TOL {
        return Err(QprError::Config(format!(
            "{what} must have unit norm (squared norm {nrm2})"
        )));
    }
    Ok(())
}

pub fn pair_geometry(x1: ArrayView1<f64>, x2: ArrayView1<f64>) -> Result<PairGeometry> {
    if x1.len() != x2.len() {
        return Err(QprError::DimensionMismatch {
            expected: x1.len(),
            found: x2.len(),
        });
    }
    check_unit(x1, "x1")?;
    check_unit(x2, "x2")?;
    let rho = x1.dot(&x2).abs().min(1.0);
    if 1.0 - rho * rho < 1e-14 {
        return Err(QprError::DegeneratePair);
    }
    let n = x1.len();
    let mut v = Array2::<f64>::zeros((n, n));
    for p in 0..n {
        for q in 0..n {
            v[[p, q]] = x1[p] * x1[q] - x2[p] * x2[q];
        }
    }
    let eig = jacobi_eigen(v.view())?;
    // descending order: +nu1 first, -nu1 last
    let mut order: Vec<usize> = vec![0, n - 1];
    order.extend(1..n - 1);
    let mut frame = Array2::zeros((n, n));
    let mut values = Array1::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        frame.column_mut(dst).assign(&eig.vectors.column(src));
        values[dst] = eig.values[src];
    }
    Ok(PairGeometry {
        rho,
        nu1: (1.0 - rho * rho).sqrt(),
        frame,
        eigenvalues: values,
    })
}

/// `(2/pi) int_0^d K0(u) du`: the probability that a variance-gamma
/// difference of two chi-square(1) variables is at most `2d` in magnitude.
pub fn g_exact(delta_prime: f64) -> Result<f64> {
    if !(delta_prime >= 0.0) {
        return Err(QprError::domain(
            "g_exact",
            format!("argument {delta_prime} must be >= 0"),
        ));
    }
    if delta_prime == 0.0 {
        return Ok(0.0);
    }
    // u = w^2 removes the log singularity: integrand 2 w K0(w^2) -> 0 at w = 0
    let integrand = |w: f64| {
        if w <= 0.0 {
            0.0
        } else {
            2.0 * w * bessel_k0(w * w).unwrap_or(0.0)
        }
    };
    let v = adaptive_simpson(integrand, 0.0, delta_prime.sqrt(), 1e-12);
    Ok((v * 2.0 / std::f64::consts::PI).clamp(0.0, 1.0))
}

/// `1 - exp(-1.6 d)`.
pub fn g_hat(delta_prime: f64) -> f64 {
    1.0 - (-1.6 * delta_prime).exp()
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_nan() || rho < 0.0 {
        return Err(QprError::domain("pe1_bound", format!("rho {rho} must be >= 0")));
    }
    if rho >= 1.0 {
        return Err(QprError::DegeneratePair);
    }
    Ok(())
}

/// Bound on the probability that a non-saturated measurement cannot tell
/// the pair apart: `1 - exp(-1.6 delta / sqrt(1 - rho^2))`.
pub fn pe1_bound(delta: f64, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    if !(delta >= 0.0) {
        return Err(QprError::domain("pe1_bound", format!("delta {delta} must be >= 0")));
    }
    Ok(g_hat(delta / (1.0 - rho * rho).sqrt()))
}

/// The same bound with the exact Bessel integral in place of the fit.
pub fn pe1_bound_exact(delta: f64, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    g_exact(delta / (1.0 - rho * rho).sqrt())
}

/// Saturation probability `P(b >= tau_{k-1})`.
pub fn pe2_bound(tau_penultimate: f64) -> Result<f64> {
    chi2_1_sf(tau_penultimate)
}

/// `min(1, pe1 + pe2)` for the quantizer's precision and saturation level.
pub fn pe_max(q: &Quantizer, rho: f64) -> Result<f64> {
    Ok((pe1_bound(q.precision_delta(), rho)? + pe2_bound(q.saturation_threshold())?).min(1.0))
}

/// Smallest `m` with `pe^m <= eps`: `ceil(ln eps / ln pe)`.
pub fn m_min(pe: f64, eps: f64) -> Result<u64> {
    if !(pe > 0.0 && pe < 1.0) {
        return Err(QprError::domain("m_min", format!("pe {pe} must lie in (0, 1)")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(QprError::domain("m_min", format!("eps {eps} must lie in (0, 1)")));
    }
    let ratio = eps.ln() / pe.ln();
    Ok(((ratio - 1e-9).ceil() as u64).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistinguishabilityReport {
    pub pe1_bound: f64,
    pub pe2_bound: f64,
    pub pe_max: f64,
    /// `None` when the bound is vacuous.
    pub m_min: Option<u64>,
    /// `pe_max >= 1`: the bound says nothing.
    pub vacuous: bool,
}

pub fn distinguishability_from_parts(
    delta: f64,
    tau_penultimate: f64,
    rho: f64,
    eps: f64,
) -> Result<DistinguishabilityReport> {
    let pe1 = pe1_bound(delta, rho)?;
    let pe2 = pe2_bound(tau_penultimate)?;
    let pe = (pe1 + pe2).min(1.0);
    let vacuous = pe >= 1.0;
    let m = if vacuous || pe == 0.0 {
        None
    } else {
        Some(m_min(pe, eps)?)
    };
    Ok(DistinguishabilityReport {
        pe1_bound: pe1,
        pe2_bound: pe2,
        pe_max: pe,
        m_min: if pe == 0.0 { Some(1) } else { m },
        vacuous,
    })
}

pub fn distinguishability(q: &Quantizer, rho: f64, eps: f64) -> Result<DistinguishabilityReport> {
    distinguishability_from_parts(q.precision_delta(), q.saturation_threshold(), rho, eps)
}

/// CSV `delta,rho,pe1,pe2,pe_max,m_min` over a grid; vacuous rows carry
/// `vacuous` in the last column.
pub fn bound_table(
    deltas: &[f64],
    rhos: &[f64],
    tau_penultimate: f64,
    eps: f64,
) -> Result<String> {
    let mut out = String::from("delta,rho,pe1,pe2,pe_max,m_min\n");
    for &d in deltas {
        for &r in rhos {
            let rep = distinguishability_from_parts(d, tau_penultimate, r, eps)?;
            let m = rep
                .m_min
                .map(|v| v.to_string())
                .unwrap_or_else(|| "vacuous".to_string());
            let _ = writeln!(
                out,
                "{d},{r},{:.6},{:.6},{:.6},{m}",
                rep.pe1_bound, rep.pe2_bound, rep.pe_max
            );
        }
    }
    Ok(out)
}

const MC_CHUNK: usize = 4096;

/// Monte-Carlo rate at which `Q(b) = Q(b + xi)` with `b ~ chi2(1)` and
/// `xi ~ N(0, sigma_xi_sq)`. Work is split into fixed chunks, each with its
/// own random stream, so the estimate does not depend on the thread count.
pub fn robustness_factor_mc(q: &Quantizer, sigma_xi_sq: f64, n_trial: usize, seed: u64) -> Result<f64> {
    if n_trial == 0 {
        return Err(QprError::Config("n_trial must be at least 1".into()));
    }
    if !(sigma_xi_sq >= 0.0) || !sigma_xi_sq.is_finite() {
        return Err(QprError::domain(
            "robustness_factor_mc",
            format!("noise variance {sigma_xi_sq} must be finite and >= 0"),
        ));
    }
    if sigma_xi_sq == 0.0 {
        return Ok(1.0);
    }
    let sigma = sigma_xi_sq.sqrt();
    let chunks = n_trial.div_ceil(MC_CHUNK);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, Stream::Custom(c as u64));
            let len = MC_CHUNK.min(n_trial - c * MC_CHUNK);
            (0..len)
                .filter(|_| {
                    let b = chi2_1(&mut rng);
                    let xi = sigma * standard_normal(&mut rng);
                    q.encode(b) == q.encode(b + xi)
                })
                .count()
        })
        .sum();
    Ok(hits as f64 / n_trial as f64)
}

/// CSV `k,sigma_sq,p_r`.
pub fn robustness_table(qs: &[Quantizer], variances: &[f64], n_trial: usize, seed: u64) -> Result<String> {
    let mut out = String::from("k,sigma_sq,p_r\n");
    for q in qs {
        for &s in variances {
            let p = robustness_factor_mc(q, s, n_trial, seed)?;
            let _ = writeln!(out, "{},{s},{p:.6}", q.levels());
        }
    }
    Ok(out)
}

/// Evaluated cost bounds at one estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub f: f64,
    pub q: f64,
    pub q_minus_f: f64,
    /// `(m/2) max{delta^2 + 2 delta d0, delta_sq}`.
    pub prop4_upper: f64,
    /// `(m/2) max{delta^2, (d0 - tau)^2} + (1 - rho^2) sum (a1^2 + a2^2)^2`.
    pub prop5_upper: f64,
    /// `(1 - rho^2)/2 sum (a1^2 - a2^2)^2
    ///  - sqrt(1 - rho^2) max{delta, d0 - tau} sum (a1^2 + a2^2)
    ///  - (m/2) max{delta^2 + 2 delta d0, delta_sq}`.
    pub prop6_lower: f64,
    pub rho_x: f64,
    /// Every lifted trace of `X` and `X*` lies in `[0, d0]`.
    pub bounded_flag: bool,
    /// Probability of the bounded event, `cdf(d0)^m`.
    pub p_bounded: f64,
}

/// Evaluate `F`, `Q` and the three bound expressions at `X = x x^T`.
/// The problem must carry the ground truth; `d0 >= tau_{k-1}`.
pub fn cost_sandwich_check(problem: &Problem, x: &LiftedEstimate, d0: f64) -> Result<SandwichReport> {
    let e: &MeasurementEnsemble = problem.ensemble;
    let obs = problem.observation;
    let q = &obs.quantizer;
    let x_star = problem
        .truth
        .ok_or_else(|| QprError::Config("sandwich check needs the ground truth".into()))?;
    let tau = q.saturation_threshold();
    if !(d0 >= tau) {
        return Err(QprError::Config(format!(
            "d0 = {d0} must be at least the saturation threshold {tau}"
        )));
    }
    check_unit(x_star, "x_star")?;
    let xv = x.vector();
    check_unit(xv.view(), "estimate")?;

    let part = BinPartition::from_observation(obs);
    let y = problem.values();
    let f = cost_f(&part, e, q, x)?;
    let qv = cost_q(&y, e, x)?;

    let t = x.traces(e)?;
    let t_star = e.intensities(x_star)?;
    let bounded_flag = t
        .iter()
        .chain(t_star.iter())
        .all(|v| *v >= 0.0 && *v <= d0);

    let m = e.m() as f64;
    let delta = q.precision_delta();
    let dsq = q.delta_sq();
    let rho = x_star.dot(&xv).abs().min(1.0);
    let nu2 = 1.0 - rho * rho;

    let (mut sum_diff2, mut sum_plus, mut sum_plus2) = (0.0, 0.0, 0.0);
    if nu2 >= 1e-14 {
        let g = pair_geometry(x_star, xv.view())?;
        for row in e.rows().outer_iter() {
            let (a1, a2) = g.rotate(row);
            let (s1, s2) = (a1 * a1, a2 * a2);
            sum_diff2 += (s1 - s2) * (s1 - s2);
            sum_plus += s1 + s2;
            sum_plus2 += (s1 + s2) * (s1 + s2);
        }
    }
    let p4 = 0.5 * m * (delta * delta + 2.0 * delta * d0).max(dsq);
    let p5 = 0.5 * m * (delta * delta).max((d0 - tau) * (d0 - tau)) + nu2 * sum_plus2;
    let p6 = 0.5 * nu2 * sum_diff2 - nu2.sqrt() * delta.max(d0 - tau) * sum_plus - p4;

    Ok(SandwichReport {
        f,
        q: qv,
        q_minus_f: qv - f,
        prop4_upper: p4,
        prop5_upper: p5,
        prop6_lower: p6,
        rho_x: rho,
        bounded_flag,
        p_bounded: chi2_1_cdf(d0)?.powf(m),
    })
}
