//! Scalar quantizers for non-negative intensities.
//!
//! A `k`-level quantizer is described by thresholds
//! `0 = tau_0 < tau_1 < ... < tau_{k-1} < tau_k = +inf` and one symbol per
//! interval. Bins are numbered `1..=k`; bin `j` covers `[tau_{j-1}, tau_j)`.
//! Negative inputs (possible once noise is added before quantization) land in
//! bin 1, i.e. the first interval is treated as extending to `-inf`.

use std::fmt::Write as _;

use crate::error::{QprError, Result};
use crate::specfun::{
    chi2_1_cdf, chi2_1_inv_cdf, chi2_1_partial_mean, chi2_1_partial_mean_tail, chi2_1_sf,
};

/// How the symbol of the unbounded last bin is placed for the equiprobable
/// design, relative to the precision `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LastSymbolRule {
    /// `s_k = tau_{k-1} + 2 delta`, the codebook used in the reconstruction
    /// experiments.
    #[default]
    TwoDelta,
    /// `s_k = tau_{k-1} + delta / 2`, the codebook used for the
    /// quantization-SNR profile.
    HalfDelta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer {
    /// Finite thresholds `tau_1..tau_{k-1}`.
    thresholds: Vec<f64>,
    /// Symbols `s_1..s_k`.
    symbols: Vec<f64>,
}

impl Quantizer {
    /// Build a quantizer from its finite thresholds and its `k` symbols,
    /// checking strict ordering and that every symbol lies inside its bin.
    pub fn new(thresholds: Vec<f64>, symbols: Vec<f64>) -> Result<Self> {
        let k = thresholds.len() + 1;
        if k < 2 {
            return Err(QprError::Config("a quantizer needs k >= 2 levels".into()));
        }
        if symbols.len() != k {
            return Err(QprError::Config(format!(
                "{} thresholds need {} symbols, got {}",
                thresholds.len(),
                k,
                symbols.len()
            )));
        }
        let mut prev = 0.0;
        for (j, &t) in thresholds.iter().enumerate() {
            if !t.is_finite() || t <= prev {
                return Err(QprError::Config(format!(
                    "threshold tau_{} = {t} must be finite and exceed {prev}",
                    j + 1
                )));
            }
            prev = t;
        }
        let q = Quantizer {
            thresholds,
            symbols,
        };
        for j in 1..=k {
            let s = q.symbols[j - 1];
            if !(s > q.lower(j) && s < q.upper(j)) {
                return Err(QprError::Config(format!(
                    "symbol s_{j} = {s} is not inside ({}, {})",
                    q.lower(j),
                    q.upper(j)
                )));
            }
        }
        Ok(q)
    }

    pub fn levels(&self) -> usize {
        self.thresholds.len() + 1
    }

    /// Finite thresholds `tau_1..tau_{k-1}`.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn symbols(&self) -> &[f64] {
        &self.symbols
    }

    /// Lower edge `tau_{j-1}` of bin `j` (1-based).
    pub fn lower(&self, j: usize) -> f64 {
        if j <= 1 {
            0.0
        } else {
            self.thresholds[j - 2]
        }
    }

    /// Upper edge `tau_j` of bin `j` (1-based); `+inf` for the last bin.
    pub fn upper(&self, j: usize) -> f64 {
        if j >= self.levels() {
            f64::INFINITY
        } else {
            self.thresholds[j - 1]
        }
    }

    pub fn symbol(&self, j: usize) -> f64 {
        self.symbols[j - 1]
    }

    /// The penultimate threshold `tau_{k-1}`, where saturation starts.
    pub fn saturation_threshold(&self) -> f64 {
        *self.thresholds.last().expect("k >= 2")
    }

    /// Bin `j` with `tau_{j-1} <= u < tau_j`; negative `u` maps to bin 1.
    pub fn encode(&self, u: f64) -> usize {
        self.thresholds.partition_point(|&t| t <= u) + 1
    }

    /// Symbol of the bin containing `u`.
    pub fn quantize(&self, u: f64) -> f64 {
        self.symbol(self.encode(u))
    }

    /// Same thresholds, different codebook.
    pub fn with_symbols(&self, symbols: Vec<f64>) -> Result<Self> {
        Quantizer::new(self.thresholds.clone(), symbols)
    }

    /// Equiprobable design for chi-square(1) intensities: `P(b < tau_j) = j/k`.
    /// Interior symbols are interval midpoints.
    pub fn equiprobable(k: usize, rule: LastSymbolRule) -> Result<Self> {
        if k < 2 {
            return Err(QprError::Config(format!("k = {k}; need k >= 2")));
        }
        let thresholds = (1..k)
            .map(|j| chi2_1_inv_cdf(j as f64 / k as f64))
            .collect::<Result<Vec<_>>>()?;
        let delta = precision_of(&thresholds);
        let mut symbols = Vec::with_capacity(k);
        let mut lo = 0.0;
        for &t in &thresholds {
            symbols.push(0.5 * (lo + t));
            lo = t;
        }
        symbols.push(match rule {
            LastSymbolRule::TwoDelta => lo + 2.0 * delta,
            LastSymbolRule::HalfDelta => lo + 0.5 * delta,
        });
        Quantizer::new(thresholds, symbols)
    }

    /// Lloyd-Max design for chi-square(1) intensities, started from the
    /// equiprobable thresholds. Alternates conditional-mean symbols and
    /// midpoint thresholds until the largest threshold move is below `tol`.
    pub fn lloyd_max(k: usize, tol: f64, max_iter: usize) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(QprError::Config(format!("tol = {tol}; need tol > 0")));
        }
        let mut thresholds = Quantizer::equiprobable(k, LastSymbolRule::TwoDelta)?.thresholds;
        let mut symbols = vec![0.0; k];
        let mut movement = f64::INFINITY;
        for _ in 0..max_iter {
            for (j, s) in symbols.iter_mut().enumerate() {
                let lo = if j == 0 { 0.0 } else { thresholds[j - 1] };
                let hi = if j == k - 1 {
                    f64::INFINITY
                } else {
                    thresholds[j]
                };
                *s = chi2_1_conditional_mean(lo, hi)?;
            }
            movement = 0.0;
            for (j, t) in thresholds.iter_mut().enumerate() {
                let next = 0.5 * (symbols[j] + symbols[j + 1]);
                movement = movement.max((next - *t).abs());
                *t = next;
            }
            if movement < tol {
                for (j, s) in symbols.iter_mut().enumerate() {
                    let lo = if j == 0 { 0.0 } else { thresholds[j - 1] };
                    let hi = if j == k - 1 {
                        f64::INFINITY
                    } else {
                        thresholds[j]
                    };
                    *s = chi2_1_conditional_mean(lo, hi)?;
                }
                return Quantizer::new(thresholds, symbols);
            }
        }
        let last = Quantizer {
            thresholds,
            symbols,
        };
        Err(QprError::LloydNonConvergence {
            iterations: max_iter,
            movement,
            last: Box::new(last),
        })
    }

    /// Lloyd-Max design with the default tolerance `1e-8` and budget `10^4`.
    pub fn lloyd_max_default(k: usize) -> Result<Self> {
        Quantizer::lloyd_max(k, 1e-8, 10_000)
    }

    /// Precision `delta = max_{1<=j<=k-1} (tau_j - tau_{j-1})`; the unbounded
    /// last bin is excluded.
    pub fn precision_delta(&self) -> f64 {
        precision_of(&self.thresholds)
    }

    /// Squared precision `max_{1<=j<=k} (s_j^2 - tau_{j-1}^2)`, last bin included.
    pub fn delta_sq(&self) -> f64 {
        (1..=self.levels())
            .map(|j| self.symbol(j).powi(2) - self.lower(j).powi(2))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Quantization SNR in dB, `10 log10(sum b^2 / sum (b - Q(b))^2)`;
    /// `+inf` when the distortion is zero.
    pub fn quantization_snr(&self, b: &[f64]) -> f64 {
        let (sig, err) = b.iter().fold((0.0, 0.0), |(s, e), &v| {
            let d = v - self.quantize(v);
            (s + v * v, e + d * d)
        });
        if err == 0.0 {
            return f64::INFINITY;
        }
        10.0 * (sig / err).log10()
    }

    /// Mean squared quantization error on a sample.
    pub fn distortion(&self, b: &[f64]) -> f64 {
        if b.is_empty() {
            return 0.0;
        }
        b.iter()
            .map(|&v| (v - self.quantize(v)).powi(2))
            .sum::<f64>()
            / b.len() as f64
    }

    /// Plain-text record: line 1 `k`, line 2 the thresholds `tau_1..tau_{k-1}`,
    /// line 3 the symbols, all numbers with 17 significant digits.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.levels());
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:.16e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "{}", join(&self.thresholds));
        let _ = writeln!(out, "{}", join(&self.symbols));
        out
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let k: usize = lines
            .next()
            .ok_or_else(|| QprError::Parse("empty quantizer record".into()))?
            .trim()
            .parse()
            .map_err(|e| QprError::Parse(format!("level count: {e}")))?;
        let parse_line = |line: Option<&str>, what: &str| -> Result<Vec<f64>> {
            line.ok_or_else(|| QprError::Parse(format!("missing {what} line")))?
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| QprError::Parse(format!("{what} value {t:?}: {e}")))
                })
                .collect()
        };
        let thresholds = parse_line(lines.next(), "threshold")?;
        let symbols = parse_line(lines.next(), "symbol")?;
        if thresholds.len() + 1 != k {
            return Err(QprError::Parse(format!(
                "header says k = {k} but {} thresholds follow",
                thresholds.len()
            )));
        }
        Quantizer::new(thresholds, symbols)
    }
}

fn precision_of(thresholds: &[f64]) -> f64 {
    let mut prev = 0.0;
    let mut best = 0.0_f64;
    for &t in thresholds {
        best = best.max(t - prev);
        prev = t;
    }
    best
}

/// `E[b | lo <= b < hi]` for `b ~ chi2_1`, in closed form through the
/// chi-square(3) distribution (`b f_1(b) = f_3(b)`).
pub fn chi2_1_conditional_mean(lo: f64, hi: f64) -> Result<f64> {
    if !(hi > lo) || lo < 0.0 {
        return Err(QprError::domain(
            "chi2_1_conditional_mean",
            format!("invalid interval [{lo}, {hi})"),
        ));
    }
    // Work on the tail side once the interval is away from the origin.
    let (mass, first_moment) = if lo > 1.0 {
        let hi_sf = if hi.is_infinite() { 0.0 } else { chi2_1_sf(hi)? };
        (
            chi2_1_sf(lo)? - hi_sf,
            chi2_1_partial_mean_tail(lo) - chi2_1_partial_mean_tail(hi),
        )
    } else {
        let hi_cdf = if hi.is_infinite() { 1.0 } else { chi2_1_cdf(hi)? };
        (
            hi_cdf - chi2_1_cdf(lo)?,
            chi2_1_partial_mean(hi) - chi2_1_partial_mean(lo),
        )
    };
    if !(mass > 0.0) {
        return Err(QprError::domain(
            "chi2_1_conditional_mean",
            format!("interval [{lo}, {hi}) carries no probability"),
        ));
    }
    Ok(first_moment / mass)
}
