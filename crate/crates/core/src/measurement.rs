//! Sampling ensembles, ground-truth generators and quantized acquisition.

use std::f64::consts::PI;
use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index::sample;

use crate::error::{QprError, Result};
use crate::quantizer::Quantizer;
use crate::rng::{normal_vec, standard_normal, stream_rng, Stream};

/// `m` real Gaussian sampling vectors `a_i ~ N(0, I_n)`, stored as the rows
/// of an `m x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEnsemble {
    rows: Array2<f64>,
    seed: Option<u64>,
}

impl MeasurementEnsemble {
    /// Draw an ensemble; the same `(m, n, seed)` always gives the same rows.
    pub fn gaussian(m: usize, n: usize, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(QprError::Config(format!(
                "ensemble dimensions m = {m}, n = {n} must be positive"
            )));
        }
        let mut rng = stream_rng(seed, Stream::Ensemble);
        let data = normal_vec(&mut rng, m * n);
        let rows = Array2::from_shape_vec((m, n), data).expect("m*n entries");
        Ok(MeasurementEnsemble {
            rows,
            seed: Some(seed),
        })
    }

    /// Wrap explicit sampling vectors (one per row).
    pub fn from_rows(rows: Array2<f64>) -> Result<Self> {
        if rows.nrows() == 0 || rows.ncols() == 0 {
            return Err(QprError::Config("ensemble must be non-empty".into()));
        }
        Ok(MeasurementEnsemble { rows, seed: None })
    }

    pub fn m(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n(&self) -> usize {
        self.rows.ncols()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn rows(&self) -> ArrayView2<'_, f64> {
        self.rows.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.rows.row(i)
    }

    pub(crate) fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(QprError::DimensionMismatch {
                expected: self.n(),
                found: len,
            });
        }
        Ok(())
    }

    /// Projections `a_i^T x`.
    pub fn project(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_dim(x.len())?;
        Ok(self.rows.dot(&x))
    }

    /// Intensities `b_i = (a_i^T x)^2`.
    pub fn intensities(&self, x: ArrayView1<f64>) -> Result<Vec<f64>> {
        Ok(self.project(x)?.iter().map(|p| p * p).collect())
    }

    /// Lifted traces `Tr(a_i a_i^T X) = a_i^T X a_i` without forming `a_i a_i^T`.
    pub fn lifted_traces(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        self.check_dim(x.nrows())?;
        self.check_dim(x.ncols())?;
        Ok(crate::linalg::row_quadratic_forms(self.rows.view(), x))
    }

    /// Row-major text matrix, `m n` header then one row per line,
    /// 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.m(), self.n());
        for row in self.rows.axis_iter(Axis(0)) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| QprError::Parse("empty ensemble file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|e| QprError::Parse(format!("header: {e}"))))
            .collect::<Result<_>>()?;
        let [m, n] = dims[..] else {
            return Err(QprError::Parse("header must be `m n`".into()));
        };
        let mut data = Vec::with_capacity(m * n);
        for line in lines {
            for t in line.split_whitespace() {
                data.push(
                    t.parse::<f64>()
                        .map_err(|e| QprError::Parse(format!("entry {t:?}: {e}")))?,
                );
            }
        }
        let rows = Array2::from_shape_vec((m, n), data)
            .map_err(|e| QprError::Parse(format!("shape: {e}")))?;
        MeasurementEnsemble::from_rows(rows)
    }
}

/// A unit-norm ground-truth signal, optionally sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub x_star: Array1<f64>,
    pub sparsity: Option<usize>,
}

impl GroundTruth {
    pub fn n(&self) -> usize {
        self.x_star.len()
    }

    /// Sum of two sinusoids,
    /// `C [1.5 sin(4 pi (l-1)/n) + 2.5 cos(14 pi (l-1)/n)]`, normalised to unit norm.
    pub fn two_sinusoid(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(QprError::Config(format!("n = {n}; need n >= 2")));
        }
        let nf = n as f64;
        let raw = Array1::from_iter((0..n).map(|l| {
            let t = l as f64;
            1.5 * (4.0 * PI * t / nf).sin() + 2.5 * (14.0 * PI * t / nf).cos()
        }));
        Ok(GroundTruth {
            x_star: normalized(raw)?,
            sparsity: None,
        })
    }

    /// Uniform draw on the unit sphere (normalised Gaussian vector).
    pub fn unit_sphere(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(QprError::Config("n must be positive".into()));
        }
        let mut rng = stream_rng(seed, Stream::GroundTruth);
        Ok(GroundTruth {
            x_star: normalized(Array1::from(normal_vec(&mut rng, n)))?,
            sparsity: None,
        })
    }

    /// `s`-sparse unit vector: support drawn uniformly among all `s`-subsets,
    /// values uniform on the unit sphere of `R^s`.
    pub fn sparse(n: usize, s: usize, seed: u64) -> Result<Self> {
        if s == 0 || s > n {
            return Err(QprError::Config(format!(
                "sparsity s = {s} must satisfy 1 <= s <= n = {n}"
            )));
        }
        let mut rng = stream_rng(seed, Stream::GroundTruth);
        let mut support = sample(&mut rng, n, s).into_vec();
        support.sort_unstable();
        let mut x = Array1::<f64>::zeros(n);
        loop {
            for &i in &support {
                x[i] = standard_normal(&mut rng);
            }
            // a coordinate that is exactly zero would break the support count
            if support.iter().all(|&i| x[i] != 0.0) {
                break;
            }
        }
        Ok(GroundTruth {
            x_star: normalized(x)?,
            sparsity: Some(s),
        })
    }
}

fn normalized(x: Array1<f64>) -> Result<Array1<f64>> {
    let nrm = x.dot(&x).sqrt();
    if nrm == 0.0 {
        return Err(QprError::domain("normalize", "zero vector"));
    }
    Ok(x / nrm)
}

/// Quantized (possibly noisy) intensity observations `y_i = Q(b_i + xi_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedObservation {
    /// Bin index per measurement, in `1..=k`.
    pub bins: Vec<usize>,
    pub quantizer: Quantizer,
    pub sigma_xi: f64,
}

impl QuantizedObservation {
    pub fn new(bins: Vec<usize>, quantizer: Quantizer, sigma_xi: f64) -> Result<Self> {
        let k = quantizer.levels();
        if let Some(bad) = bins.iter().find(|&&b| b == 0 || b > k) {
            return Err(QprError::Config(format!("bin index {bad} outside 1..={k}")));
        }
        Ok(QuantizedObservation {
            bins,
            quantizer,
            sigma_xi,
        })
    }

    pub fn m(&self) -> usize {
        self.bins.len()
    }

    /// Codebook values `y_i = s_{bin_i}`.
    pub fn symbols(&self) -> Vec<f64> {
        self.bins.iter().map(|&j| self.quantizer.symbol(j)).collect()
    }

    /// The same bins read through a different quantizer with identical
    /// thresholds (relabelled codebook).
    pub fn relabel(&self, quantizer: Quantizer) -> Result<Self> {
        if quantizer.thresholds() != self.quantizer.thresholds() {
            return Err(QprError::Config(
                "relabelling requires identical thresholds".into(),
            ));
        }
        QuantizedObservation::new(self.bins.clone(), quantizer, self.sigma_xi)
    }

    /// CSV with header `index,bin,symbol`; indices and bins are 1-based.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,bin,symbol\n");
        for (i, &j) in self.bins.iter().enumerate() {
            let _ = writeln!(out, "{},{},{:.16e}", i + 1, j, self.quantizer.symbol(j));
        }
        out
    }
}

/// Acquire `y_i = Q((a_i^T x*)^2 + xi_i)` with `xi_i ~ N(0, sigma_xi^2)`.
/// `sigma_xi = 0` gives noiseless quantized measurements.
pub fn acquire(
    ensemble: &MeasurementEnsemble,
    x_star: ArrayView1<f64>,
    quantizer: &Quantizer,
    sigma_xi: f64,
    seed: u64,
) -> Result<QuantizedObservation> {
    if !(sigma_xi >= 0.0) || !sigma_xi.is_finite() {
        return Err(QprError::Config(format!(
            "noise level sigma_xi = {sigma_xi} must be finite and >= 0"
        )));
    }
    let b = ensemble.intensities(x_star)?;
    let bins = if sigma_xi == 0.0 {
        b.iter().map(|&v| quantizer.encode(v)).collect()
    } else {
        let mut rng = stream_rng(seed, Stream::Noise);
        b.iter()
            .map(|&v| quantizer.encode(v + sigma_xi * standard_normal(&mut rng)))
            .collect()
    };
    QuantizedObservation::new(bins, quantizer.clone(), sigma_xi)
}
