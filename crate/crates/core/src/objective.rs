//! Lifted losses: the one-sided consistency cost `F`, the squared loss `Q`,
//! their gradients, grid line search and the global Lipschitz constant.
//!
//! Every lifted matrix `X` enters only through the traces
//! `t_i = a_i^T X a_i`, so losses are functions of a trace vector and the
//! gradient is `A^T diag(w) A` for per-row weights `w`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{QprError, Result};
use crate::linalg::{norm, row_quadratic_forms, weighted_gram};
use crate::measurement::{MeasurementEnsemble, QuantizedObservation};
use crate::quantizer::Quantizer;

/// `f(u) = u^2 / 2` for `u <= 0`, else 0.
pub fn one_sided_f(u: f64) -> f64 {
    if u <= 0.0 {
        0.5 * u * u
    } else {
        0.0
    }
}

/// `f'(u) = u` for `u <= 0`, else 0.
pub fn one_sided_f_prime(u: f64) -> f64 {
    if u <= 0.0 {
        u
    } else {
        0.0
    }
}

/// Rows grouped by observed bin: `members[j-1]` lists the rows encoded as `s_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinPartition {
    bins: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl BinPartition {
    pub fn new(bins: &[usize], k: usize) -> Result<Self> {
        let mut members = vec![Vec::new(); k];
        for (i, &j) in bins.iter().enumerate() {
            if j == 0 || j > k {
                return Err(QprError::Config(format!("bin index {j} outside 1..={k}")));
            }
            members[j - 1].push(i);
        }
        Ok(BinPartition {
            bins: bins.to_vec(),
            members,
        })
    }

    pub fn from_observation(obs: &QuantizedObservation) -> Self {
        BinPartition::new(&obs.bins, obs.quantizer.levels()).expect("observation bins are valid")
    }

    pub fn m(&self) -> usize {
        self.bins.len()
    }

    pub fn levels(&self) -> usize {
        self.members.len()
    }

    /// Bin of every row, 1-based.
    pub fn bins(&self) -> &[usize] {
        &self.bins
    }

    /// Rows in bin `j` (1-based).
    pub fn members(&self, j: usize) -> &[usize] {
        &self.members[j - 1]
    }

    pub fn counts(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }
}

/// A rank-one PSD matrix `X = lambda v v^T` in factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedEstimate {
    pub lambda: f64,
    pub v: Array1<f64>,
}

impl LiftedEstimate {
    /// The zero matrix, represented with `v = e_1`.
    pub fn zero(n: usize) -> Self {
        let mut v = Array1::zeros(n);
        v[0] = 1.0;
        LiftedEstimate { lambda: 0.0, v }
    }

    /// Lift `x` to `x x^T`.
    pub fn from_vector(x: ArrayView1<f64>) -> Self {
        let nrm = norm(x);
        if nrm == 0.0 {
            return LiftedEstimate::zero(x.len());
        }
        LiftedEstimate {
            lambda: nrm * nrm,
            v: x.to_owned() / nrm,
        }
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    /// `sqrt(lambda) v`.
    pub fn vector(&self) -> Array1<f64> {
        &self.v * self.lambda.sqrt()
    }

    pub fn to_matrix(&self) -> Array2<f64> {
        let n = self.n();
        let col = self.v.view().into_shape_with_order((n, 1)).expect("column");
        let row = self.v.view().into_shape_with_order((1, n)).expect("row");
        col.dot(&row) * self.lambda
    }
}

/// A symmetric matrix `sum_l c_l u_l u_l^T` held as weighted outer products.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRank {
    n: usize,
    terms: Vec<(f64, Array1<f64>)>,
}

impl LowRank {
    pub fn zero(n: usize) -> Self {
        LowRank { n, terms: Vec::new() }
    }

    pub fn from_estimate(x: &LiftedEstimate) -> Self {
        let mut out = LowRank::zero(x.n());
        out.push(x.lambda, x.v.clone());
        out
    }

    /// `(1 + beta) X_new - beta X_old`.
    pub fn momentum(x_new: &LiftedEstimate, x_old: &LiftedEstimate, beta: f64) -> Self {
        let mut out = LowRank::zero(x_new.n());
        out.push((1.0 + beta) * x_new.lambda, x_new.v.clone());
        out.push(-beta * x_old.lambda, x_old.v.clone());
        out
    }

    pub fn push(&mut self, c: f64, u: Array1<f64>) {
        assert_eq!(u.len(), self.n, "factor length");
        if c != 0.0 {
            self.terms.push((c, u));
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn to_matrix(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, self.n));
        for (c, u) in &self.terms {
            for p in 0..self.n {
                let s = c * u[p];
                for q in 0..self.n {
                    out[[p, q]] += s * u[q];
                }
            }
        }
        out
    }
}

/// Anything whose lifted traces `a_i^T X a_i` can be evaluated.
pub trait LiftedOperand {
    fn dim(&self) -> usize;

    fn traces(&self, e: &MeasurementEnsemble) -> Result<Vec<f64>>;

    fn dense(&self) -> Array2<f64>;
}

impl LiftedOperand for LiftedEstimate {
    fn dim(&self) -> usize {
        self.n()
    }

    fn traces(&self, e: &MeasurementEnsemble) -> Result<Vec<f64>> {
        let p = e.project(self.v.view())?;
        Ok(p.iter().map(|v| self.lambda * v * v).collect())
    }

    fn dense(&self) -> Array2<f64> {
        self.to_matrix()
    }
}

impl LiftedOperand for LowRank {
    fn dim(&self) -> usize {
        self.n
    }

    fn traces(&self, e: &MeasurementEnsemble) -> Result<Vec<f64>> {
        e.check_dim(self.n)?;
        let mut t = vec![0.0; e.m()];
        for (c, u) in &self.terms {
            let p = e.project(u.view())?;
            for (ti, pi) in t.iter_mut().zip(p.iter()) {
                *ti += c * pi * pi;
            }
        }
        Ok(t)
    }

    fn dense(&self) -> Array2<f64> {
        self.to_matrix()
    }
}

impl LiftedOperand for Array2<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn traces(&self, e: &MeasurementEnsemble) -> Result<Vec<f64>> {
        e.lifted_traces(self.view())
    }

    fn dense(&self) -> Array2<f64> {
        self.clone()
    }
}

impl LiftedOperand for ArrayView2<'_, f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn traces(&self, e: &MeasurementEnsemble) -> Result<Vec<f64>> {
        e.lifted_traces(*self)
    }

    fn dense(&self) -> Array2<f64> {
        self.to_owned()
    }
}

/// Which data-fit term drives a solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// One-sided consistency cost `F`; only thresholds matter.
    OneSided,
    /// Squared loss `Q = 1/2 sum (y_i - t_i)^2`; uses symbol values.
    Squared,
}

/// Data a loss is evaluated against: observed bins, thresholds and the
/// target values `y_i` (codebook symbols unless overridden).
#[derive(Debug, Clone, Copy)]
pub struct LossData<'a> {
    pub part: &'a BinPartition,
    pub quantizer: &'a Quantizer,
    pub y: &'a [f64],
}

impl Loss {
    pub fn name(self) -> &'static str {
        match self {
            Loss::OneSided => "F",
            Loss::Squared => "Q",
        }
    }

    /// Loss value from a trace vector.
    pub fn value(self, d: &LossData, t: &[f64]) -> f64 {
        match self {
            Loss::OneSided => f_from_traces(d.part, d.quantizer, t),
            Loss::Squared => q_from_traces(d.y, t),
        }
    }

    /// Row weights `w` with gradient `sum_i w_i a_i a_i^T`.
    pub fn weights(self, d: &LossData, t: &[f64]) -> Vec<f64> {
        match self {
            Loss::OneSided => d
                .part
                .bins()
                .iter()
                .zip(t)
                .map(|(&j, &ti)| {
                    let hi = d.quantizer.upper(j);
                    let lo = d.quantizer.lower(j);
                    let upper = if hi.is_finite() {
                        -one_sided_f_prime(hi - ti)
                    } else {
                        0.0
                    };
                    upper + one_sided_f_prime(ti - lo)
                })
                .collect(),
            Loss::Squared => d.y.iter().zip(t).map(|(yi, ti)| -(yi - ti)).collect(),
        }
    }
}

fn f_from_traces(part: &BinPartition, q: &Quantizer, t: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&j, &ti) in part.bins().iter().zip(t) {
        let hi = q.upper(j);
        if hi.is_finite() {
            total += one_sided_f(hi - ti);
        }
        total += one_sided_f(ti - q.lower(j));
    }
    total
}

fn q_from_traces(y: &[f64], t: &[f64]) -> f64 {
    0.5 * y.iter().zip(t).map(|(yi, ti)| (yi - ti) * (yi - ti)).sum::<f64>()
}

fn check_rows(part: &BinPartition, e: &MeasurementEnsemble) -> Result<()> {
    if part.m() != e.m() {
        return Err(QprError::DimensionMismatch {
            expected: e.m(),
            found: part.m(),
        });
    }
    Ok(())
}

fn check_levels(part: &BinPartition, q: &Quantizer) -> Result<()> {
    if part.levels() != q.levels() {
        return Err(QprError::DimensionMismatch {
            expected: q.levels(),
            found: part.levels(),
        });
    }
    Ok(())
}

/// One-sided consistency cost `F(X)`.
pub fn cost_f<X: LiftedOperand + ?Sized>(
    part: &BinPartition,
    e: &MeasurementEnsemble,
    q: &Quantizer,
    x: &X,
) -> Result<f64> {
    check_rows(part, e)?;
    check_levels(part, q)?;
    let t = x.traces(e)?;
    Ok(f_from_traces(part, q, &t))
}

/// Gradient of `F` at `X`.
pub fn grad_f<X: LiftedOperand + ?Sized>(
    part: &BinPartition,
    e: &MeasurementEnsemble,
    q: &Quantizer,
    x: &X,
) -> Result<Array2<f64>> {
    check_rows(part, e)?;
    check_levels(part, q)?;
    let t = x.traces(e)?;
    let y = [];
    let d = LossData {
        part,
        quantizer: q,
        y: &y,
    };
    Ok(weighted_gram(e.rows(), &Loss::OneSided.weights(&d, &t)))
}

fn check_targets(y: &[f64], e: &MeasurementEnsemble) -> Result<()> {
    if y.len() != e.m() {
        return Err(QprError::DimensionMismatch {
            expected: e.m(),
            found: y.len(),
        });
    }
    Ok(())
}

/// Squared loss `Q(X) = 1/2 sum (y_i - a_i^T X a_i)^2`.
pub fn cost_q<X: LiftedOperand + ?Sized>(y: &[f64], e: &MeasurementEnsemble, x: &X) -> Result<f64> {
    check_targets(y, e)?;
    Ok(q_from_traces(y, &x.traces(e)?))
}

/// Gradient of `Q`: `-sum (y_i - t_i) a_i a_i^T`.
pub fn grad_q<X: LiftedOperand + ?Sized>(
    y: &[f64],
    e: &MeasurementEnsemble,
    x: &X,
) -> Result<Array2<f64>> {
    check_targets(y, e)?;
    let t = x.traces(e)?;
    let w: Vec<f64> = y.iter().zip(&t).map(|(yi, ti)| -(yi - ti)).collect();
    Ok(weighted_gram(e.rows(), &w))
}

/// Uniform step-size grid `lo, lo + step, ..., hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for LineSearchGrid {
    fn default() -> Self {
        LineSearchGrid {
            lo: 0.0,
            hi: 0.005,
            step: 1e-5,
        }
    }
}

impl LineSearchGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let g = LineSearchGrid { lo, hi, step };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo >= 0.0 && self.hi >= self.lo && self.step > 0.0)
            || !self.hi.is_finite()
        {
            return Err(QprError::Config(format!(
                "line-search grid [{}, {}] step {} is invalid",
                self.lo, self.hi, self.step
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.lo + i as f64 * self.step)
    }
}

/// Grid minimiser of `phi(eta)`; ties go to the smaller step.
/// Returns `(eta, phi(eta))`.
pub fn line_search<P: FnMut(f64) -> f64>(mut phi: P, grid: &LineSearchGrid) -> (f64, f64) {
    let mut best = (grid.lo, f64::INFINITY);
    for eta in grid.points() {
        let c = phi(eta);
        if c < best.1 {
            best = (eta, c);
        }
    }
    best
}

/// Line search for `loss(X - eta G)` using
/// `a_i^T (X - eta G) a_i = t_i - eta g_i`.
pub fn line_search_traces(
    loss: Loss,
    d: &LossData,
    t: &[f64],
    g: &[f64],
    grid: &LineSearchGrid,
) -> (f64, f64) {
    let mut buf = vec![0.0; t.len()];
    line_search(
        |eta| {
            for ((b, ti), gi) in buf.iter_mut().zip(t).zip(g) {
                *b = ti - eta * gi;
            }
            loss.value(d, &buf)
        },
        grid,
    )
}

/// `g_i = a_i^T G a_i` for a dense gradient.
pub fn gradient_traces(e: &MeasurementEnsemble, g: ArrayView2<f64>) -> Vec<f64> {
    row_quadratic_forms(e.rows(), g)
}

/// Global Lipschitz constant of the gradient of `F`: `2 sum ||a_i||^4`.
pub fn lipschitz_bound(e: &MeasurementEnsemble) -> f64 {
    2.0 * e
        .rows()
        .outer_iter()
        .map(|r| {
            let s = r.dot(&r);
            s * s
        })
        .sum::<f64>()
}
