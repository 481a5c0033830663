//! Rank-1 projected gradient solvers on the lifted problem, their
//! accelerated and sparse variants, and the alternating-minimisation baseline.

use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{QprError, Result};
use crate::linalg::{frobenius, least_squares, top_eigenpair, weighted_gram};
use crate::measurement::{MeasurementEnsemble, QuantizedObservation};
use crate::metrics::{reconstruction_snr, upsilon_from_intensities};
pub use crate::objective::LineSearchGrid;
use crate::objective::{
    gradient_traces, line_search_traces, BinPartition, LiftedEstimate, LiftedOperand, Loss,
    LossData, LowRank,
};

/// Nearest rank-1 PSD matrix: `max(lambda_max, 0) v_1 v_1^T`.
pub fn rank1_project(y: ArrayView2<f64>) -> Result<LiftedEstimate> {
    rank1_project_from(y, None, 0)
}

fn rank1_project_from(
    y: ArrayView2<f64>,
    start: Option<ArrayView1<f64>>,
    seed: u64,
) -> Result<LiftedEstimate> {
    let (lambda, v) = top_eigenpair(y, start, seed)?;
    Ok(LiftedEstimate {
        lambda: lambda.max(0.0),
        v,
    })
}

/// Keep the `s` largest-magnitude entries (ties to the lowest index).
pub fn hard_threshold(x: ArrayView1<f64>, s: usize) -> Result<Array1<f64>> {
    let n = x.len();
    if s == 0 || s > n {
        return Err(QprError::Config(format!(
            "sparsity s = {s} must satisfy 1 <= s <= n = {n}"
        )));
    }
    if s == n {
        return Ok(x.to_owned());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()).then(i.cmp(&j)));
    let mut out = Array1::zeros(n);
    for &i in &order[..s] {
        out[i] = x[i];
    }
    Ok(out)
}

/// `S = (1/m) sum y_i a_i a_i^T`.
pub fn spectral_matrix(e: &MeasurementEnsemble, y: &[f64]) -> Result<Array2<f64>> {
    if y.len() != e.m() {
        return Err(QprError::DimensionMismatch {
            expected: e.m(),
            found: y.len(),
        });
    }
    let m = e.m() as f64;
    let w: Vec<f64> = y.iter().map(|v| v / m).collect();
    Ok(weighted_gram(e.rows(), &w))
}

/// Unit top eigenvector of the spectral matrix.
pub fn spectral_init(e: &MeasurementEnsemble, y: &[f64], seed: u64) -> Result<Array1<f64>> {
    let s = spectral_matrix(e, y)?;
    if frobenius(s.view()) == 0.0 {
        return Err(QprError::DegenerateSpectral);
    }
    let (_, v) = top_eigenpair(s.view(), None, seed)?;
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Projected gradient descent.
    Pgd,
    /// Accelerated projected gradient descent with Nesterov momentum.
    Apgd,
    /// Alternating sign assignment and least squares.
    AltMin,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// `X^0 = 0`.
    Zero,
    /// Unit top eigenvector of `(1/m) sum y_i a_i a_i^T`.
    Spectral,
    /// Explicit starting vector, lifted to `x x^T`.
    Given(Array1<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub loss: Loss,
    /// `None` (or `Some(n)`) disables hard thresholding.
    pub sparsity: Option<usize>,
    pub n_iter: usize,
    pub grid: LineSearchGrid,
    /// Constant step instead of the line search.
    pub fixed_step: Option<f64>,
    pub init: Init,
    /// Seeds the random restarts of the eigen-solver.
    pub seed: u64,
    /// Stop as soon as every observed bin is reproduced.
    pub stop_when_consistent: bool,
    /// PGD only: halve the step while the projected cost exceeds the current one.
    pub backtrack: bool,
}

impl SolverConfig {
    fn base(algorithm: Algorithm, loss: Loss, init: Init) -> Self {
        SolverConfig {
            algorithm,
            loss,
            sparsity: None,
            n_iter: 100,
            grid: LineSearchGrid::default(),
            fixed_step: None,
            init,
            seed: 0,
            stop_when_consistent: false,
            backtrack: algorithm == Algorithm::Pgd,
        }
    }

    pub fn qpr() -> Self {
        Self::base(Algorithm::Pgd, Loss::OneSided, Init::Zero)
    }

    pub fn qpr_a() -> Self {
        Self::base(Algorithm::Apgd, Loss::OneSided, Init::Zero)
    }

    pub fn sqpr(s: usize) -> Self {
        SolverConfig {
            sparsity: Some(s),
            ..Self::qpr()
        }
    }

    pub fn sqpr_a(s: usize) -> Self {
        SolverConfig {
            sparsity: Some(s),
            ..Self::qpr_a()
        }
    }

    pub fn pl() -> Self {
        Self::base(Algorithm::Pgd, Loss::Squared, Init::Spectral)
    }

    pub fn pl_a() -> Self {
        Self::base(Algorithm::Apgd, Loss::Squared, Init::Spectral)
    }

    pub fn altmin() -> Self {
        Self::base(Algorithm::AltMin, Loss::Squared, Init::Spectral)
    }

    /// Preset by name: `qpr`, `qpr-a`, `sqpr`, `sqpr-a`, `pl`, `pl-a`, `altmin`.
    /// The sparse variants need `sparsity`.
    pub fn preset(name: &str, sparsity: Option<usize>) -> Result<Self> {
        let need_s = || {
            sparsity.ok_or_else(|| QprError::Config(format!("{name} needs a sparsity level")))
        };
        Ok(match name {
            "qpr" => Self::qpr(),
            "qpr-a" => Self::qpr_a(),
            "sqpr" => Self::sqpr(need_s()?),
            "sqpr-a" => Self::sqpr_a(need_s()?),
            "pl" => Self::pl(),
            "pl-a" => Self::pl_a(),
            "altmin" => Self::altmin(),
            other => return Err(QprError::Config(format!("unknown algorithm {other:?}"))),
        })
    }

    pub fn with_iterations(mut self, n_iter: usize) -> Self {
        self.n_iter = n_iter;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn with_backtracking(mut self, on: bool) -> Self {
        self.backtrack = on;
        self
    }

    pub fn with_fixed_step(mut self, eta: f64) -> Self {
        self.fixed_step = Some(eta);
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.n_iter == 0 {
            return Err(QprError::Config("n_iter must be at least 1".into()));
        }
        if let Some(s) = self.sparsity {
            if s == 0 || s > n {
                return Err(QprError::Config(format!(
                    "sparsity s = {s} must satisfy 1 <= s <= n = {n}"
                )));
            }
        }
        if let Some(eta) = self.fixed_step {
            if !(eta >= 0.0 && eta.is_finite()) {
                return Err(QprError::Config(format!("fixed step {eta} must be >= 0")));
            }
        }
        if let Init::Given(x) = &self.init {
            if x.len() != n {
                return Err(QprError::DimensionMismatch {
                    expected: n,
                    found: x.len(),
                });
            }
        }
        self.grid.validate()
    }
}

/// Ensemble, observations and optionally the ground truth (for SNR tracking).
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub ensemble: &'a MeasurementEnsemble,
    pub observation: &'a QuantizedObservation,
    pub truth: Option<ArrayView1<'a, f64>>,
    values: Option<Vec<f64>>,
}

impl<'a> Problem<'a> {
    pub fn new(ensemble: &'a MeasurementEnsemble, observation: &'a QuantizedObservation) -> Self {
        Problem {
            ensemble,
            observation,
            truth: None,
            values: None,
        }
    }

    pub fn with_truth(mut self, x_star: ArrayView1<'a, f64>) -> Self {
        self.truth = Some(x_star);
        self
    }

    /// Replace the codebook values `y_i` used by the squared loss, the
    /// spectral initialiser and alternating minimisation.
    pub fn with_values(mut self, y: Vec<f64>) -> Self {
        self.values = Some(y);
        self
    }

    /// Target values `y_i`.
    pub fn values(&self) -> Vec<f64> {
        self.values
            .clone()
            .unwrap_or_else(|| self.observation.symbols())
    }

    fn check(&self) -> Result<()> {
        let m = self.ensemble.m();
        if self.observation.m() != m {
            return Err(QprError::DimensionMismatch {
                expected: m,
                found: self.observation.m(),
            });
        }
        if let Some(y) = &self.values {
            if y.len() != m {
                return Err(QprError::DimensionMismatch {
                    expected: m,
                    found: y.len(),
                });
            }
        }
        if let Some(x) = self.truth {
            self.ensemble.check_dim(x.len())?;
        }
        Ok(())
    }
}

/// One row of a solver trace, recorded after iteration `iter`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    /// Loss of the new iterate (F, Q, or the least-squares residual).
    pub cost: f64,
    /// `None` without ground truth.
    pub snr_db: Option<f64>,
    pub upsilon: f64,
    pub eta: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
    pub estimate: LiftedEstimate,
    pub x_hat: Array1<f64>,
}

impl SolverTrace {
    pub fn final_row(&self) -> &TraceRow {
        self.rows.last().expect("at least one iteration")
    }

    pub fn costs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.cost).collect()
    }

    /// CSV with header `iter,cost,snr_db,upsilon,eta,beta`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,cost,snr_db,upsilon,eta,beta\n");
        for r in &self.rows {
            let snr = r.snr_db.map(|v| format!("{v}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.iter, r.cost, snr, r.upsilon, r.eta, r.beta
            );
        }
        out
    }
}

/// Dispatch on `cfg.algorithm`.
pub fn solve(problem: &Problem, cfg: &SolverConfig) -> Result<SolverTrace> {
    match cfg.algorithm {
        Algorithm::Pgd => run_pgd(problem, cfg),
        Algorithm::Apgd => run_apgd(problem, cfg),
        Algorithm::AltMin => run_altmin(problem, cfg),
    }
}

struct Context<'p> {
    e: &'p MeasurementEnsemble,
    part: BinPartition,
    y: Vec<f64>,
    truth: Option<ArrayView1<'p, f64>>,
    obs: &'p QuantizedObservation,
}

impl<'p> Context<'p> {
    fn new(problem: &'p Problem, cfg: &SolverConfig) -> Result<Self> {
        problem.check()?;
        cfg.validate(problem.ensemble.n())?;
        Ok(Context {
            e: problem.ensemble,
            part: BinPartition::from_observation(problem.observation),
            y: problem.values(),
            truth: problem.truth,
            obs: problem.observation,
        })
    }

    fn data(&self) -> LossData<'_> {
        LossData {
            part: &self.part,
            quantizer: &self.obs.quantizer,
            y: &self.y,
        }
    }

    fn initial(&self, cfg: &SolverConfig) -> Result<LiftedEstimate> {
        Ok(match &cfg.init {
            Init::Zero => LiftedEstimate::zero(self.e.n()),
            Init::Spectral => {
                let v = spectral_init(self.e, &self.y, cfg.seed)?;
                LiftedEstimate { lambda: 1.0, v }
            }
            Init::Given(x) => LiftedEstimate::from_vector(x.view()),
        })
    }

    /// Cost, SNR and consistency of an iterate.
    fn assess(&self, loss: Loss, x: &LiftedEstimate) -> Result<(f64, Option<f64>, f64)> {
        let t = x.traces(self.e)?;
        let cost = loss.value(&self.data(), &t);
        let ups = upsilon_from_intensities(&self.obs.quantizer, &t, &self.obs.bins);
        let snr = match self.truth {
            Some(xs) => Some(reconstruction_snr(x.vector().view(), xs)?),
            None => None,
        };
        Ok((cost, snr, ups))
    }

    /// One projected gradient step from the point `y` (with traces `t`).
    /// Returns the new iterate and the step used.
    fn step<Y: LiftedOperand>(
        &self,
        cfg: &SolverConfig,
        y: &Y,
        warm: ArrayView1<f64>,
        first: bool,
        eta_override: Option<f64>,
    ) -> Result<(LiftedEstimate, f64)> {
        let t = y.traces(self.e)?;
        let w = cfg.loss.weights(&self.data(), &t);
        let degenerate = w.iter().all(|v| *v == 0.0);
        if degenerate && first && cfg.init == Init::Zero {
            return Err(QprError::DegenerateInit);
        }
        let g = weighted_gram(self.e.rows(), &w);
        let eta = if degenerate {
            0.0
        } else if let Some(eta) = eta_override.or(cfg.fixed_step) {
            eta
        } else {
            let gt = gradient_traces(self.e, g.view());
            line_search_traces(cfg.loss, &self.data(), &t, &gt, &cfg.grid).0
        };
        let moved = y.dense() - &(g * eta);
        let start = if warm.iter().any(|v| *v != 0.0) {
            Some(warm)
        } else {
            None
        };
        let mut next = rank1_project_from(moved.view(), start, cfg.seed)?;
        if let Some(s) = cfg.sparsity {
            if s < self.e.n() {
                let x = hard_threshold(next.vector().view(), s)?;
                next = LiftedEstimate::from_vector(x.view());
            }
        }
        Ok((next, eta))
    }
}

const MAX_HALVINGS: usize = 40;

/// Projected gradient descent, `X <- P(X - eta grad)`, with optional hard
/// thresholding of `x = sqrt(lambda) v` after each projection.
pub fn run_pgd(problem: &Problem, cfg: &SolverConfig) -> Result<SolverTrace> {
    let ctx = Context::new(problem, cfg)?;
    let mut x = ctx.initial(cfg)?;
    let mut rows = Vec::with_capacity(cfg.n_iter);
    let mut current = cfg.loss.value(&ctx.data(), &x.traces(ctx.e)?);
    for it in 1..=cfg.n_iter {
        let (mut next, mut eta) = ctx.step(cfg, &x, x.v.view(), it == 1, None)?;
        if cfg.backtrack {
            let rises = |c: f64| c > current * (1.0 + 1e-12) + 1e-15;
            let mut c = cfg.loss.value(&ctx.data(), &next.traces(ctx.e)?);
            let mut halvings = 0;
            while rises(c) && halvings < MAX_HALVINGS {
                eta *= 0.5;
                halvings += 1;
                next = ctx.step(cfg, &x, x.v.view(), it == 1, Some(eta))?.0;
                c = cfg.loss.value(&ctx.data(), &next.traces(ctx.e)?);
            }
            if rises(c) {
                next = x.clone();
                eta = 0.0;
            }
        }
        x = next;
        let (cost, snr_db, upsilon) = ctx.assess(cfg.loss, &x)?;
        current = cost;
        rows.push(TraceRow {
            iter: it,
            cost,
            snr_db,
            upsilon,
            eta,
            beta: 0.0,
        });
        if cfg.stop_when_consistent && upsilon == 1.0 {
            break;
        }
    }
    Ok(finish(rows, x))
}

/// Accelerated variant: momentum point `Y = X_new + beta (X_new - X_old)` with
/// `theta' = 2 / (1 + sqrt(1 + 4 / theta^2))`, `beta' = theta' (1/theta - 1)`.
pub fn run_apgd(problem: &Problem, cfg: &SolverConfig) -> Result<SolverTrace> {
    let ctx = Context::new(problem, cfg)?;
    let mut x_prev = ctx.initial(cfg)?;
    let mut y = LowRank::from_estimate(&x_prev);
    let mut theta = 1.0f64;
    let mut rows = Vec::with_capacity(cfg.n_iter);
    for it in 1..=cfg.n_iter {
        let (x_new, eta) = ctx.step(cfg, &y, x_prev.v.view(), it == 1, None)?;
        let theta_next = 2.0 / (1.0 + (1.0 + 4.0 / (theta * theta)).sqrt());
        let beta = theta_next * (1.0 / theta - 1.0);
        y = LowRank::momentum(&x_new, &x_prev, beta);
        theta = theta_next;
        let (cost, snr_db, upsilon) = ctx.assess(cfg.loss, &x_new)?;
        x_prev = x_new;
        rows.push(TraceRow {
            iter: it,
            cost,
            snr_db,
            upsilon,
            eta,
            beta,
        });
        if cfg.stop_when_consistent && upsilon == 1.0 {
            break;
        }
    }
    Ok(finish(rows, x_prev))
}

/// Alternating minimisation: signs `sigma = sign(A x)` (zero counts as +),
/// then `x = argmin ||A x - sigma sqrt(y)||`. The recorded cost is the
/// squared least-squares residual.
pub fn run_altmin(problem: &Problem, cfg: &SolverConfig) -> Result<SolverTrace> {
    let ctx = Context::new(problem, cfg)?;
    if let Some(bad) = ctx.y.iter().find(|v| !(**v >= 0.0)) {
        return Err(QprError::Config(format!(
            "alternating minimisation needs nonnegative values, got {bad}"
        )));
    }
    let root_y: Vec<f64> = ctx.y.iter().map(|v| v.sqrt()).collect();
    let mut x = ctx.initial(cfg)?.vector();
    let a = ctx.e.rows();
    let mut rows = Vec::with_capacity(cfg.n_iter);
    for it in 1..=cfg.n_iter {
        let p = a.dot(&x);
        let rhs = Array1::from_iter(
            p.iter()
                .zip(&root_y)
                .map(|(pi, r)| if *pi >= 0.0 { *r } else { -r }),
        );
        x = least_squares(a, rhs.view())?;
        let resid = a.dot(&x) - &rhs;
        let cost = resid.dot(&resid);
        let est = LiftedEstimate::from_vector(x.view());
        let (_, snr_db, upsilon) = ctx.assess(Loss::Squared, &est)?;
        rows.push(TraceRow {
            iter: it,
            cost,
            snr_db,
            upsilon,
            eta: 0.0,
            beta: 0.0,
        });
        if cfg.stop_when_consistent && upsilon == 1.0 {
            break;
        }
    }
    let est = LiftedEstimate::from_vector(x.view());
    Ok(SolverTrace {
        rows,
        estimate: est,
        x_hat: x,
    })
}

fn finish(rows: Vec<TraceRow>, x: LiftedEstimate) -> SolverTrace {
    SolverTrace {
        x_hat: x.vector(),
        estimate: x,
        rows,
    }
}
