//! Experiment runner behind the `qprkit` binary: flat `key = value`
//! configuration, seeded trials run on a worker pool, CSV outputs.
//!
//! Trial `t` uses seed `base_seed + t` for its ensemble, ground truth and
//! noise, so parallel and serial runs write identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{bound_table, distinguishability, robustness_table};
use crate::crb::{crb, sigma_for_input_snr, DEFAULT_CUTOFF};
use crate::error::{QprError, Result};
use crate::measurement::{acquire, GroundTruth, MeasurementEnsemble};
use crate::metrics::{format_db, mse, ReconReport};
use crate::objective::LineSearchGrid;
use crate::quantizer::{LastSymbolRule, Quantizer};
use crate::rng::{chi2_1, stream_rng, Stream};
use crate::solvers::{solve, Problem, SolverConfig};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "QPRKIT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantKind {
    Eq,
    Lmq,
}

impl QuantKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eq" => Ok(QuantKind::Eq),
            "lmq" => Ok(QuantKind::Lmq),
            other => Err(QprError::Config(format!(
                "unknown quantizer kind {other:?} (expected eq or lmq)"
            ))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            QuantKind::Eq => "eq",
            QuantKind::Lmq => "lmq",
        }
    }

    pub fn design(self, k: usize, rule: LastSymbolRule) -> Result<Quantizer> {
        match self {
            QuantKind::Eq => Quantizer::equiprobable(k, rule),
            QuantKind::Lmq => Quantizer::lloyd_max_default(k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    Sphere,
    Sparse,
    TwoSinusoid,
}

impl SignalKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sphere" => Ok(SignalKind::Sphere),
            "sparse" => Ok(SignalKind::Sparse),
            "two-sinusoid" | "sinusoid" => Ok(SignalKind::TwoSinusoid),
            other => Err(QprError::Config(format!("unknown signal kind {other:?}"))),
        }
    }
}

/// An algorithm name with an optional quantizer override, written
/// `name[:eq|lmq]`, e.g. `pl-a:lmq`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgoSpec {
    pub name: String,
    pub quantizer: Option<QuantKind>,
}

impl AlgoSpec {
    pub fn parse(token: &str) -> Result<Self> {
        let token = token.trim();
        let (name, quant) = match token.split_once(':') {
            Some((a, q)) => (a, Some(QuantKind::parse(q)?)),
            None => (token, None),
        };
        // validate the name early
        SolverConfig::preset(name, Some(1))?;
        Ok(AlgoSpec {
            name: name.to_string(),
            quantizer: quant,
        })
    }

    pub fn label(&self, default: QuantKind) -> String {
        format!("{}:{}", self.name, self.quantizer.unwrap_or(default).label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub n: usize,
    /// Defaults to `10 n`.
    pub m: Option<usize>,
    pub k: usize,
    pub quantizer: QuantKind,
    pub last_symbol: LastSymbolRule,
    pub algorithms: Vec<AlgoSpec>,
    pub signal: SignalKind,
    pub sigma_xi: f64,
    pub input_snr_db: Vec<f64>,
    pub sparsity: Option<usize>,
    pub n_trials: usize,
    pub n_iter: usize,
    pub base_seed: u64,
    pub n_ensembles: usize,
    pub n_noise: usize,
    pub grid: LineSearchGrid,
    pub cutoff: f64,
    pub output: PathBuf,
    pub write_traces: bool,
    pub rho: f64,
    pub eps: f64,
    pub deltas: Vec<f64>,
    pub rhos: Vec<f64>,
    pub tau: Option<f64>,
    pub robust_levels: Vec<usize>,
    pub noise_variances: Vec<f64>,
    pub mc_trials: usize,
    pub samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: "custom".into(),
            n: 32,
            m: None,
            k: 8,
            quantizer: QuantKind::Eq,
            last_symbol: LastSymbolRule::TwoDelta,
            algorithms: vec![AlgoSpec {
                name: "qpr-a".into(),
                quantizer: None,
            }],
            signal: SignalKind::Sphere,
            sigma_xi: 0.0,
            input_snr_db: vec![15.0, 20.0, 25.0, 30.0, 35.0, 40.0],
            sparsity: None,
            n_trials: 20,
            n_iter: 100,
            base_seed: 0,
            n_ensembles: 20,
            n_noise: 20,
            grid: LineSearchGrid::default(),
            cutoff: DEFAULT_CUTOFF,
            output: PathBuf::from("qprkit-out"),
            write_traces: true,
            rho: 0.6,
            eps: 0.01,
            deltas: vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5],
            rhos: vec![0.0, 0.2, 0.4, 0.6, 0.8, 0.9],
            tau: None,
            robust_levels: vec![2, 4, 8, 16, 32],
            noise_variances: vec![0.0, 0.025, 0.05, 0.075, 0.1],
            mc_trials: 10_000,
            samples: 100_000,
        }
    }
}

/// Named presets. Keys given explicitly still override them.
const PRESETS: &[(&str, &[(&str, &str)])] = &[
    (
        "acceleration",
        &[("k", "8"), ("algorithms", "qpr,qpr-a,pl:lmq,pl-a:lmq")],
    ),
    (
        "baselines",
        &[("algorithms", "qpr-a:eq,pl-a:lmq,altmin:lmq")],
    ),
    (
        "sparse",
        &[
            ("k", "4"),
            ("signal", "sparse"),
            ("sparsity", "3"),
            ("algorithms", "qpr-a,sqpr-a"),
        ],
    ),
    (
        "crb",
        &[("k", "8"), ("signal", "two-sinusoid"), ("algorithms", "qpr-a")],
    ),
];

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            QprError::Parse(format!("line {}: expected key = value", lineno + 1))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.trim()
        .parse()
        .map_err(|e| QprError::Config(format!("{key} = {v:?}: {e}")))
}

/// Comma list or `start:stop:step` range.
pub fn parse_f64_list(key: &str, v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').collect();
    if parts.len() == 3 {
        let (a, b, s): (f64, f64, f64) = (
            parse_num(key, parts[0])?,
            parse_num(key, parts[1])?,
            parse_num(key, parts[2])?,
        );
        if !(s > 0.0) || b < a {
            return Err(QprError::Config(format!("{key}: bad range {v:?}")));
        }
        let count = ((b - a) / s + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| a + i as f64 * s).collect());
    }
    v.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_num(key, t))
        .collect()
}

impl ExperimentConfig {
    /// Build from ordered overrides (config file first, then command line).
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut merged: BTreeMap<String, String> = BTreeMap::new();
        for (k, v) in pairs {
            merged.insert(k.replace('-', "_"), v.clone());
        }
        let mut cfg = ExperimentConfig::default();
        if let Some(name) = merged.get("experiment") {
            cfg.experiment = name.clone();
            if let Some((_, preset)) = PRESETS.iter().find(|(p, _)| p == name) {
                for (k, v) in preset.iter() {
                    cfg.set(k, v)?;
                }
            } else if name != "custom" {
                return Err(QprError::Config(format!("unknown experiment {name:?}")));
            }
        }
        for (k, v) in &merged {
            if k != "experiment" {
                cfg.set(k, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = match path {
            Some(p) => parse_config_text(&fs::read_to_string(p)?)?,
            None => Vec::new(),
        };
        pairs.extend_from_slice(overrides);
        Self::from_pairs(&pairs)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "n" => self.n = parse_num(key, v)?,
            "m" => self.m = Some(parse_num(key, v)?),
            "k" => self.k = parse_num(key, v)?,
            "quantizer" | "kind" => self.quantizer = QuantKind::parse(v)?,
            "last_symbol" => {
                self.last_symbol = match v.trim() {
                    "two-delta" | "2delta" => LastSymbolRule::TwoDelta,
                    "half-delta" => LastSymbolRule::HalfDelta,
                    other => {
                        return Err(QprError::Config(format!(
                            "last_symbol {other:?} (expected two-delta or half-delta)"
                        )))
                    }
                }
            }
            "algorithms" => {
                self.algorithms = v
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(AlgoSpec::parse)
                    .collect::<Result<_>>()?
            }
            "signal" => self.signal = SignalKind::parse(v)?,
            "sigma_xi" => self.sigma_xi = parse_num(key, v)?,
            "input_snr_db" => self.input_snr_db = parse_f64_list(key, v)?,
            "sparsity" => {
                self.sparsity = match v.trim() {
                    "" | "none" => None,
                    s => Some(parse_num(key, s)?),
                }
            }
            "trials" => self.n_trials = parse_num(key, v)?,
            "iters" => self.n_iter = parse_num(key, v)?,
            "seed" => self.base_seed = parse_num(key, v)?,
            "ensembles" => self.n_ensembles = parse_num(key, v)?,
            "noise_draws" => self.n_noise = parse_num(key, v)?,
            "grid_lo" => self.grid.lo = parse_num(key, v)?,
            "grid_hi" => self.grid.hi = parse_num(key, v)?,
            "grid_step" => self.grid.step = parse_num(key, v)?,
            "cutoff" => self.cutoff = parse_num(key, v)?,
            "out" => self.output = PathBuf::from(v.trim()),
            "traces" => self.write_traces = parse_num(key, v)?,
            "rho" => self.rho = parse_num(key, v)?,
            "eps" => self.eps = parse_num(key, v)?,
            "deltas" => self.deltas = parse_f64_list(key, v)?,
            "rhos" => self.rhos = parse_f64_list(key, v)?,
            "tau" => self.tau = Some(parse_num(key, v)?),
            "robust_k" => {
                self.robust_levels = v
                    .split(',')
                    .map(|t| parse_num(key, t))
                    .collect::<Result<_>>()?
            }
            "noise_var" => self.noise_variances = parse_f64_list(key, v)?,
            "mc_trials" => self.mc_trials = parse_num(key, v)?,
            "samples" => self.samples = parse_num(key, v)?,
            other => return Err(QprError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m.unwrap_or(10 * self.n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m() == 0 {
            return Err(QprError::Config("n and m must be positive".into()));
        }
        if self.k < 2 {
            return Err(QprError::Config(format!("k = {} must be at least 2", self.k)));
        }
        if self.n_trials == 0 || self.n_iter == 0 || self.n_ensembles == 0 || self.n_noise == 0 {
            return Err(QprError::Config(
                "trials, iters, ensembles and noise_draws must be at least 1".into(),
            ));
        }
        if let Some(s) = self.sparsity {
            if s == 0 || s > self.n {
                return Err(QprError::Config(format!(
                    "sparsity {s} must satisfy 1 <= s <= n = {}",
                    self.n
                )));
            }
        }
        if self.signal == SignalKind::Sparse && self.sparsity.is_none() {
            return Err(QprError::Config("signal = sparse needs sparsity".into()));
        }
        if !(self.sigma_xi >= 0.0) {
            return Err(QprError::Config("sigma_xi must be >= 0".into()));
        }
        self.grid.validate()
    }

    fn truth(&self, seed: u64) -> Result<GroundTruth> {
        match self.signal {
            SignalKind::Sphere => GroundTruth::unit_sphere(self.n, seed),
            SignalKind::Sparse => GroundTruth::sparse(self.n, self.sparsity.unwrap_or(self.n), seed),
            SignalKind::TwoSinusoid => GroundTruth::two_sinusoid(self.n),
        }
    }

    fn solver(&self, spec: &AlgoSpec) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::preset(&spec.name, self.sparsity)?;
        cfg.n_iter = self.n_iter;
        cfg.grid = self.grid;
        Ok(cfg)
    }
}

/// Run `f` on a pool capped by `QPRKIT_THREADS` (all cores when unset).
pub fn with_thread_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| QprError::Config(format!("{THREADS_ENV} = {v:?} is not a count")))?;
        if n > 0 {
            b = b.num_threads(n);
        }
    }
    let pool = b
        .build()
        .map_err(|e| QprError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Process exit code for an error: 1 for usage problems, 3 for numerical ones.
pub fn exit_code(err: &QprError) -> i32 {
    match err {
        QprError::Config(_)
        | QprError::Parse(_)
        | QprError::Io(_)
        | QprError::DimensionMismatch { .. } => 1,
        _ => 3,
    }
}

/// What a command produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
    /// Solver runs that failed; the command still completed.
    pub failures: usize,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures > 0 {
            2
        } else {
            0
        }
    }
}

fn write_file(path: &Path, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, contents)?;
    files.push(path.to_path_buf());
    Ok(())
}

/// Design summary printed by `design-quant`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSummary {
    pub delta: f64,
    pub delta_sq: f64,
    pub tau_penultimate: f64,
    pub quantization_snr_db: f64,
}

pub fn design_summary(q: &Quantizer, samples: usize, seed: u64) -> DesignSummary {
    let mut rng = stream_rng(seed, Stream::MonteCarlo);
    let b: Vec<f64> = (0..samples).map(|_| chi2_1(&mut rng)).collect();
    DesignSummary {
        delta: q.precision_delta(),
        delta_sq: q.delta_sq(),
        tau_penultimate: q.saturation_threshold(),
        quantization_snr_db: q.quantization_snr(&b),
    }
}

/// Design a quantizer, write its record to `out/quantizer_<kind>_k<k>.txt`.
pub fn cmd_design_quant(cfg: &ExperimentConfig) -> Result<Outcome> {
    let q = cfg.quantizer.design(cfg.k, cfg.last_symbol)?;
    let s = design_summary(&q, cfg.samples, cfg.base_seed);
    let mut files = Vec::new();
    let path = cfg
        .output
        .join(format!("quantizer_{}_k{}.txt", cfg.quantizer.label(), cfg.k));
    write_file(&path, &q.to_record(), &mut files)?;
    let summary = format!(
        "quantizer {} k={}\ndelta = {:.4}\ndelta_sq = {:.4}\ntau_(k-1) = {:.4}\nquantization SNR = {:.2} dB ({} samples)\n",
        cfg.quantizer.label(),
        cfg.k,
        s.delta,
        s.delta_sq,
        s.tau_penultimate,
        s.quantization_snr_db,
        cfg.samples
    );
    Ok(Outcome {
        files,
        summary,
        failures: 0,
    })
}

/// Final metrics of one algorithm on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub label: String,
    pub outcome: std::result::Result<ReconReport, String>,
    pub trace_csv: Option<String>,
}

fn run_trial(cfg: &ExperimentConfig, trial: usize, quantizers: &[(QuantKind, Quantizer)]) -> Result<Vec<TrialResult>> {
    let seed = cfg.base_seed + trial as u64;
    let e = MeasurementEnsemble::gaussian(cfg.m(), cfg.n, seed)?;
    let truth = cfg.truth(seed)?;
    let mut out = Vec::new();
    for spec in &cfg.algorithms {
        let kind = spec.quantizer.unwrap_or(cfg.quantizer);
        let q = &quantizers.iter().find(|(k, _)| *k == kind).expect("designed").1;
        let obs = acquire(&e, truth.x_star.view(), q, cfg.sigma_xi, seed)?;
        let problem = Problem::new(&e, &obs).with_truth(truth.x_star.view());
        let solver = cfg.solver(spec)?.with_seed(seed);
        let label = spec.label(cfg.quantizer);
        let result = solve(&problem, &solver).and_then(|tr| {
            let rep = ReconReport::evaluate(&e, &obs, tr.x_hat.view(), truth.x_star.view())?;
            Ok((rep, tr.to_csv()))
        });
        out.push(match result {
            Ok((rep, csv)) => TrialResult {
                trial,
                label,
                outcome: Ok(rep),
                trace_csv: Some(csv),
            },
            Err(err) => TrialResult {
                trial,
                label,
                outcome: Err(err.to_string()),
                trace_csv: None,
            },
        });
    }
    Ok(out)
}

fn design_all(cfg: &ExperimentConfig, specs: &[AlgoSpec]) -> Result<Vec<(QuantKind, Quantizer)>> {
    let mut kinds = vec![cfg.quantizer];
    for s in specs {
        if let Some(k) = s.quantizer {
            if !kinds.contains(&k) {
                kinds.push(k);
            }
        }
    }
    kinds
        .into_iter()
        .map(|k| Ok((k, k.design(cfg.k, cfg.last_symbol)?)))
        .collect()
}

/// Mean and sample standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Aggregate row for one algorithm label.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub label: String,
    pub n_ok: usize,
    pub n_failed: usize,
    /// Trials with an exact (+inf dB) reconstruction, left out of the dB mean.
    pub n_exact: usize,
    pub snr_db_mean: f64,
    pub snr_db_std: f64,
    pub upsilon_mean: f64,
    pub upsilon_std: f64,
}

pub fn aggregate(results: &[TrialResult]) -> Vec<AggregateRow> {
    let mut labels: Vec<&str> = Vec::new();
    for r in results {
        if !labels.contains(&r.label.as_str()) {
            labels.push(&r.label);
        }
    }
    labels
        .into_iter()
        .map(|label| {
            let rows: Vec<&TrialResult> = results.iter().filter(|r| r.label == label).collect();
            let ok: Vec<&ReconReport> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let finite: Vec<f64> = ok.iter().filter(|r| !r.is_exact()).map(|r| r.snr_db).collect();
            let ups: Vec<f64> = ok.iter().map(|r| r.upsilon).collect();
            let (sm, ss) = mean_std(&finite);
            let (um, us) = mean_std(&ups);
            AggregateRow {
                label: label.to_string(),
                n_ok: ok.len(),
                n_failed: rows.len() - ok.len(),
                n_exact: ok.len() - finite.len(),
                snr_db_mean: sm,
                snr_db_std: ss,
                upsilon_mean: um,
                upsilon_std: us,
            }
        })
        .collect()
}

/// All trials of a run, in trial order, without writing anything.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    let quantizers = design_all(cfg, &cfg.algorithms)?;
    let per_trial: Vec<Result<Vec<TrialResult>>> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t, &quantizers))
        .collect();
    let mut results = Vec::new();
    for r in per_trial {
        results.extend(r?);
    }
    Ok(results)
}

/// Run every configured algorithm on `n_trials` seeded draws.
///
/// Writes `trials.csv` (`trial,algorithm,status,snr_db,upsilon`),
/// `aggregate.csv` and, unless disabled, one trace CSV per run.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let results = run_trials(cfg)?;
    let mut files = Vec::new();
    let mut trials_csv = String::from("trial,algorithm,status,snr_db,upsilon\n");
    for r in &results {
        match &r.outcome {
            Ok(rep) => {
                let _ = writeln!(
                    trials_csv,
                    "{},{},ok,{},{}",
                    r.trial,
                    r.label,
                    format_db(rep.snr_db),
                    rep.upsilon
                );
            }
            Err(msg) => {
                let _ = writeln!(
                    trials_csv,
                    "{},{},failed: {},,",
                    r.trial,
                    r.label,
                    msg.replace(',', ";")
                );
            }
        }
        if cfg.write_traces {
            if let Some(csv) = &r.trace_csv {
                let name = format!("trace_{}_trial{:03}.csv", r.label.replace(':', "_"), r.trial);
                write_file(&cfg.output.join(name), csv, &mut files)?;
            }
        }
    }
    write_file(&cfg.output.join("trials.csv"), &trials_csv, &mut files)?;

    let rows = aggregate(&results);
    let mut agg = String::from(
        "algorithm,k,n_ok,n_failed,n_exact,snr_db_mean_finite,snr_db_std,upsilon_mean,upsilon_std\n",
    );
    let mut summary = String::new();
    let mut failures = 0;
    for r in &rows {
        failures += r.n_failed;
        let _ = writeln!(
            agg,
            "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
            r.label,
            cfg.k,
            r.n_ok,
            r.n_failed,
            r.n_exact,
            r.snr_db_mean,
            r.snr_db_std,
            r.upsilon_mean,
            r.upsilon_std
        );
        let _ = writeln!(
            summary,
            "{:<14} SNR {:7.2} +- {:5.2} dB  upsilon {:.3}  ({} ok, {} failed, {} exact)",
            r.label, r.snr_db_mean, r.snr_db_std, r.upsilon_mean, r.n_ok, r.n_failed, r.n_exact
        );
    }
    write_file(&cfg.output.join("aggregate.csv"), &agg, &mut files)?;
    Ok(Outcome {
        files,
        summary,
        failures,
    })
}

/// One grid point of a CRB sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub input_snr_db: f64,
    /// `(kind, crb averaged over ensembles, any ensemble rank deficient)`.
    pub crb: Vec<(QuantKind, f64, bool)>,
    /// `(label, mean mse, ok runs, failed runs)`.
    pub mse: Vec<(String, f64, usize, usize)>,
}

/// MSE-versus-CRB sweep over `input_snr_db`: `n_ensembles` ensembles,
/// `n_noise` noise draws each. The noise level of each ensemble is set so
/// that its input SNR hits the grid value. MSE and CRB are averaged in
/// linear units and reported in dB.
pub fn crb_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    let quantizers = design_all(
        cfg,
        &[AlgoSpec {
            name: "qpr".into(),
            quantizer: Some(QuantKind::Lmq),
        }],
    )?;
    let labels: Vec<String> = cfg.algorithms.iter().map(|a| a.label(cfg.quantizer)).collect();
    let mut points = Vec::new();
    for &snr in &cfg.input_snr_db {
        struct EnsembleOut {
            crb: Vec<(f64, bool)>,
            mse: Vec<Vec<Option<f64>>>,
        }
        let per_ens: Vec<Result<EnsembleOut>> = (0..cfg.n_ensembles)
            .into_par_iter()
            .map(|ei| {
                let seed = cfg.base_seed + ei as u64;
                let e = MeasurementEnsemble::gaussian(cfg.m(), cfg.n, seed)?;
                let truth = cfg.truth(seed)?;
                let x = truth.x_star.view();
                let sigma = sigma_for_input_snr(&e, x, snr)?;
                let crbs = quantizers
                    .iter()
                    .map(|(_, q)| {
                        let c = crb(&e, x, q, sigma, cfg.cutoff)?;
                        Ok((c.crb_trace, c.rank_deficient))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut mses = vec![Vec::new(); cfg.algorithms.len()];
                for r in 0..cfg.n_noise {
                    let noise_seed = seed.wrapping_mul(1_000_003).wrapping_add(r as u64);
                    for (ai, spec) in cfg.algorithms.iter().enumerate() {
                        let kind = spec.quantizer.unwrap_or(cfg.quantizer);
                        let q = &quantizers.iter().find(|(k, _)| *k == kind).expect("designed").1;
                        let obs = acquire(&e, x, q, sigma, noise_seed)?;
                        let p = Problem::new(&e, &obs).with_truth(x);
                        let solver = cfg.solver(spec)?.with_seed(noise_seed);
                        mses[ai].push(
                            solve(&p, &solver)
                                .and_then(|tr| mse(tr.x_hat.view(), x))
                                .ok(),
                        );
                    }
                }
                Ok(EnsembleOut { crb: crbs, mse: mses })
            })
            .collect();
        let per_ens: Vec<EnsembleOut> = per_ens.into_iter().collect::<Result<_>>()?;
        let crb_rows = quantizers
            .iter()
            .enumerate()
            .map(|(qi, (kind, _))| {
                let vals: Vec<f64> = per_ens.iter().map(|o| o.crb[qi].0).collect();
                let rd = per_ens.iter().any(|o| o.crb[qi].1);
                (*kind, mean_std(&vals).0, rd)
            })
            .collect();
        let mse_rows = labels
            .iter()
            .enumerate()
            .map(|(ai, label)| {
                let all: Vec<Option<f64>> =
                    per_ens.iter().flat_map(|o| o.mse[ai].iter().copied()).collect();
                let ok: Vec<f64> = all.iter().flatten().copied().collect();
                (label.clone(), mean_std(&ok).0, ok.len(), all.len() - ok.len())
            })
            .collect();
        points.push(SweepPoint {
            input_snr_db: snr,
            crb: crb_rows,
            mse: mse_rows,
        });
    }
    Ok(points)
}

fn db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// Writes `crb.csv` (`input_snr_db,crb_db,quantizer,k,rank_deficient`) and
/// `mse.csv` (`input_snr_db,algorithm,k,mse_db,n_ok,n_failed`).
pub fn cmd_crb_sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let points = crb_sweep(cfg)?;
    let mut crb_csv = String::from("input_snr_db,crb_db,quantizer,k,rank_deficient\n");
    let mut mse_csv = String::from("input_snr_db,algorithm,k,mse_db,n_ok,n_failed\n");
    let mut summary = String::new();
    let mut failures = 0;
    for p in &points {
        for (kind, c, rd) in &p.crb {
            let _ = writeln!(
                crb_csv,
                "{},{:.6},{},{},{}",
                p.input_snr_db,
                db(*c),
                kind.label(),
                cfg.k,
                rd
            );
        }
        let _ = write!(summary, "SNR_in {:5.1} dB:", p.input_snr_db);
        for (kind, c, rd) in &p.crb {
            let _ = write!(
                summary,
                "  CRB-{} {:7.2}{}",
                kind.label(),
                db(*c),
                if *rd { " (rank deficient)" } else { "" }
            );
        }
        for (label, m, ok, failed) in &p.mse {
            failures += failed;
            let _ = writeln!(
                mse_csv,
                "{},{},{},{:.6},{},{}",
                p.input_snr_db,
                label,
                cfg.k,
                db(*m),
                ok,
                failed
            );
            let _ = write!(summary, "  {label} {:7.2}", db(*m));
        }
        summary.push('\n');
    }
    let mut files = Vec::new();
    write_file(&cfg.output.join("crb.csv"), &crb_csv, &mut files)?;
    write_file(&cfg.output.join("mse.csv"), &mse_csv, &mut files)?;
    Ok(Outcome {
        files,
        summary,
        failures,
    })
}

/// Writes `bounds.csv` over the `deltas` x `rhos` grid (saturation level
/// `tau`, or that of the configured quantizer) and `robustness.csv` over
/// `robust_k` x `noise_var`, and reports the distinguishability numbers of
/// the configured quantizer at `rho`.
pub fn cmd_analysis(cfg: &ExperimentConfig) -> Result<Outcome> {
    let q = cfg.quantizer.design(cfg.k, cfg.last_symbol)?;
    let tau = cfg.tau.unwrap_or_else(|| q.saturation_threshold());
    let mut files = Vec::new();
    write_file(
        &cfg.output.join("bounds.csv"),
        &bound_table(&cfg.deltas, &cfg.rhos, tau, cfg.eps)?,
        &mut files,
    )?;
    let qs: Vec<Quantizer> = cfg
        .robust_levels
        .iter()
        .map(|&k| Quantizer::equiprobable(k, cfg.last_symbol))
        .collect::<Result<_>>()?;
    write_file(
        &cfg.output.join("robustness.csv"),
        &robustness_table(&qs, &cfg.noise_variances, cfg.mc_trials, cfg.base_seed)?,
        &mut files,
    )?;
    let rep = distinguishability(&q, cfg.rho, cfg.eps)?;
    let m_text = match rep.m_min {
        Some(m) => m.to_string(),
        None => "vacuous bound".to_string(),
    };
    let summary = format!(
        "quantizer {} k={} rho={}: pe1 <= {:.4}, pe2 <= {:.4}, pe_max = {:.4}, m_min(eps={}) = {}\n",
        cfg.quantizer.label(),
        cfg.k,
        cfg.rho,
        rep.pe1_bound,
        rep.pe2_bound,
        rep.pe_max,
        cfg.eps,
        m_text
    );
    Ok(Outcome {
        files,
        summary,
        failures: 0,
    })
}
