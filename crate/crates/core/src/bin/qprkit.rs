use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qprkit::harness::{self, ExperimentConfig, Outcome};

#[derive(Parser)]
#[command(name = "qprkit", version, about = "Phase retrieval from quantized intensity measurements")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Design a quantizer and print its precision summary
    DesignQuant(Common),
    /// Run solvers over seeded trials
    Run(Common),
    /// Sweep input SNR and compare MSE with the Cramér-Rao bound
    CrbSweep(Common),
    /// Distinguishability bound tables and noise robustness factor
    Analysis(Common),
}

#[derive(Args)]
struct Common {
    /// key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset (acceleration, baselines, sparse, crb)
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(short, long)]
    k: Option<String>,
    /// eq or lmq
    #[arg(long)]
    kind: Option<String>,
    /// Comma list of algo[:eq|lmq]
    #[arg(long)]
    algorithms: Option<String>,
    #[arg(long)]
    signal: Option<String>,
    #[arg(long)]
    sparsity: Option<String>,
    #[arg(long)]
    sigma_xi: Option<String>,
    /// Comma list or start:stop:step
    #[arg(long)]
    input_snr_db: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    iters: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    ensembles: Option<String>,
    #[arg(long)]
    noise_draws: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    mc_trials: Option<String>,
    /// Output directory
    #[arg(short, long)]
    out: Option<String>,
    /// Any other key, repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn load(&self) -> qprkit::Result<ExperimentConfig> {
        let mut o: Vec<(String, String)> = Vec::new();
        let flags = [
            ("experiment", &self.experiment),
            ("n", &self.n),
            ("m", &self.m),
            ("k", &self.k),
            ("quantizer", &self.kind),
            ("algorithms", &self.algorithms),
            ("signal", &self.signal),
            ("sparsity", &self.sparsity),
            ("sigma_xi", &self.sigma_xi),
            ("input_snr_db", &self.input_snr_db),
            ("trials", &self.trials),
            ("iters", &self.iters),
            ("seed", &self.seed),
            ("ensembles", &self.ensembles),
            ("noise_draws", &self.noise_draws),
            ("rho", &self.rho),
            ("eps", &self.eps),
            ("mc_trials", &self.mc_trials),
            ("out", &self.out),
        ];
        for (key, val) in flags {
            if let Some(v) = val {
                o.push((key.to_string(), v.clone()));
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| qprkit::QprError::Config(format!("--set {kv:?}: expected KEY=VALUE")))?;
            o.push((k.trim().to_string(), v.trim().to_string()));
        }
        ExperimentConfig::load(self.config.as_deref(), &o)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            return ExitCode::from(code);
        }
    };
    let (common, run): (&Common, fn(&ExperimentConfig) -> qprkit::Result<Outcome>) = match &cli.cmd {
        Cmd::DesignQuant(c) => (c, harness::cmd_design_quant),
        Cmd::Run(c) => (c, harness::cmd_run),
        Cmd::CrbSweep(c) => (c, harness::cmd_crb_sweep),
        Cmd::Analysis(c) => (c, harness::cmd_analysis),
    };
    let result = common
        .load()
        .and_then(|cfg| harness::with_thread_pool(|| run(&cfg))?);
    match result {
        Ok(out) => {
            print!("{}", out.summary);
            for f in &out.files {
                eprintln!("wrote {}", f.display());
            }
            if out.failures > 0 {
                eprintln!("{} solver run(s) failed", out.failures);
            }
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
