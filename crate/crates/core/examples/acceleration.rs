//! Plain versus accelerated projected gradient on the same draws.

use qprkit::measurement::{acquire, GroundTruth, MeasurementEnsemble};
use qprkit::solvers::solve;
use qprkit::{LastSymbolRule, Problem, Quantizer, SolverConfig};

fn main() -> qprkit::Result<()> {
    let n = 32;
    let trials = 5;
    let q = Quantizer::equiprobable(8, LastSymbolRule::TwoDelta)?;
    let lmq = Quantizer::lloyd_max_default(8)?;
    let algos = [
        ("qpr", SolverConfig::qpr(), &q),
        ("qpr-a", SolverConfig::qpr_a(), &q),
        ("pl", SolverConfig::pl(), &lmq),
        ("pl-a", SolverConfig::pl_a(), &lmq),
    ];
    let mut sums = [0.0; 4];
    for t in 0..trials {
        let e = MeasurementEnsemble::gaussian(10 * n, n, t)?;
        let truth = GroundTruth::unit_sphere(n, t)?;
        for (i, (_, cfg, quant)) in algos.iter().enumerate() {
            let obs = acquire(&e, truth.x_star.view(), quant, 0.0, t)?;
            let p = Problem::new(&e, &obs).with_truth(truth.x_star.view());
            let tr = solve(&p, &cfg.clone().with_seed(t))?;
            sums[i] += tr.final_row().snr_db.unwrap_or(f64::NAN);
        }
    }
    for (i, (name, _, _)) in algos.iter().enumerate() {
        println!("{name:6} mean SNR {:6.2} dB", sums[i] / trials as f64);
    }
    Ok(())
}
