//! Recover a unit-norm signal from 8-level quantized intensities.

use qprkit::measurement::{acquire, GroundTruth, MeasurementEnsemble};
use qprkit::solvers::solve;
use qprkit::{LastSymbolRule, Problem, Quantizer, ReconReport, SolverConfig};

fn main() -> qprkit::Result<()> {
    let (n, seed) = (32, 11);
    let e = MeasurementEnsemble::gaussian(10 * n, n, seed)?;
    let truth = GroundTruth::unit_sphere(n, seed)?;
    let q = Quantizer::equiprobable(8, LastSymbolRule::TwoDelta)?;
    let obs = acquire(&e, truth.x_star.view(), &q, 0.0, seed)?;

    let problem = Problem::new(&e, &obs).with_truth(truth.x_star.view());
    let trace = solve(&problem, &SolverConfig::qpr_a().with_seed(seed))?;
    for row in trace.rows.iter().step_by(10) {
        println!(
            "iter {:3}  F {:10.4}  SNR {:6.2} dB  upsilon {:.3}",
            row.iter,
            row.cost,
            row.snr_db.unwrap_or(f64::NAN),
            row.upsilon
        );
    }
    let rep = ReconReport::evaluate(&e, &obs, trace.x_hat.view(), truth.x_star.view())?;
    println!("final SNR {:.2} dB, consistency {:.3}", rep.snr_db, rep.upsilon);
    Ok(())
}
