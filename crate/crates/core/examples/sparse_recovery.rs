//! Sparse signals: hard thresholding after each projection.

use qprkit::measurement::{acquire, GroundTruth, MeasurementEnsemble};
use qprkit::solvers::solve;
use qprkit::{LastSymbolRule, Problem, Quantizer, SolverConfig};

fn main() -> qprkit::Result<()> {
    let (n, s) = (32, 3);
    let q = Quantizer::equiprobable(4, LastSymbolRule::TwoDelta)?;
    for seed in 0..3u64 {
        let e = MeasurementEnsemble::gaussian(10 * n, n, seed)?;
        let truth = GroundTruth::sparse(n, s, seed)?;
        let obs = acquire(&e, truth.x_star.view(), &q, 0.0, seed)?;
        let p = Problem::new(&e, &obs).with_truth(truth.x_star.view());
        let dense = solve(&p, &SolverConfig::qpr_a().with_seed(seed))?;
        let sparse = solve(&p, &SolverConfig::sqpr_a(s).with_seed(seed))?;
        let support = sparse.x_hat.iter().filter(|v| **v != 0.0).count();
        println!(
            "seed {seed}: qpr-a {:6.2} dB  sqpr-a {:6.2} dB  (support {support})",
            dense.final_row().snr_db.unwrap_or(f64::NAN),
            sparse.final_row().snr_db.unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
