//! MSE of the accelerated solver against the Cramér-Rao bound.

use qprkit::crb::{crb, sigma_for_input_snr, DEFAULT_CUTOFF};
use qprkit::measurement::{acquire, GroundTruth, MeasurementEnsemble};
use qprkit::metrics::mse;
use qprkit::solvers::solve;
use qprkit::{LastSymbolRule, Problem, Quantizer, SolverConfig};

fn main() -> qprkit::Result<()> {
    let n = 16;
    let truth = GroundTruth::two_sinusoid(n)?;
    let x = truth.x_star.view();
    let q = Quantizer::equiprobable(8, LastSymbolRule::TwoDelta)?;
    let lmq = Quantizer::lloyd_max_default(8)?;
    println!("SNR_in   CRB-EQ   CRB-LMQ   MSE(qpr-a)");
    for snr in [20.0, 25.0, 30.0, 35.0] {
        let (mut c_eq, mut c_lmq, mut err) = (0.0, 0.0, 0.0);
        let ens = 3;
        let draws = 3;
        for s in 0..ens {
            let e = MeasurementEnsemble::gaussian(10 * n, n, 100 + s)?;
            let sigma = sigma_for_input_snr(&e, x, snr)?;
            c_eq += crb(&e, x, &q, sigma, DEFAULT_CUTOFF)?.crb_trace;
            c_lmq += crb(&e, x, &lmq, sigma, DEFAULT_CUTOFF)?.crb_trace;
            for r in 0..draws {
                let obs = acquire(&e, x, &q, sigma, 1000 * s + r)?;
                let p = Problem::new(&e, &obs).with_truth(x);
                let tr = solve(&p, &SolverConfig::qpr_a())?;
                err += mse(tr.x_hat.view(), x)?;
            }
        }
        let db = |v: f64| 10.0 * v.log10();
        println!(
            "{snr:5.1}  {:8.2}  {:8.2}  {:8.2}",
            db(c_eq / ens as f64),
            db(c_lmq / ens as f64),
            db(err / (ens * draws) as f64)
        );
    }
    Ok(())
}
