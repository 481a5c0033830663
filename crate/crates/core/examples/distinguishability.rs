//! Collision bounds for two unit signals and the measurement count they imply.

use qprkit::analysis::{bound_table, distinguishability, g_exact, g_hat, pe1_bound};
use qprkit::{LastSymbolRule, Quantizer};

fn main() -> qprkit::Result<()> {
    println!("delta'   g_exact   g_hat");
    for d in [0.1, 0.5, 1.0, 2.0, 4.0] {
        println!("{d:6.2}  {:8.5}  {:8.5}", g_exact(d)?, g_hat(d));
    }
    println!("pe1(delta=0.5, rho=0.6) <= {:.4}", pe1_bound(0.5, 0.6)?);

    for k in [4, 8, 16] {
        let q = Quantizer::equiprobable(k, LastSymbolRule::TwoDelta)?;
        let r = distinguishability(&q, 0.6, 0.01)?;
        match r.m_min {
            Some(m) => println!("k={k:2}: pe_max {:.4}, m >= {m}", r.pe_max),
            None => println!("k={k:2}: pe_max {:.4}, bound vacuous", r.pe_max),
        }
    }
    print!("{}", bound_table(&[0.25, 0.5, 1.0], &[0.0, 0.6], 2.7055, 0.01)?);
    Ok(())
}
