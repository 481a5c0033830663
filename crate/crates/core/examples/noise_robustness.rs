//! Probability that pre-quantization noise leaves the bin unchanged.

use qprkit::analysis::robustness_factor_mc;
use qprkit::{LastSymbolRule, Quantizer};

fn main() -> qprkit::Result<()> {
    let variances = [0.0, 0.01, 0.05, 0.1, 0.2];
    print!("   k");
    for v in variances {
        print!("  s2={v:<5}");
    }
    println!();
    for k in [2, 8, 32] {
        let q = Quantizer::equiprobable(k, LastSymbolRule::TwoDelta)?;
        print!("{k:4}");
        for v in variances {
            print!("  {:8.4}", robustness_factor_mc(&q, v, 20_000, 3)?);
        }
        println!();
    }
    Ok(())
}
