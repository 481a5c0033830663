//! Equiprobable and Lloyd-Max quantizers for chi-square(1) intensities.
//!
//! `cargo run --example design_quantizer -- 8`

use qprkit::harness::design_summary;
use qprkit::{LastSymbolRule, Quantizer};

fn main() -> qprkit::Result<()> {
    let k: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(8);
    let designs = [
        ("equiprobable", Quantizer::equiprobable(k, LastSymbolRule::TwoDelta)?),
        ("lloyd-max", Quantizer::lloyd_max_default(k)?),
    ];
    for (name, q) in &designs {
        let s = design_summary(q, 100_000, 7);
        println!("{name} k={k}");
        println!("  thresholds {:?}", rounded(q.thresholds()));
        println!("  symbols    {:?}", rounded(q.symbols()));
        println!(
            "  delta {:.4}  delta_sq {:.4}  tau_(k-1) {:.4}  SNR_q {:.2} dB",
            s.delta, s.delta_sq, s.tau_penultimate, s.quantization_snr_db
        );
    }
    // records round-trip through text
    let rec = designs[0].1.to_record();
    assert_eq!(Quantizer::from_record(&rec)?, designs[0].1);
    Ok(())
}

fn rounded(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1e4).round() / 1e4).collect()
}
