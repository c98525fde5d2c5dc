//! Smoothly averaged first and second moments over weights 4k ~ K.

use moment_lab::moments::{averaged_moments, TestWeight};
use moment_lab::PrecisionContext;

fn main() -> moment_lab::Result<()> {
    let ctx = PrecisionContext::default();
    let h = TestWeight::default();
    for big_k in [24.0, 32.0] {
        for l in [1u64, 2] {
            let a = averaged_moments(l, big_k, &h, &ctx)?;
            println!(
                "K = {big_k}  l = {l}  weights {:?}\n  A1 {:.6} vs {:.6}\n  A2 {:.6} vs {:.6} (log 8π constant: {:.6})",
                a.weights,
                a.a1_direct.to_f64(),
                a.a1_predicted.to_f64(),
                a.a2_direct.to_f64(),
                a.a2_predicted.to_f64(),
                a.a2_predicted_printed.to_f64()
            );
        }
    }
    Ok(())
}
