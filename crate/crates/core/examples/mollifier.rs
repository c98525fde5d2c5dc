//! Mollified moments and the resulting non-vanishing lower bound.

use moment_lab::moments::{mollified_moments, nonvanishing_report, MollifierConfig};
use moment_lab::PrecisionContext;

fn main() -> moment_lab::Result<()> {
    let ctx = PrecisionContext::default();
    for w in [16u32, 20, 24, 28] {
        let cfg = MollifierConfig::new(0.24)?;
        let m = mollified_moments(w, &cfg, &ctx)?;
        let r = nonvanishing_report(w, &cfg, &ctx)?;
        println!(
            "weight {w}: M = {:.3}  M1 = {:.6}  M2 = {:.6}  lower bound {:.3} (Δ = {})  observed {:.3}",
            m.big_m,
            m.m1.to_f64(),
            m.m2.to_f64(),
            r.lower_bound,
            r.best_delta,
            r.proportion_observed
        );
    }
    Ok(())
}
