//! Exact second-moment formula against the oracle sum Σ ω_f λ_f(l) L_f(1/2)².

use moment_lab::moments::{second_moment_grid, second_moment_main};
use moment_lab::PrecisionContext;

fn main() -> moment_lab::Result<()> {
    let ctx = PrecisionContext::default();
    let points: Vec<(u64, u32)> = [12u32, 16, 20].iter().flat_map(|&w| (1..=3).map(move |l| (l, w))).collect();
    for r in second_moment_grid(&points, &ctx)? {
        let main = second_moment_main(r.l, r.k, &ctx)?;
        println!(
            "weight {:2}  l = {}  exact {:+.15e}  main {:+.6e}  residual {:.2e}  budget {:.2e}  ({} Φ terms, {} ms)",
            r.weight,
            r.l,
            r.exact.to_f64(),
            main.to_f64(),
            r.residual,
            r.budget(),
            r.n_terms,
            r.wall_time_ms
        );
    }
    Ok(())
}
