//! Hecke eigenforms of a level-1 weight: eigenvalues, harmonic weights,
//! central values and the Petersson check.

use moment_lab::modforms::{form_space, petersson_residual};
use moment_lab::PrecisionContext;

fn main() -> moment_lab::Result<()> {
    let ctx = PrecisionContext::default();
    let weight = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(24u32);
    let sp = form_space(weight, &ctx)?;
    println!("weight {weight}: dim {}, n_max {}, c_max {}, held-out residual {:.2e}", sp.dim, sp.n_max, sp.c_max, sp.heldout_residual);
    for (i, f) in sp.forms.iter().enumerate() {
        println!(
            "  f{i}: λ(2) = {:+.12}  ω = {:.12}  L(1/2) = {:.12}",
            f.lambda[2].to_f64(),
            f.omega()?.to_f64(),
            f.central_value.as_ref().map(|v| v.to_f64()).unwrap_or(f64::NAN)
        );
    }
    let chk = petersson_residual(&sp.forms, 1, 2, 200, &ctx)?;
    println!("Petersson (1, 2) at c ≤ 200: residual {:.2e}, tail bound {:.2e}", chk.residual, chk.tail_bound);
    Ok(())
}
