//! First moment: exact formula with the V₁ double sum, and the size of V₁
//! against the (1/√l)(2πe l/k)^k envelope.

use moment_lab::moments::{first_moment_envelope, first_moment_exact, v1_sum, V1_TAIL};
use moment_lab::{mp, PrecisionContext};
use rug::Complex;

fn main() -> moment_lab::Result<()> {
    let ctx = PrecisionContext::default();
    let z = Complex::new(ctx.prec());
    for w in [12u32, 16, 20] {
        let r = first_moment_exact(1, w, &z, &z, &ctx)?;
        println!("weight {w}: Σ ω L(1/2) = {:.15}  residual {:.2e}", r.lhs.real().to_f64(), r.residual);
    }
    for k in [20u32, 30, 40] {
        let (v1, _, pairs) = v1_sum(1, k, &z, &z, V1_TAIL, &ctx)?;
        println!("k = {k}: |V₁| = {:.3e} over {pairs} pairs, envelope {:.3e}", mp::cabs_f64(&v1), first_moment_envelope(1, k));
    }
    Ok(())
}
