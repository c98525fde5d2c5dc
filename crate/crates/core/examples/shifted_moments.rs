//! Second moment with general shifts (u, v), and the Richardson limit back
//! to the central formula.

use moment_lab::moments::{second_moment_exact_uv, second_moment_formula, uv_limit, SECOND_MOMENT_TAIL};
use moment_lab::PrecisionContext;
use rug::Complex;

fn main() -> moment_lab::Result<()> {
    let ctx = PrecisionContext::default();
    let u = Complex::with_val(ctx.prec(), (0.1, 0));
    let v = Complex::with_val(ctx.prec(), (0, 0.2));
    for l in 1..=3u64 {
        let r = second_moment_exact_uv(l, 16, &u, &v, &ctx)?;
        println!(
            "l = {l}: formula {:.15e}  oracle {:.15e}  residual {:.2e} (tail {:.2e})",
            r.rhs.real().to_f64(),
            r.lhs.real().to_f64(),
            r.residual,
            r.certified_tail
        );
    }
    let lim = uv_limit(1, 12, 0.02, &ctx)?;
    let central = second_moment_formula(1, 12, SECOND_MOMENT_TAIL, &ctx)?;
    println!("weight 12, l = 1: limit {:.12}  central {:.12}", lim.to_f64(), central.exact.to_f64());
    Ok(())
}
