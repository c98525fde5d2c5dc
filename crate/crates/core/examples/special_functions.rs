//! Estermann functional equation and Mellin transforms of the Bessel kernels.

use moment_lab::specialfn::estermann::{estermann_d, estermann_functional_rhs};
use moment_lab::specialfn::mellin::{mellin_kernel_check, BesselKernelKind};
use moment_lab::{mp, PrecisionContext};
use rug::Complex;

fn main() -> moment_lab::Result<()> {
    let ctx = PrecisionContext::default();
    let c = |re: f64, im: f64| Complex::with_val(ctx.prec(), (re, im));
    let (s, v) = (c(-0.5, 0.0), c(0.0, 0.7));
    let lhs = estermann_d(&s, &v, 2, 5, &ctx)?;
    let rhs = estermann_functional_rhs(&s, &v, 2, 5, &ctx)?;
    println!("|D_v(−1/2; 2/5)| = {:.15e}, functional-equation side {:.15e}", mp::cabs_f64(&lhs), mp::cabs_f64(&rhs));
    let low = PrecisionContext::new(128);
    for (kind, w) in [(BesselKernelKind::K0, c(0.8, 0.0)), (BesselKernelKind::K1, c(1.2, 0.0))] {
        let m = mellin_kernel_check(kind, &w, &c(0.0, 0.3), &low)?;
        println!("{kind:?} Mellin transform at w = {:.2}: relative error {:.2e}", w.real().to_f64(), m.relative_error());
    }
    Ok(())
}
