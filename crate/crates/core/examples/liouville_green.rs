//! Liouville-Green approximation of Φ_k against the exact series, and the
//! observed decay order of the N = 1 error in k.

use moment_lab::kernels::big_phi_k_central;
use moment_lab::lgreen::{error_order_fit, lg_approx_big_phi, lg_constants, LgCase};
use moment_lab::PrecisionContext;

fn main() -> moment_lab::Result<()> {
    let ctx = PrecisionContext::default();
    let x = ctx.f(0.3);
    for k in [20u32, 40, 80] {
        let exact = big_phi_k_central(&x, k, &ctx)?;
        let lg = lg_approx_big_phi(&x, k, 1, &ctx)?;
        let err = (lg.value.to_f64() - exact.re().to_f64()).abs();
        let c = lg_constants(k, &ctx)?;
        println!(
            "k = {k:3}  Φ = {:.10e}  LG error {err:.2e} (envelope {:.2e})  C_Y = {:.8}  C_K = {:.8}",
            exact.re().to_f64(),
            lg.error_envelope,
            c.c_y.to_f64(),
            c.c_k.to_f64()
        );
    }
    let slope = error_order_fit(LgCase::Exponential, 1, &[20, 40, 80], &x, &ctx)?;
    println!("fitted error order (exponential case, N = 1): k^{slope:.3}");
    Ok(())
}
