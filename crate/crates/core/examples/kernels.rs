//! φ_k, Φ_k and ψ_k at a few points, with the ODE residual of φ_k.

use moment_lab::kernels::{big_phi_k, ode_residual, phi_k, psi_k, KernelParams, OdeForm};
use moment_lab::PrecisionContext;

fn main() -> moment_lab::Result<()> {
    let ctx = PrecisionContext::default();
    for k in [6u32, 12, 24] {
        let p = KernelParams::central(k, ctx.prec());
        for x in [0.1, 0.25, 0.5] {
            let xf = ctx.f(x);
            let phi = phi_k(&xf, k, &ctx)?;
            let big = big_phi_k(&xf, &p, &ctx)?;
            let psi = psi_k(&xf, &p, &ctx)?;
            println!(
                "k = {k:2}  x = {x:4}  φ = {:+.12e}  Φ = {:.12e}  ψ = {:.12e}",
                phi.re().to_f64(),
                big.re().to_f64(),
                psi.re().to_f64()
            );
        }
        println!("         ODE residual at x = 0.3: {:.2e}", ode_residual(OdeForm::Phi, &ctx.f(0.3), k, &ctx)?);
    }
    Ok(())
}
