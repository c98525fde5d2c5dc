//! Bessel kernels k₀, k₁ and a quadrature cross-check of their Mellin
//! transforms against γ(w/2, v)·cos(πw/2) and γ(w/2, v)·sin π(1/2+v).

use rug::{Complex, Float};
use serde::{Deserialize, Serialize};

use super::bessel::{bessel_j_complex, bessel_k_complex, bessel_y};
use super::gamma::gamma_pair_factor;
use super::quad::{exp_sinh, gl_integrate, tanh_sinh, wynn_epsilon};
use crate::error::{Error, Result};
use crate::mp::{self, PrecisionContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BesselKernelKind {
    K0,
    K1,
}

#[derive(Debug, Clone)]
pub struct MellinCheck {
    pub quadrature: Complex,
    pub closed_form: Complex,
}

impl MellinCheck {
    pub fn relative_error(&self) -> f64 {
        let d = mp::cabs_f64(&Complex::with_val(self.quadrature.prec().0, &self.quadrature - &self.closed_form));
        d / mp::cabs_f64(&self.closed_form).max(1e-300)
    }
}

fn is_zero(v: &Complex) -> bool {
    v.real().is_zero() && v.imag().is_zero()
}

/// k₀(x,v) = (J_{2v}(x) − J_{−2v}(x)) / (2cos π(1/2+v)); at v = 0 the limit −Y₀(x).
pub fn kernel_k0(x: &Float, v: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    if is_zero(v) {
        let y = bessel_y(0, x, ctx)?;
        return Ok(Complex::with_val(ctx.prec(), -y));
    }
    let wp = ctx.prec() + 16 + (1.0 / mp::cabs_f64(v)).log2().max(0.0).ceil() as u32;
    let wctx = ctx.raised(wp - ctx.prec());
    let nu = Complex::with_val(wp, v * 2u32);
    let jp = bessel_j_complex(&nu, x, &wctx)?;
    let jm = bessel_j_complex(&Complex::with_val(wp, -&nu), x, &wctx)?;
    let arg = Complex::with_val(wp, v + Float::with_val(wp, 0.5)) * mp::pi(wp);
    let den = arg.cos() * 2u32;
    Ok(Complex::with_val(ctx.prec(), (jp - jm) / den))
}

/// k₁(x,v) = (2/π) sin π(1/2+v) K_{2v}(x).
pub fn kernel_k1(x: &Float, v: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    let wp = ctx.prec() + 8;
    let wctx = ctx.raised(8);
    let nu = Complex::with_val(wp, v * 2u32);
    let k = bessel_k_complex(&nu, x, &wctx)?;
    let pi = mp::pi(wp);
    let arg = Complex::with_val(wp, v + Float::with_val(wp, 0.5)) * &pi;
    let s = arg.sin() * 2u32 / pi;
    Ok(Complex::with_val(ctx.prec(), s * k))
}

pub fn kernel(kind: BesselKernelKind, x: &Float, v: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    match kind {
        BesselKernelKind::K0 => kernel_k0(x, v, ctx),
        BesselKernelKind::K1 => kernel_k1(x, v, ctx),
    }
}

/// Closed-form Mellin transform of a kernel.
pub fn mellin_closed_form(kind: BesselKernelKind, w: &Complex, v: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    let wp = ctx.prec() + 16;
    let wctx = ctx.raised(16);
    let half_w = Complex::with_val(wp, w / 2u32);
    let g = gamma_pair_factor(&half_w, v, &wctx)?;
    let pi = mp::pi(wp);
    let f = match kind {
        BesselKernelKind::K0 => Complex::with_val(wp, &half_w * &pi).cos(),
        BesselKernelKind::K1 => (Complex::with_val(wp, v + Float::with_val(wp, 0.5)) * &pi).sin(),
    };
    Ok(Complex::with_val(ctx.prec(), g * f))
}

/// Quadrature of ∫₀^∞ kernel(x,v) x^{w−1} dx next to the closed form.
///
/// k₁ decays exponentially and is integrated by exp-sinh. k₀ oscillates with
/// amplitude x^{Re w − 3/2}: [0, π] goes to tanh-sinh, then Gauss–Legendre
/// panels of length π give partial sums that Wynn's epsilon extrapolates.
pub fn mellin_kernel_check(kind: BesselKernelKind, w: &Complex, v: &Complex, ctx: &PrecisionContext) -> Result<MellinCheck> {
    let rw = w.real().to_f64();
    let rv = v.real().to_f64().abs();
    let ok = match kind {
        BesselKernelKind::K0 => 2.0 * rv < rw && rw < 1.5,
        BesselKernelKind::K1 => 2.0 * rv < rw,
    };
    if !ok {
        return Err(Error::Domain(format!("Re w = {rw} outside the Mellin strip for {kind:?}")));
    }
    let closed_form = mellin_closed_form(kind, w, v, ctx)?;
    let prec = ctx.prec();
    let tol = ctx.tail_tol.max(2f64.powi(-(prec as i32) + 16));
    let wm1 = Complex::with_val(prec, w - 1u32);
    let integrand = |x: &Float| -> Complex {
        match kernel(kind, x, v, ctx) {
            Ok(k) => k * mp::rpow(x, &wm1),
            Err(_) => Complex::with_val(prec, (f64::NAN, f64::NAN)),
        }
    };
    let quadrature = match kind {
        BesselKernelKind::K1 => exp_sinh(integrand, &Float::with_val(prec, 0), prec, tol)?.value,
        BesselKernelKind::K0 => {
            let pi = mp::pi(prec);
            let head = tanh_sinh(integrand, &Float::with_val(prec, 0), &pi, prec, tol)?.value;
            let panels = 48usize;
            let mut partial = Vec::with_capacity(panels);
            let mut acc = head;
            for j in 1..=panels {
                let a = Float::with_val(prec, &pi * j as u32);
                let b = Float::with_val(prec, &pi * (j + 1) as u32);
                acc += gl_integrate(integrand, &a, &b, 40, prec);
                partial.push(acc.clone());
            }
            wynn_epsilon(&partial).0
        }
    };
    if !quadrature.real().is_finite() {
        return Err(Error::NonConvergence("kernel evaluation failed inside quadrature".into()));
    }
    Ok(MellinCheck { quadrature, closed_form })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128)
    }

    #[test]
    fn k0_limit_is_minus_y0() {
        let c = ctx();
        let x = c.f(2.3);
        let small = kernel_k0(&x, &c.c(0.0, 1e-12), &c).unwrap();
        let lim = kernel_k0(&x, &c.c(0.0, 0.0), &c).unwrap();
        assert!(mp::cabs_f64(&Complex::with_val(128, &small - &lim)) < 1e-20);
    }

    #[test]
    fn k1_at_zero_order_unit_integral() {
        let c = ctx();
        let r = mellin_kernel_check(BesselKernelKind::K1, &c.c(1.0, 0.0), &c.c(0.0, 0.0), &c).unwrap();
        assert!(mp::cabs_f64(&Complex::with_val(128, &r.closed_form - 1u32)) < 1e-30);
        assert!(r.relative_error() < 1e-25);
    }

    #[test]
    fn k0_at_zero_order_vanishes() {
        let c = ctx();
        let r = mellin_kernel_check(BesselKernelKind::K0, &c.c(1.0, 0.0), &c.c(0.0, 0.0), &c).unwrap();
        assert!(mp::cabs_f64(&r.closed_form) < 1e-30);
        assert!(mp::cabs_f64(&r.quadrature) < 1e-10);
    }

    #[test]
    fn imaginary_order_points() {
        let c = ctx();
        for (kind, w, v) in [
            (BesselKernelKind::K1, c.c(1.2, 0.0), c.c(0.0, 0.3)),
            (BesselKernelKind::K1, c.c(2.5, 1.0), c.c(0.0, 0.45)),
            (BesselKernelKind::K0, c.c(0.8, 0.0), c.c(0.0, 0.3)),
            (BesselKernelKind::K0, c.c(1.2, 0.5), c.c(0.0, 0.1)),
        ] {
            let r = mellin_kernel_check(kind, &w, &v, &c).unwrap();
            assert!(r.relative_error() < 1e-10, "{kind:?} w={w} v={v}: {}", r.relative_error());
        }
    }

    #[test]
    fn strip_violation() {
        let c = ctx();
        assert!(mellin_kernel_check(BesselKernelKind::K0, &c.c(1.6, 0.0), &c.c(0.0, 0.1), &c).is_err());
        assert!(mellin_kernel_check(BesselKernelKind::K1, &c.c(-0.1, 0.0), &c.c(0.0, 0.1), &c).is_err());
    }
}
