//! The divisor-twisted series D_v(s, d/c) = Σ τ_v(n) e(nd/c) n^{−s}, its
//! continuation through Hurwitz zeta values, and its functional equation.

use rug::{Complex, Float};

use super::gamma::gamma_pair_factor;
use super::zeta::{lerch_zeta, riemann_zeta};
use crate::arith::{divisor_tau, gcd, mod_inverse};
use crate::error::{Error, Result};
use crate::mp::{self, PrecisionContext};

fn check_args(d: i64, c: u64) -> Result<()> {
    if c == 0 || gcd(d, c as i64) != 1 {
        return Err(Error::NotCoprime(format!("gcd({d}, {c}) ≠ 1")));
    }
    Ok(())
}

fn is_one(z: &Complex) -> bool {
    z.imag().is_zero() && *z.real() == 1
}

/// D_v(s, d/c) for all s ≠ 1 ± v.
///
/// Writing n = n₁n₂ with n₁ ≡ a, n₂ ≡ b (mod c) gives
/// c^{−2s} Σ_{a,b=1}^{c} e(abd/c) ζ(a/c, 0; s−v) ζ(b/c, 0; s+v),
/// which is used on the whole plane; for Re s > 1 it equals the series.
pub fn estermann_d(s: &Complex, v: &Complex, d: i64, c: u64, ctx: &PrecisionContext) -> Result<Complex> {
    check_args(d, c)?;
    let wp = ctx.prec() + 24 + 2 * (64 - c.leading_zeros());
    let wctx = ctx.raised(wp - ctx.prec());
    let sm = Complex::with_val(wp, s - v);
    let sp = Complex::with_val(wp, s + v);
    if is_one(&sm) || is_one(&sp) {
        return Err(Error::Pole("s = 1 ± v".into()));
    }
    let mut zm = Vec::with_capacity(c as usize);
    let mut zp = Vec::with_capacity(c as usize);
    for a in 1..=c {
        let alpha = Float::with_val(wp, a) / c;
        zm.push(lerch_zeta(&alpha, &sm, &wctx)?);
        zp.push(lerch_zeta(&alpha, &sp, &wctx)?);
    }
    let mut acc = Complex::new(wp);
    for a in 1..=c {
        let mut inner = Complex::new(wp);
        for b in 1..=c {
            let ph = ((a as i128 * b as i128 * d as i128).rem_euclid(c as i128)) as i64;
            inner += mp::e_rat(ph, c, wp) * &zp[(b - 1) as usize];
        }
        acc += inner * &zm[(a - 1) as usize];
    }
    let cs = mp::rpow(&Float::with_val(wp, c), &Complex::with_val(wp, s * -2i32));
    Ok(Complex::with_val(ctx.prec(), acc * cs))
}

/// Partial sum Σ_{n ≤ terms} τ_v(n) e(nd/c) n^{−s}; a direct oracle for Re s > 1.
pub fn estermann_direct(s: &Complex, v: &Complex, d: i64, c: u64, terms: u64, ctx: &PrecisionContext) -> Result<Complex> {
    check_args(d, c)?;
    let wp = ctx.prec() + 16;
    let wctx = ctx.raised(16);
    let ms = Complex::with_val(wp, -s);
    let mut acc = Complex::new(wp);
    for n in 1..=terms {
        let ph = ((n as i128 * d as i128).rem_euclid(c as i128)) as i64;
        let t = divisor_tau(n, v, &wctx) * mp::rpow(&Float::with_val(wp, n), &ms) * mp::e_rat(ph, c, wp);
        acc += t;
    }
    Ok(Complex::with_val(ctx.prec(), acc))
}

/// Right-hand side of the functional equation:
/// (4π/c)^{2s−1} γ(1−s,v) {−cos(πs) D_v(1−s, −d*/c) + sin(π(1/2+v)) D_v(1−s, d*/c)},
/// with d d* ≡ 1 (mod c) and γ(u,v) = 2^{2u−1}/π Γ(u+v)Γ(u−v).
pub fn estermann_functional_rhs(s: &Complex, v: &Complex, d: i64, c: u64, ctx: &PrecisionContext) -> Result<Complex> {
    check_args(d, c)?;
    let wp = ctx.prec() + 24;
    let wctx = ctx.raised(24);
    let dstar = if c == 1 { 0 } else { mod_inverse(d, c as i64).ok_or_else(|| Error::NotCoprime(format!("{d} mod {c}")))? };
    let one_s = Complex::with_val(wp, 1 - Complex::with_val(wp, s));
    let d_minus = estermann_d(&one_s, v, -dstar, c, &wctx)?;
    let d_plus = estermann_d(&one_s, v, dstar, c, &wctx)?;
    let pi = mp::pi(wp);
    let cos_ps = Complex::with_val(wp, s * &pi).cos();
    let half_v = Complex::with_val(wp, v + Float::with_val(wp, 0.5));
    let sin_v = Complex::with_val(wp, half_v * &pi).sin();
    let g = gamma_pair_factor(&one_s, v, &wctx)?;
    let base = Float::with_val(wp, &pi * 4u32) / c;
    let expo = Complex::with_val(wp, s * 2u32) - 1u32;
    let pref = mp::rpow(&base, &expo) * g;
    let bracket = sin_v * d_plus - cos_ps * d_minus;
    Ok(Complex::with_val(ctx.prec(), pref * bracket))
}

#[derive(Debug, Clone)]
pub struct ResidueCheck {
    pub numeric: Complex,
    pub predicted: Complex,
}

/// Residue at s = 1+v from ε·D_v(1+v+ε) at ε = 10⁻⁶ and 10⁻⁸ combined by one
/// Richardson step, next to the predicted c^{−1−2v} ζ(1+2v).
pub fn estermann_residue(v: &Complex, d: i64, c: u64, ctx: &PrecisionContext) -> Result<ResidueCheck> {
    check_args(d, c)?;
    let wp = ctx.prec() + 32;
    let wctx = ctx.raised(32);
    let at = |eps: f64| -> Result<Complex> {
        let e = Float::with_val(wp, eps);
        let s = Complex::with_val(wp, v + 1u32) + &e;
        Ok(estermann_d(&s, v, d, c, &wctx)? * e)
    };
    let (e1, e2) = (1e-6, 1e-8);
    let r1 = at(e1)?;
    let r2 = at(e2)?;
    let f1 = Float::with_val(wp, e1);
    let f2 = Float::with_val(wp, e2);
    let num = Complex::with_val(wp, &r2 * &f1) - Complex::with_val(wp, &r1 * &f2);
    let numeric = num / Float::with_val(wp, &f1 - &f2);
    let two_v = Complex::with_val(wp, v * 2u32);
    let z = riemann_zeta(&Complex::with_val(wp, &two_v + 1u32), &wctx)?;
    let cp = mp::rpow(&Float::with_val(wp, c), &Complex::with_val(wp, -1i32 - two_v));
    Ok(ResidueCheck { numeric: Complex::with_val(ctx.prec(), numeric), predicted: Complex::with_val(ctx.prec(), z * cp) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(a: &Complex, b: &Complex) -> f64 {
        mp::cabs_f64(&Complex::with_val(a.prec().0, a - b))
    }

    #[test]
    fn trivial_modulus_matches_direct_series() {
        let ctx = PrecisionContext::new(128);
        let s = ctx.c(2.0, 0.0);
        let v = ctx.c(0.0, 0.5);
        let full = estermann_d(&s, &v, 0, 1, &ctx).unwrap();
        // ζ(2−v)ζ(2+v) and the partial sum whose tail is below Σ_{n>N} d(n)/n²
        let zz = riemann_zeta(&Complex::with_val(128, &s - &v), &ctx).unwrap()
            * riemann_zeta(&Complex::with_val(128, &s + &v), &ctx).unwrap();
        assert!(d(&full, &zz) < 1e-35);
        let n = 20_000u64;
        let part = estermann_direct(&s, &v, 0, 1, n, &ctx).unwrap();
        let tail_bound = ((n as f64).ln() + 2.0) / n as f64;
        assert!(d(&full, &part) < tail_bound);
    }

    #[test]
    fn zeta_route_matches_direct_series_with_twist() {
        let ctx = PrecisionContext::new(128);
        let s = ctx.c(3.5, 1.0);
        let v = ctx.c(0.0, 0.7);
        let full = estermann_d(&s, &v, 2, 5, &ctx).unwrap();
        let part = estermann_direct(&s, &v, 2, 5, 4000, &ctx).unwrap();
        assert!(d(&full, &part) < 1e-9);
    }

    #[test]
    fn functional_equation_residual() {
        let ctx = PrecisionContext::new(256);
        let s = ctx.c(-0.5, 0.0);
        let v = ctx.c(0.0, 0.7);
        let lhs = estermann_d(&s, &v, 2, 5, &ctx).unwrap();
        let rhs = estermann_functional_rhs(&s, &v, 2, 5, &ctx).unwrap();
        assert!(d(&lhs, &rhs) <= 10.0 * ctx.tail_tol, "{}", d(&lhs, &rhs));
        let s = ctx.c(0.3, 2.0);
        let lhs = estermann_d(&s, &v, 3, 7, &ctx).unwrap();
        let rhs = estermann_functional_rhs(&s, &v, 3, 7, &ctx).unwrap();
        assert!(d(&lhs, &rhs) <= 1e-60 * mp::cabs_f64(&lhs).max(1.0));
    }

    #[test]
    fn residue_at_one_plus_v() {
        let ctx = PrecisionContext::new(192);
        let v = ctx.c(0.0, 0.7);
        let r = estermann_residue(&v, 2, 5, &ctx).unwrap();
        assert!(d(&r.numeric, &r.predicted) < 1e-12 * mp::cabs_f64(&r.predicted));
    }

    #[test]
    fn errors() {
        let ctx = PrecisionContext::new(128);
        let v = ctx.c(0.0, 0.7);
        assert!(matches!(estermann_d(&ctx.c(2.0, 0.0), &v, 2, 4, &ctx), Err(Error::NotCoprime(_))));
        let pole = Complex::with_val(128, &v + 1u32);
        assert!(matches!(estermann_d(&pole, &v, 2, 5, &ctx), Err(Error::Pole(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn symmetric_in_v(sr in 1.1f64..4.0, si in -5.0f64..5.0, vi in 0.05f64..2.0, c in 1u64..8, d0 in 0i64..8) {
            let ctx = PrecisionContext::new(128);
            let dd = (1..=c as i64).map(|j| (d0 + j) % c as i64).find(|&x| gcd(x, c as i64) == 1).unwrap_or(0);
            let s = ctx.c(sr, si);
            let a = estermann_d(&s, &ctx.c(0.0, vi), dd, c, &ctx).unwrap();
            let b = estermann_d(&s, &ctx.c(0.0, -vi), dd, c, &ctx).unwrap();
            prop_assert!(d(&a, &b) <= 1e-30 * mp::cabs_f64(&a).max(1.0));
        }
    }
}
