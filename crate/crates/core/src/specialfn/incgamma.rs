//! Upper incomplete gamma Γ(a, x) for complex a and real x > 0.

use rug::{Complex, Float};

use super::gamma::{ln_gamma, is_nonpositive_integer};
use crate::error::{Error, Result};
use crate::mp::{self, PrecisionContext};

/// Γ(a, x) = ∫_x^∞ t^{a−1} e^{−t} dt.
///
/// A seed at Re a₀ ∈ [0, 1) (continued fraction) or [1, 2) (series, small x)
/// is carried to `a` by Γ(b+1,x) = bΓ(b,x) + x^b e^{−x}.
pub fn incomplete_gamma_upper(a: &Complex, x: &Float, ctx: &PrecisionContext) -> Result<Complex> {
    if !(x > &0) {
        return Err(Error::Domain(format!("x = {} must be positive", x.to_f64())));
    }
    let re = a.real().to_f64();
    let steps_est = re.abs() + 2.0;
    let wp = ctx.prec() + 48 + (steps_est.log2().max(0.0) as u32) * 2;
    let wctx = PrecisionContext::new(wp);
    let xw = Float::with_val(wp, x);
    let use_series = x.to_f64() < 1.5;
    let shift = if use_series { re.floor() - 1.0 } else { re.floor() };
    let a0 = Complex::with_val(wp, a - Float::with_val(wp, shift));
    let mut g = if use_series { seed_series(&a0, &xw, &wctx)? } else { seed_cf(&a0, &xw, &wctx)? };
    let lx = Float::with_val(wp, xw.ln_ref());
    // x^b e^{−x} at b = a0
    let mut p = (Complex::with_val(wp, &a0 * &lx) - &xw).exp();
    let mut b = a0.clone();
    if shift >= 0.0 {
        for _ in 0..(shift as i64) {
            g = Complex::with_val(wp, &b * &g) + &p;
            p *= &xw;
            b += 1u32;
        }
    } else {
        for _ in 0..((-shift) as i64) {
            // Γ(b−1,x) = (Γ(b,x) − x^{b−1}e^{−x})/(b−1)
            b -= 1u32;
            p /= &xw;
            if b.real().is_zero() && b.imag().is_zero() {
                return Err(Error::Pole("downward recurrence through a = 0".into()));
            }
            g = Complex::with_val(wp, &g - &p) / &b;
        }
    }
    Ok(Complex::with_val(ctx.prec(), g))
}

/// Modified Lentz evaluation of the Legendre continued fraction.
fn seed_cf(a: &Complex, x: &Float, ctx: &PrecisionContext) -> Result<Complex> {
    let wp = ctx.prec();
    let tiny = Float::with_val(wp, 1) >> (wp * 2);
    let tol = Float::with_val(wp, 1) >> (wp - 6);
    let mut b = Complex::with_val(wp, x + 1u32) - a;
    let mut c = Complex::with_val(wp, 1) / &tiny;
    let mut d = Complex::with_val(wp, b.recip_ref());
    let mut h = d.clone();
    let mut i = 1u64;
    loop {
        let an = Complex::with_val(wp, i - Complex::with_val(wp, a)) * i;
        let an = -an;
        b += 2u32;
        d = Complex::with_val(wp, &an * &d) + &b;
        if mp::cabs(&d) < tiny {
            d = Complex::with_val(wp, (&tiny, 0));
        }
        c = Complex::with_val(wp, &an / &c) + &b;
        if mp::cabs(&c) < tiny {
            c = Complex::with_val(wp, (&tiny, 0));
        }
        d = d.recip();
        let del = Complex::with_val(wp, &d * &c);
        h *= &del;
        let dm = mp::cabs(&Complex::with_val(wp, &del - 1u32));
        if dm < tol {
            break;
        }
        i += 1;
        if i > 5_000_000 {
            return Err(Error::NonConvergence("incomplete gamma continued fraction".into()));
        }
    }
    let lx = Float::with_val(wp, x.ln_ref());
    let pref = (Complex::with_val(wp, a * &lx) - x).exp();
    Ok(pref * h)
}

/// Γ(a) − γ(a,x) with γ(a,x) = x^a e^{−x} Σ x^n/(a)_{n+1}.
fn seed_series(a: &Complex, x: &Float, ctx: &PrecisionContext) -> Result<Complex> {
    if is_nonpositive_integer(a) {
        return Err(Error::Pole("series seed at a non-positive integer".into()));
    }
    let wp = ctx.prec();
    let tol = Float::with_val(wp, 1) >> (wp - 6);
    let mut t = Complex::with_val(wp, a.recip_ref());
    let mut sum = t.clone();
    let mut n = 1u64;
    loop {
        let den = Complex::with_val(wp, a + n);
        t *= x;
        t /= den;
        sum += &t;
        if mp::cabs(&t) < Float::with_val(wp, mp::cabs(&sum) * &tol) {
            break;
        }
        n += 1;
    }
    let lx = Float::with_val(wp, x.ln_ref());
    let pref = (Complex::with_val(wp, a * &lx) - x).exp();
    let g = ln_gamma(a, ctx)?.exp();
    Ok(g - pref * sum)
}
