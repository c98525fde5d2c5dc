//! Hurwitz (Lerch at β = 0) and Riemann zeta by Euler–Maclaurin summation
//! with Bernoulli corrections.

use rug::{Complex, Float};

use super::gamma::{bernoulli_2n, ln_gamma};
use crate::error::{Error, Result};
use crate::mp::{self, PrecisionContext};

fn is_one(s: &Complex) -> bool {
    s.imag().is_zero() && *s.real() == 1
}

/// Split point used by `lerch_zeta` for a given precision and |s|.
pub fn default_split(s: &Complex, prec: u32) -> u64 {
    (0.12 * prec as f64 + mp::cabs_f64(s)).ceil() as u64 + 8
}

/// ζ(α, 0; s) = Σ_{n≥0} (n+α)^{−s} for α ∈ (0, 1], continued to s ≠ 1.
pub fn lerch_zeta(alpha: &Float, s: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    let n = default_split(s, ctx.prec());
    lerch_zeta_split(alpha, s, n, ctx)
}

/// Euler–Maclaurin evaluation with an explicit split point N: the first N
/// terms are summed directly and the tail Σ_{n≥N} is replaced by its
/// integral, the half end-point term, and Bernoulli corrections.
pub fn lerch_zeta_split(alpha: &Float, s: &Complex, n_split: u64, ctx: &PrecisionContext) -> Result<Complex> {
    if !(alpha > &0 && alpha <= &1) {
        return Err(Error::Domain(format!("alpha = {} outside (0,1]", alpha.to_f64())));
    }
    if is_one(s) {
        return Err(Error::Pole("s = 1".into()));
    }
    let re = s.real().to_f64();
    let nf = n_split as f64 + 1.0;
    let guard = ((1.0 - re).max(0.0) * nf.log2()).ceil() as u32 + 24;
    let wp = ctx.prec() + guard;
    let s = Complex::with_val(wp, s);
    let a = Float::with_val(wp, alpha);
    let neg_s = Complex::with_val(wp, -&s);
    let mut acc = Complex::new(wp);
    for n in 0..n_split {
        let base = Float::with_val(wp, &a + n);
        acc += mp::rpow(&base, &neg_s);
    }
    let big = Float::with_val(wp, &a + n_split);
    let one_minus_s = Complex::with_val(wp, 1u32 - &s);
    let s_minus_1 = Complex::with_val(wp, &s - 1u32);
    acc += mp::rpow(&big, &one_minus_s) / s_minus_1;
    let pw = mp::rpow(&big, &neg_s);
    acc += Complex::with_val(wp, &pw / 2u32);
    // Bernoulli corrections: B_{2j}/(2j)! (s)_{2j−1} (N+α)^{−s−2j+1}
    let inv = Float::with_val(wp, big.recip_ref());
    let inv2 = Float::with_val(wp, inv.square_ref());
    let mut poch = s.clone(); // (s)_{1}
    let mut p = Complex::with_val(wp, &pw * &inv); // (N+α)^{−s−1}
    let mut fact = Float::with_val(wp, 2); // (2j)!
    let tol = Float::with_val(wp, 1) >> (ctx.prec() + 8);
    let scale = mp::cabs(&acc).max(&Float::with_val(wp, 1)).clone();
    let mut prev_mag: Option<Float> = None;
    let mut done = false;
    for j in 1..4000usize {
        let b = Float::with_val(wp, &bernoulli_2n(j));
        let term = Complex::with_val(wp, &poch * &p) * b / &fact;
        let mag = mp::cabs(&term);
        acc += &term;
        if mag <= Float::with_val(wp, &tol * &scale) {
            done = true;
            break;
        }
        if let Some(pm) = &prev_mag {
            if &mag > pm && j > 3 {
                break;
            }
        }
        prev_mag = Some(mag);
        // advance (s)_{2j−1} → (s)_{2j+1}
        let t1 = Complex::with_val(wp, &s + (2 * j - 1) as u32);
        let t2 = Complex::with_val(wp, &s + (2 * j) as u32);
        poch *= t1;
        poch *= t2;
        p *= &inv2;
        fact *= ((2 * j + 1) * (2 * j + 2)) as u32;
    }
    if !done {
        return Err(Error::NonConvergence(format!(
            "Euler–Maclaurin split N={n_split} too small for |s|={:.3}",
            mp::cabs_f64(&s)
        )));
    }
    Ok(Complex::with_val(ctx.prec(), acc))
}

/// Riemann ζ(s) for s ≠ 1; the reflection formula is used for Re s < −1/2.
pub fn riemann_zeta(s: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    if is_one(s) {
        return Err(Error::Pole("zeta at s = 1".into()));
    }
    let prec = ctx.prec();
    if s.real().to_f64() < -0.5 {
        let wp = prec + 32;
        let wctx = ctx.raised(32);
        let s = Complex::with_val(wp, s);
        let one_minus = Complex::with_val(wp, 1u32 - &s);
        let z1 = riemann_zeta(&one_minus, &wctx)?;
        let two = Float::with_val(wp, 2);
        let p = mp::pi(wp);
        let sm1 = Complex::with_val(wp, &s - 1u32);
        let f1 = mp::rpow(&two, &s);
        let f2 = mp::rpow(&p, &sm1);
        let sin = (Complex::with_val(wp, &s * &p) / 2u32).sin();
        let g = ln_gamma(&one_minus, &wctx)?.exp();
        let v = f1 * f2 * sin * g * z1;
        return Ok(Complex::with_val(prec, v));
    }
    lerch_zeta(&Float::with_val(prec, 1), s, ctx)
}

pub fn riemann_zeta_real(s: f64, ctx: &PrecisionContext) -> Result<Float> {
    Ok(riemann_zeta(&ctx.c(s, 0.0), ctx)?.real().clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    fn diff(a: &Complex, b: &Complex) -> f64 {
        mp::cabs_f64(&Complex::with_val(a.prec().0, a - b))
    }

    #[test]
    fn zeta_classical_values() {
        let c = ctx();
        let z2 = riemann_zeta(&c.c(2.0, 0.0), &c).unwrap();
        let want = Complex::with_val(256, mp::pi(256).square() / 6u32);
        assert!(diff(&z2, &want) < 1e-70);
        let z0 = riemann_zeta(&c.c(0.0, 0.0), &c).unwrap();
        assert!(diff(&z0, &c.c(-0.5, 0.0)) < 1e-70);
        assert!(matches!(riemann_zeta(&c.c(1.0, 0.0), &c), Err(Error::Pole(_))));
        // ζ(−1) = −1/12 through the reflection branch, ζ(−2) = 0
        let zm1 = riemann_zeta(&c.c(-1.0, 0.0), &c).unwrap();
        assert!(diff(&zm1, &Complex::with_val(256, -Float::with_val(256, 1) / 12u32)) < 1e-70);
        assert!(mp::cabs_f64(&riemann_zeta(&c.c(-2.0, 0.0), &c).unwrap()) < 1e-70);
    }

    #[test]
    fn zeta_matches_mpfr_real() {
        let c = ctx();
        for &s in &[-0.3, 0.5, 1.5, 3.25, 10.0] {
            let z = riemann_zeta(&c.c(s, 0.0), &c).unwrap();
            let want = Float::with_val(256, c.f(s).zeta());
            assert!(Float::with_val(256, z.real() - &want).abs().to_f64() < 1e-70, "{s}");
        }
    }

    #[test]
    fn two_split_orders_agree() {
        let c = ctx();
        let s = c.c(1.5, 2.0);
        let one = c.f(1.0);
        let a = lerch_zeta_split(&one, &s, 40, &c).unwrap();
        let b = lerch_zeta_split(&one, &s, 90, &c).unwrap();
        assert!(diff(&a, &b) < 1e-70);
        let third = Float::with_val(256, 1) / 3u32;
        let s = c.c(1.2, 1.0);
        let a = lerch_zeta_split(&third, &s, 10, &PrecisionContext::new(64)).unwrap();
        let b = lerch_zeta_split(&third, &s, 50, &PrecisionContext::new(64)).unwrap();
        assert!(diff(&a, &b) < 1e-15);
        let a = lerch_zeta_split(&third, &s, 50, &c).unwrap();
        let b = lerch_zeta(&third, &s, &c).unwrap();
        assert!(diff(&a, &b) < 1e-70);
    }

    #[test]
    fn half_shift_at_two() {
        // Σ_{n≥0} (n+1/2)^{−2} = 4 Σ_{odd m} m^{−2} = π²/2
        let c = ctx();
        let half = c.f(0.5);
        let v = lerch_zeta(&half, &c.c(2.0, 0.0), &c).unwrap();
        let want = Complex::with_val(256, mp::pi(256).square() / 2u32);
        assert!(diff(&v, &want) < 1e-70);
    }

    #[test]
    fn matches_direct_series_for_large_re_s() {
        let c = ctx();
        let alpha = c.f(0.3);
        let s = c.c(12.0, 3.0);
        let mut direct = Complex::new(256);
        for n in 0..3000u32 {
            direct += mp::rpow(&Float::with_val(256, &alpha + n), &Complex::with_val(256, -&s));
        }
        let v = lerch_zeta(&alpha, &s, &c).unwrap();
        assert!(diff(&v, &direct) < 1e-35 * mp::cabs_f64(&v));
    }

    #[test]
    fn ramanujan_sum_identity() {
        // Σ_c S(0,m;c)/c^s → σ_{1−s}(m)/ζ(s) at Re s = 2
        let c = PrecisionContext::new(128);
        let s = c.c(2.0, 1.0);
        let z = riemann_zeta(&s, &c).unwrap();
        for m in 1..=10u64 {
            let sig = crate::arith::sigma(m, &Complex::with_val(128, 1u32 - &s), &c);
            let want = Complex::with_val(128, sig / &z);
            let mut prev_err = f64::INFINITY;
            let mut acc = Complex::new(128);
            let mut cc = 1u64;
            for cmax in [50u64, 400] {
                while cc <= cmax {
                    let k = crate::arith::kloosterman(0, m as i64, cc, &c).unwrap();
                    acc += mp::rpow(&Float::with_val(128, cc), &Complex::with_val(128, -&s)) * k;
                    cc += 1;
                }
                let err = diff(&acc, &want);
                // tail ≤ σ(m) Σ_{c>C} c^{−2}... bounded by m·σ₀(m)/C
                assert!(err <= (m as f64) * 4.0 / cmax as f64, "m={m} C={cmax} err={err}");
                assert!(err <= prev_err * 1.0001);
                prev_err = err;
            }
        }
    }
}
