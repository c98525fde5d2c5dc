//! Complex log-gamma and digamma by shifted Stirling series, Bernoulli
//! numbers, and a few exact rational helpers.

use std::sync::Mutex;

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float, Integer, Rational};

use crate::arith::factor;
use crate::error::{Error, Result};
use crate::mp::{self, PrecisionContext};

static BERNOULLI: Mutex<Vec<Rational>> = Mutex::new(Vec::new());

/// Exact B_{2n}, n ≥ 1. Uses von Staudt–Clausen for the denominator and
/// rounds 2(2n)!ζ(2n)/(2π)^{2n}·D to the nearest integer.
pub fn bernoulli_2n(n: usize) -> Rational {
    assert!(n >= 1);
    {
        let cache = BERNOULLI.lock().unwrap();
        if n <= cache.len() {
            return cache[n - 1].clone();
        }
    }
    let mut cache = BERNOULLI.lock().unwrap();
    while cache.len() < n {
        let j = cache.len() + 1;
        cache.push(compute_bernoulli_2n(j));
    }
    cache[n - 1].clone()
}

fn compute_bernoulli_2n(n: usize) -> Rational {
    let two_n = 2 * n as u64;
    let mut den = Integer::from(1);
    for d in crate::arith::divisors(two_n) {
        let p = d + 1;
        let f = factor(p);
        if f.len() == 1 && f[0].1 == 1 {
            den *= p;
        }
    }
    let lg = Float::with_val(64, two_n + 1).ln_gamma().to_f64() / std::f64::consts::LN_2;
    let bits = (lg + 1.0 - two_n as f64 * (2.0 * std::f64::consts::PI).log2()
        + den.significant_bits() as f64)
        .max(0.0) as u32
        + 64;
    let zeta = Float::with_val(bits, Float::with_val(bits, two_n).zeta());
    let fact = Float::with_val(bits, Integer::from(Integer::factorial(two_n as u32)));
    let twopi = Float::with_val(bits, Constant::Pi) * 2u32;
    let mag = Float::with_val(bits, fact * zeta) * 2u32 / twopi.pow(two_n as u32) * &den;
    let (num, frac) = {
        let r = mag.clone().round();
        let fr = Float::with_val(bits, &mag - &r).abs();
        (r.to_integer().unwrap(), fr)
    };
    assert!(frac.to_f64() < 1e-3, "Bernoulli rounding failed at n={n}");
    let sign = if n % 2 == 1 { 1 } else { -1 };
    Rational::from((num * sign, den))
}

pub fn is_nonpositive_integer(z: &Complex) -> bool {
    z.imag().is_zero() && z.real() <= &0 && z.real().is_integer()
}

fn stirling_shift(z: &Complex, wp: u32) -> (u32, f64) {
    let w = 0.12 * wp as f64 + 10.0;
    let re = z.real().to_f64();
    let im = z.imag().to_f64();
    let need = if re > 0.0 && (re * re + im * im).sqrt() >= w && re >= 0.5 * w {
        0.0
    } else {
        (w - re).ceil().max(0.0)
    };
    (need as u32, w)
}

/// Principal branch log Γ(z).
pub fn ln_gamma(z: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    if is_nonpositive_integer(z) {
        return Err(Error::Pole(format!("Gamma at {}", z.real().to_f64())));
    }
    let prec = ctx.prec();
    let mag = mp::cabs_f64(z).max(1.0).log2().ceil() as u32;
    let wp = prec + 24 + mag;
    let zz = Complex::with_val(wp, z);
    let (m, _) = stirling_shift(&zz, wp);
    let w = Complex::with_val(wp, &zz + m);
    let mut res = stirling_ln_gamma(&w, wp);
    if m > 0 {
        let mut prod = Complex::with_val(wp, 1);
        let mut argsum = 0.0f64;
        for j in 0..m {
            let t = Complex::with_val(wp, &zz + j);
            argsum += t.imag().to_f64().atan2(t.real().to_f64());
            prod *= &t;
        }
        let mut l = Complex::with_val(wp, prod.ln_ref());
        let diff = argsum - l.imag().to_f64();
        let turns = (diff / (2.0 * std::f64::consts::PI)).round();
        if turns != 0.0 {
            let corr = mp::pi(wp) * 2u32 * turns as i64;
            *l.mut_imag() += corr;
        }
        res -= l;
    }
    Ok(Complex::with_val(prec, res))
}

fn stirling_ln_gamma(w: &Complex, wp: u32) -> Complex {
    let lw = Complex::with_val(wp, w.ln_ref());
    let half = Float::with_val(wp, 0.5);
    let mut res = Complex::with_val(wp, w - &half) * &lw;
    res -= w;
    let l2pi = Float::with_val(wp, mp::pi(wp) * 2u32).ln() / 2u32;
    res += l2pi;
    let inv = Complex::with_val(wp, w.recip_ref());
    let inv2 = Complex::with_val(wp, inv.square_ref());
    let mut pw = inv.clone();
    let tol = Float::with_val(wp, 1) >> (wp + 4);
    for j in 1..2000usize {
        let b = bernoulli_2n(j);
        let coef = Float::with_val(wp, &b) / ((2 * j * (2 * j - 1)) as u64);
        let term = Complex::with_val(wp, &pw * &coef);
        let small = mp::cabs(&term) < tol;
        res += term;
        if small {
            break;
        }
        pw *= &inv2;
    }
    res
}

/// Digamma ψ(z) = Γ′/Γ(z).
pub fn digamma(z: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    if is_nonpositive_integer(z) {
        return Err(Error::Pole(format!("digamma at {}", z.real().to_f64())));
    }
    let prec = ctx.prec();
    let mag = mp::cabs_f64(z).max(1.0).log2().ceil() as u32;
    let wp = prec + 24 + mag;
    let zz = Complex::with_val(wp, z);
    let (m, _) = stirling_shift(&zz, wp);
    let w = Complex::with_val(wp, &zz + m);
    let mut res = Complex::with_val(wp, w.ln_ref());
    let inv = Complex::with_val(wp, w.recip_ref());
    res -= Complex::with_val(wp, &inv / 2u32);
    let inv2 = Complex::with_val(wp, inv.square_ref());
    let mut pw = inv2.clone();
    let tol = Float::with_val(wp, 1) >> (wp + 4);
    for j in 1..2000usize {
        let b = bernoulli_2n(j);
        let coef = Float::with_val(wp, &b) / (2 * j as u64);
        let term = Complex::with_val(wp, &pw * &coef);
        let small = mp::cabs(&term) < tol;
        res -= term;
        if small {
            break;
        }
        pw *= &inv2;
    }
    for j in 0..m {
        let t = Complex::with_val(wp, &zz + j);
        res -= t.recip();
    }
    Ok(Complex::with_val(prec, res))
}

#[derive(Debug, Clone)]
pub struct GammaSuite {
    pub log_gamma: Complex,
    pub digamma: Complex,
}

pub fn gamma_suite(z: &Complex, ctx: &PrecisionContext) -> Result<GammaSuite> {
    Ok(GammaSuite { log_gamma: ln_gamma(z, ctx)?, digamma: digamma(z, ctx)? })
}

pub fn gamma(z: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    Ok(ln_gamma(z, ctx)?.exp())
}

/// 1/Γ(z), entire: zero at the poles of Γ.
pub fn rgamma(z: &Complex, ctx: &PrecisionContext) -> Complex {
    if is_nonpositive_integer(z) {
        return Complex::new(ctx.prec());
    }
    let l = ln_gamma(z, ctx).expect("pole excluded above");
    Complex::with_val(ctx.prec(), -l).exp()
}

/// γ(u,v) = 2^{2u−1}/π · Γ(u+v)Γ(u−v).
pub fn gamma_pair_factor(u: &Complex, v: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    let prec = ctx.prec();
    let a = Complex::with_val(prec, u + v);
    let b = Complex::with_val(prec, u - v);
    let l = Complex::with_val(prec, ln_gamma(&a, ctx)? + ln_gamma(&b, ctx)?);
    let two_u = Complex::with_val(prec, u * 2u32) - 1u32;
    let log2 = mp::log2_const(prec);
    let e = Complex::with_val(prec, two_u * log2) + l;
    Ok(e.exp() / mp::pi(prec))
}

/// log Γ(x) for real x > 0 (MPFR).
pub fn ln_gamma_real(x: &Float) -> Float {
    Float::with_val(x.prec(), x.ln_gamma_ref())
}

/// ψ(x) for real x (MPFR).
pub fn digamma_real(x: &Float) -> Float {
    Float::with_val(x.prec(), x.digamma_ref())
}

/// Harmonic number H_n as an exact rational.
pub fn harmonic(n: u64) -> Rational {
    let mut h = Rational::new();
    for j in 1..=n {
        h += Rational::from((1, j));
    }
    h
}

/// Exact Γ(a)/Γ(b) for positive integers, as a rational.
pub fn factorial_ratio(a: u64, b: u64) -> Rational {
    let fa = Integer::factorial(a.saturating_sub(1) as u32);
    let fb = Integer::factorial(b.saturating_sub(1) as u32);
    Rational::from((Integer::from(fa), Integer::from(fb)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    fn close(a: &Complex, b: &Complex, tol: f64) -> bool {
        let d = Complex::with_val(a.prec().0, a - b);
        mp::cabs_f64(&d) <= tol
    }

    #[test]
    fn bernoulli_small() {
        assert_eq!(bernoulli_2n(1), Rational::from((1, 6)));
        assert_eq!(bernoulli_2n(2), Rational::from((-1, 30)));
        assert_eq!(bernoulli_2n(6), Rational::from((691, -2730)));
        assert_eq!(bernoulli_2n(10), Rational::from((-174611, 330)));
    }

    #[test]
    fn gamma_suite_examples() {
        let c = ctx();
        let g = gamma_suite(&c.c(1.0, 0.0), &c).unwrap();
        let eg = Complex::with_val(256, -mp::euler_gamma(256));
        assert!(mp::cabs_f64(&g.log_gamma) < 1e-70);
        assert!(close(&g.digamma, &eg, 1e-70));

        let g = gamma_suite(&c.c(0.5, 0.0), &c).unwrap();
        let lsp = Complex::with_val(256, mp::pi(256).sqrt().ln());
        assert!(close(&g.log_gamma, &lsp, 1e-70));
        let d = Complex::with_val(256, -mp::euler_gamma(256) - mp::log2_const(256) * 2u32);
        assert!(close(&g.digamma, &d, 1e-70));

        let g = gamma_suite(&c.c(6.0, 0.0), &c).unwrap();
        let h5 = Float::with_val(256, &harmonic(5));
        let d = Complex::with_val(256, h5 - mp::euler_gamma(256));
        assert!(close(&g.digamma, &d, 1e-70));
        assert!(matches!(ln_gamma(&c.c(-3.0, 0.0), &c), Err(Error::Pole(_))));
        assert!(matches!(digamma(&c.c(0.0, 0.0), &c), Err(Error::Pole(_))));
    }

    #[test]
    fn matches_mpfr_on_real_axis() {
        let c = ctx();
        for &x in &[0.1, 0.75, 3.3, 17.0, 55.5, 140.25] {
            let z = c.c(x, 0.0);
            let lg = ln_gamma(&z, &c).unwrap();
            let want = ln_gamma_real(&c.f(x));
            assert!((Float::with_val(256, lg.real() - &want)).abs().to_f64() < 1e-70 * want.to_f64().abs().max(1.0));
            let dg = digamma(&z, &c).unwrap();
            let want = digamma_real(&c.f(x));
            assert!((Float::with_val(256, dg.real() - &want)).abs().to_f64() < 1e-70 * want.to_f64().abs().max(1.0));
        }
    }

    #[test]
    fn recurrence_off_axis() {
        let c = ctx();
        for &(re, im) in &[(0.3, 2.0), (-2.7, 0.4), (5.0, -11.0), (-0.5, -30.0)] {
            let z = c.c(re, im);
            let z1 = Complex::with_val(256, &z + 1u32);
            let lhs = ln_gamma(&z1, &c).unwrap();
            let rhs = Complex::with_val(256, ln_gamma(&z, &c).unwrap() + z.clone().ln());
            // equality modulo 2πi
            let mut d = Complex::with_val(256, &lhs - &rhs);
            let turns = (d.imag().to_f64() / (2.0 * std::f64::consts::PI)).round();
            *d.mut_imag() -= mp::pi(256) * 2u32 * turns as i64;
            assert!(mp::cabs_f64(&d) < 1e-68, "{re} {im}");
            let dl = Complex::with_val(256, digamma(&z1, &c).unwrap() - digamma(&z, &c).unwrap() - z.clone().recip());
            assert!(mp::cabs_f64(&dl) < 1e-68);
        }
    }

    #[test]
    fn reflection_mod_2pi_i() {
        let c = ctx();
        for i in 0..12 {
            let z = c.c(-2.3 + 0.41 * i as f64, 0.37 * (i as f64 - 5.5));
            let one_minus = Complex::with_val(256, 1u32 - &z);
            let lhs = Complex::with_val(256, ln_gamma(&z, &c).unwrap() + ln_gamma(&one_minus, &c).unwrap());
            let spz = Complex::with_val(256, &z * mp::pi(256)).sin();
            let rhs = Complex::with_val(256, Complex::with_val(256, mp::pi(256)) / spz).ln();
            let mut d = Complex::with_val(256, lhs - rhs);
            let turns = (d.imag().to_f64() / (2.0 * std::f64::consts::PI)).round();
            *d.mut_imag() -= mp::pi(256) * 2u32 * turns as i64;
            assert!(mp::cabs_f64(&d) < 1e-65);
        }
    }

    #[test]
    fn principal_branch_continuity() {
        // log Γ is continuous across the positive real axis and for large |Im z|
        let c = ctx();
        let a = ln_gamma(&c.c(0.5, 1e-30), &c).unwrap();
        let b = ln_gamma(&c.c(0.5, -1e-30), &c).unwrap();
        assert!(close(&a, &b, 1e-25));
        // Stirling leading behaviour for z = 10 + 100i
        let z = c.c(10.0, 100.0);
        let lg = ln_gamma(&z, &c).unwrap();
        let zh = Complex::with_val(256, &z - Float::with_val(256, 0.5));
        let approx = Complex::with_val(256, zh * z.clone().ln()) - &z;
        assert!((lg.imag().to_f64() - approx.imag().to_f64()).abs() < 1.0);
    }
}
