//! Bessel functions J (real or complex order), Y₀, Y₁, K₀, K₁, complex-order
//! K via its integral representation, and Hankel expansion coefficients.

use rug::{Complex, Float, Rational};

use super::gamma::{ln_gamma, ln_gamma_real};
use crate::error::{Error, Result};
use crate::mp::{self, PrecisionContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselKind {
    J,
    Y,
    K,
}

fn check_x(x: &Float) -> Result<()> {
    if !(x > &0) {
        return Err(Error::Domain(format!("Bessel argument x = {} must be positive", x.to_f64())));
    }
    Ok(())
}

/// Extra bits for an alternating power series whose terms peak near e^x.
fn oscillatory_guard(x: f64) -> u32 {
    (x / std::f64::consts::LN_2).ceil() as u32 + 64
}

/// Dispatch on kind; Y and K accept orders 0 and 1 only.
pub fn bessel(kind: BesselKind, order: f64, x: &Float, ctx: &PrecisionContext) -> Result<Float> {
    check_x(x)?;
    match kind {
        BesselKind::J => {
            if order < 0.0 {
                return Err(Error::Domain("J order must be nonnegative".into()));
            }
            bessel_j(&Float::with_val(ctx.prec(), order), x, ctx)
        }
        BesselKind::Y => match order {
            o if o == 0.0 => bessel_y(0, x, ctx),
            o if o == 1.0 => bessel_y(1, x, ctx),
            _ => Err(Error::Domain("Y supports orders 0 and 1".into())),
        },
        BesselKind::K => match order {
            o if o == 0.0 => bessel_k(0, x, ctx),
            o if o == 1.0 => bessel_k(1, x, ctx),
            _ => Err(Error::Domain("K supports orders 0 and 1".into())),
        },
    }
}

/// J_ν(x) for real ν ≥ 0 by the power series.
pub fn bessel_j(nu: &Float, x: &Float, ctx: &PrecisionContext) -> Result<Float> {
    check_x(x)?;
    let xf = x.to_f64();
    let wp = ctx.prec() + oscillatory_guard(xf);
    let half = Float::with_val(wp, x) / 2u32;
    let lhalf = Float::with_val(wp, half.ln_ref());
    let nu_w = Float::with_val(wp, nu);
    let nu1 = Float::with_val(wp, &nu_w + 1u32);
    let mut t = (Float::with_val(wp, &nu_w * &lhalf) - ln_gamma_real(&nu1)).exp();
    let q = Float::with_val(wp, half.square_ref());
    let mut sum = t.clone();
    let tol = Float::with_val(wp, 1) >> (wp - 8);
    let mut m = 0u64;
    loop {
        m += 1;
        let den = Float::with_val(wp, &nu_w + m) * m;
        t *= &q;
        t /= den;
        t = -t;
        sum += &t;
        if (m as f64) > xf / 2.0 + 2.0 && t.clone().abs() <= Float::with_val(wp, sum.clone().abs() * &tol) {
            break;
        }
        if m > 1_000_000 {
            return Err(Error::NonConvergence("J series".into()));
        }
    }
    Ok(Float::with_val(ctx.prec(), sum))
}

/// J_ν(x) for complex order by the defining series.
pub fn bessel_j_complex(nu: &Complex, x: &Float, ctx: &PrecisionContext) -> Result<Complex> {
    check_x(x)?;
    let re = nu.real().to_f64();
    if nu.imag().is_zero() && re < 0.0 && nu.real().is_integer() {
        let n = Complex::with_val(ctx.prec(), -nu);
        let v = bessel_j_complex(&n, x, ctx)?;
        return Ok(if (-re) as i64 % 2 == 0 { v } else { -v });
    }
    let xf = x.to_f64();
    let wp = ctx.prec() + oscillatory_guard(xf);
    let wctx = PrecisionContext::new(wp);
    let half = Float::with_val(wp, x) / 2u32;
    let lhalf = Float::with_val(wp, half.ln_ref());
    let nu_w = Complex::with_val(wp, nu);
    let nu1 = Complex::with_val(wp, &nu_w + 1u32);
    let lg = ln_gamma(&nu1, &wctx)?;
    let mut t = (Complex::with_val(wp, &nu_w * &lhalf) - lg).exp();
    let q = Float::with_val(wp, half.square_ref());
    let mut sum = t.clone();
    let tol = Float::with_val(wp, 1) >> (wp - 8);
    let mut m = 0u64;
    loop {
        m += 1;
        let den = Complex::with_val(wp, &nu_w + m) * m;
        t *= &q;
        t /= den;
        t = -t;
        sum += &t;
        if (m as f64) > xf / 2.0 + mp::cabs_f64(nu) + 2.0 && mp::cabs(&t) <= Float::with_val(wp, mp::cabs(&sum) * &tol) {
            break;
        }
        if m > 1_000_000 {
            return Err(Error::NonConvergence("complex-order J series".into()));
        }
    }
    Ok(Complex::with_val(ctx.prec(), sum))
}

/// Y₀ and Y₁ by their logarithmic power series.
pub fn bessel_y(n: u32, x: &Float, ctx: &PrecisionContext) -> Result<Float> {
    check_x(x)?;
    let xf = x.to_f64();
    let wp = ctx.prec() + oscillatory_guard(xf);
    let wctx = PrecisionContext::new(wp);
    let xw = Float::with_val(wp, x);
    let half = Float::with_val(wp, &xw / 2u32);
    let q = Float::with_val(wp, half.square_ref());
    let pi = mp::pi(wp);
    let gamma = mp::euler_gamma(wp);
    let lhalf = Float::with_val(wp, half.ln_ref());
    let tol = Float::with_val(wp, 1) >> (wp - 8);
    match n {
        0 => {
            let j0 = bessel_j(&Float::with_val(wp, 0), &xw, &wctx)?;
            // Σ_{m≥1} (−1)^{m+1} H_m q^m/(m!)²
            let mut t = Float::with_val(wp, 1);
            let mut h = Float::with_val(wp, 0);
            let mut s = Float::new(wp);
            let mut m = 0u64;
            loop {
                m += 1;
                t *= &q;
                t /= m * m;
                t = -t;
                h += Float::with_val(wp, 1) / m;
                let term = Float::with_val(wp, &t * &h);
                s -= &term;
                if (m as f64) > xf / 2.0 + 2.0 && term.abs() <= Float::with_val(wp, s.clone().abs() * &tol) {
                    break;
                }
            }
            let lead = Float::with_val(wp, &lhalf + &gamma) * j0;
            let v = (lead + s) * 2u32 / &pi;
            Ok(Float::with_val(ctx.prec(), v))
        }
        1 => {
            let j1 = bessel_j(&Float::with_val(wp, 1), &xw, &wctx)?;
            // Σ_{m≥0} (−1)^m (H_m + H_{m+1} − 2γ) (x/2)^{2m+1}/(m!(m+1)!)
            let mut t = half.clone();
            let mut hm = Float::with_val(wp, 0);
            let mut hm1 = Float::with_val(wp, 1);
            let two_g = Float::with_val(wp, &gamma * 2u32);
            let mut s = Float::with_val(wp, &hm + &hm1) - &two_g;
            s *= &t;
            let mut m = 0u64;
            loop {
                m += 1;
                t *= &q;
                t /= m * (m + 1);
                t = -t;
                hm += Float::with_val(wp, 1) / m;
                hm1 += Float::with_val(wp, 1) / (m + 1);
                let c = Float::with_val(wp, &hm + &hm1) - &two_g;
                let term = Float::with_val(wp, &t * &c);
                s += &term;
                if (m as f64) > xf / 2.0 + 2.0 && term.abs() <= Float::with_val(wp, s.clone().abs() * &tol) {
                    break;
                }
            }
            let v = Float::with_val(wp, &lhalf * &j1) * 2u32 / &pi
                - Float::with_val(wp, Float::with_val(wp, &pi * &xw).recip_ref()) * 2u32
                - s / &pi;
            Ok(Float::with_val(ctx.prec(), v))
        }
        _ => Err(Error::Domain("Y supports orders 0 and 1".into())),
    }
}

/// K₀, K₁: logarithmic series for x ≤ 8, integral representation beyond.
pub fn bessel_k(n: u32, x: &Float, ctx: &PrecisionContext) -> Result<Float> {
    check_x(x)?;
    if n > 1 {
        return Err(Error::Domain("K supports orders 0 and 1".into()));
    }
    let xf = x.to_f64();
    if xf > 8.0 {
        let nu = Complex::with_val(ctx.prec(), n);
        return Ok(bessel_k_complex(&nu, x, ctx)?.real().clone());
    }
    let wp = ctx.prec() + (2.0 * xf / std::f64::consts::LN_2).ceil() as u32 + 32;
    let xw = Float::with_val(wp, x);
    let half = Float::with_val(wp, &xw / 2u32);
    let q = Float::with_val(wp, half.square_ref());
    let gamma = mp::euler_gamma(wp);
    let lhalf = Float::with_val(wp, half.ln_ref());
    let tol = Float::with_val(wp, 1) >> (wp - 8);
    if n == 0 {
        // K₀ = −(log(x/2)+γ) I₀ + Σ_{m≥1} H_m q^m/(m!)²
        let mut t = Float::with_val(wp, 1);
        let mut i0 = Float::with_val(wp, 1);
        let mut h = Float::with_val(wp, 0);
        let mut s = Float::new(wp);
        let mut m = 0u64;
        loop {
            m += 1;
            t *= &q;
            t /= m * m;
            h += Float::with_val(wp, 1) / m;
            i0 += &t;
            let term = Float::with_val(wp, &t * &h);
            s += &term;
            if term <= Float::with_val(wp, &s * &tol) && t <= Float::with_val(wp, &i0 * &tol) {
                break;
            }
        }
        let v = s - Float::with_val(wp, &lhalf + &gamma) * i0;
        Ok(Float::with_val(ctx.prec(), v))
    } else {
        // K₁ = 1/x + log(x/2) I₁ − (x/4) Σ (ψ(m+1)+ψ(m+2)) q^m/(m!(m+1)!)
        let mut t = Float::with_val(wp, 1);
        let mut hm = Float::with_val(wp, 0);
        let mut hm1 = Float::with_val(wp, 1);
        let two_g = Float::with_val(wp, &gamma * 2u32);
        let mut i1 = Float::with_val(wp, 1);
        let mut s = Float::with_val(wp, &hm + &hm1) - &two_g;
        let mut m = 0u64;
        loop {
            m += 1;
            t *= &q;
            t /= m * (m + 1);
            hm += Float::with_val(wp, 1) / m;
            hm1 += Float::with_val(wp, 1) / (m + 1);
            i1 += &t;
            let c = Float::with_val(wp, &hm + &hm1) - &two_g;
            let term = Float::with_val(wp, &t * &c);
            s += &term;
            if term.clone().abs() <= Float::with_val(wp, s.clone().abs() * &tol) && t <= Float::with_val(wp, &i1 * &tol) {
                break;
            }
        }
        let i1 = i1 * &half;
        let v = Float::with_val(wp, xw.recip_ref()) + Float::with_val(wp, &lhalf * &i1) - s * &xw / 4u32;
        Ok(Float::with_val(ctx.prec(), v))
    }
}

/// K_ν(x) = ∫₀^∞ e^{−x cosh t} cosh(νt) dt by the trapezoidal rule, which
/// converges geometrically for this entire, doubly-decaying integrand.
pub fn bessel_k_complex(nu: &Complex, x: &Float, ctx: &PrecisionContext) -> Result<Complex> {
    check_x(x)?;
    let nu_abs = mp::cabs_f64(nu);
    let guard = 40 + (nu.imag().to_f64().abs() * std::f64::consts::PI / std::f64::consts::LN_2).ceil() as u32;
    let wp = ctx.prec() + guard;
    let ln2 = std::f64::consts::LN_2;
    // strip half-width below π/2 keeps e^{−x cosh} decaying in the strip
    let h = std::f64::consts::PI * std::f64::consts::PI / 2.0 / ((wp as f64) * ln2 + 10.0);
    let h = Float::with_val(wp, h);
    let xw = Float::with_val(wp, x);
    let nu_w = Complex::with_val(wp, nu);
    let xf = x.to_f64();
    let scale_log = -xf; // log of the leading size e^{−x}
    let mut sum = Complex::new(wp);
    let mut k = 0u64;
    loop {
        let t = Float::with_val(wp, &h * k);
        let ch = Float::with_val(wp, t.cosh_ref());
        let e = Float::with_val(wp, -Float::with_val(wp, &xw * &ch)).exp();
        let c = Complex::with_val(wp, &nu_w * &t).cosh();
        let mut term = c * e;
        if k == 0 {
            term /= 2u32;
        }
        sum += &term;
        // bound on the remaining tail by the decay exponent
        let tf = t.to_f64();
        let expo = -xf * tf.cosh() + nu_abs * tf;
        if k > 2 && expo - scale_log < -((wp as f64) * ln2 + 20.0) && -xf * tf.sinh() + nu_abs < -1.0 {
            break;
        }
        k += 1;
        if k > 10_000_000 {
            return Err(Error::NonConvergence("K integral".into()));
        }
    }
    Ok(Complex::with_val(ctx.prec(), sum * h))
}

/// I_ν(x) for complex ν by its power series.
pub fn bessel_i_complex(nu: &Complex, x: &Float, ctx: &PrecisionContext) -> Result<Complex> {
    check_x(x)?;
    let wp = ctx.prec() + 32;
    let wctx = PrecisionContext::new(wp);
    let half = Float::with_val(wp, x) / 2u32;
    let lhalf = Float::with_val(wp, half.ln_ref());
    let nu_w = Complex::with_val(wp, nu);
    let nu1 = Complex::with_val(wp, &nu_w + 1u32);
    let lg = ln_gamma(&nu1, &wctx)?;
    let mut t = (Complex::with_val(wp, &nu_w * &lhalf) - lg).exp();
    let q = Float::with_val(wp, half.square_ref());
    let mut sum = t.clone();
    let tol = Float::with_val(wp, 1) >> (wp - 8);
    let mut m = 0u64;
    loop {
        m += 1;
        let den = Complex::with_val(wp, &nu_w + m) * m;
        t *= &q;
        t /= den;
        sum += &t;
        if (m as f64) > x.to_f64() / 2.0 + mp::cabs_f64(nu) && mp::cabs(&t) <= Float::with_val(wp, mp::cabs(&sum) * &tol) {
            break;
        }
    }
    Ok(Complex::with_val(ctx.prec(), sum))
}

/// Hankel expansion coefficient a_j(v) = Γ(v+j+1/2)/(2^j j! Γ(v−j+1/2)),
/// exact: the Gamma ratio is the product of the 2j factors v−j+1/2 … v+j−1/2.
pub fn hankel_a(j: u32, v: &Rational) -> Rational {
    let mut num = Rational::from(1);
    let half = Rational::from((1, 2));
    for m in 0..(2 * j) {
        let f = (v - Rational::from(j as i64)) + &half + Rational::from(m as i64);
        num *= f;
    }
    let mut den = rug::Integer::from(1) << j;
    den *= rug::Integer::from(rug::Integer::factorial(j));
    num / Rational::from(den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::ops::Pow;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    fn rel(a: &Float, b: &Float) -> f64 {
        (Float::with_val(a.prec(), a - b).abs() / Float::with_val(a.prec(), b.clone().abs())).to_f64()
    }

    #[test]
    fn hankel_coefficients() {
        assert_eq!(hankel_a(0, &Rational::from(0)), Rational::from(1));
        assert_eq!(hankel_a(2, &Rational::from(0)), Rational::from((9, 128)));
        assert_eq!(hankel_a(1, &Rational::from(1)), Rational::from((3, 8)));
        // Γ(9/2)/(2³·3!·Γ(−3/2)) is positive: 105/1024
        assert_eq!(hankel_a(3, &Rational::from(1)), Rational::from((105, 1024)));
        // agrees with the product form (4ν²−1)(4ν²−9)…/(j! 8^j)
        for j in 0..7u32 {
            for nu in [Rational::from(0), Rational::from(1), Rational::from((1, 3))] {
                let mut p = Rational::from(1);
                let four_nu2 = Rational::from(4) * Rational::from(&nu * &nu);
                for i in 1..=j {
                    p *= &four_nu2 - Rational::from((2 * i - 1) * (2 * i - 1));
                }
                let den = rug::Integer::from(rug::Integer::factorial(j)) * (rug::Integer::from(8).pow(j));
                assert_eq!(hankel_a(j, &nu), p / Rational::from(den));
            }
        }
    }

    #[test]
    fn integer_orders_match_mpfr() {
        let c = ctx();
        for &x in &[0.01, 0.7, 3.0, 12.5, 40.0, 120.0] {
            let xf = c.f(x);
            for n in 0..3i32 {
                let j = bessel_j(&c.f(n as f64), &xf, &c).unwrap();
                let want = Float::with_val(256, xf.jn_ref(n));
                assert!(Float::with_val(256, &j - &want).abs().to_f64() < 1e-70, "J{n}({x})");
            }
            let y0 = bessel_y(0, &xf, &c).unwrap();
            assert!(Float::with_val(256, &y0 - Float::with_val(256, xf.y0_ref())).abs().to_f64() < 1e-70);
            let y1 = bessel_y(1, &xf, &c).unwrap();
            assert!(Float::with_val(256, &y1 - Float::with_val(256, xf.y1_ref())).abs().to_f64() < 1e-69);
        }
    }

    #[test]
    fn j_small_argument_leading_term() {
        let c = ctx();
        let x = c.f(1e-3);
        let j = bessel(BesselKind::J, 11.0, &x, &c).unwrap();
        let lead = Float::with_val(256, x.clone().pow(11u32)) / (Float::with_val(256, 2).pow(11u32) * Float::with_val(256, rug::Integer::from(rug::Integer::factorial(11))));
        assert!(rel(&j, &lead) < 1e-6);
    }

    #[test]
    fn wronskian_identity() {
        let c = ctx();
        let mut xs = vec![1.0, 5.0, 20.0];
        xs.extend((1..=50).map(|i| 0.1 + i as f64 * 0.998));
        for x in xs {
            let xf = c.f(x);
            let j0 = bessel(BesselKind::J, 0.0, &xf, &c).unwrap();
            let j1 = bessel(BesselKind::J, 1.0, &xf, &c).unwrap();
            let y0 = bessel(BesselKind::Y, 0.0, &xf, &c).unwrap();
            let y1 = bessel(BesselKind::Y, 1.0, &xf, &c).unwrap();
            let w = Float::with_val(256, &j0 * &y1) - Float::with_val(256, &j1 * &y0);
            let want = -Float::with_val(256, 2) / (mp::pi(256) * &xf);
            assert!(rel(&w, &want) < 1e-68, "x={x}");
        }
    }

    #[test]
    fn k_regimes_agree_and_asymptotics() {
        let c = ctx();
        for &x in &[0.05, 1.0, 6.0, 8.0] {
            let xf = c.f(x);
            for n in 0..2u32 {
                let series = bessel_k(n, &xf, &c).unwrap();
                let integral = bessel_k_complex(&c.c(n as f64, 0.0), &xf, &c).unwrap();
                assert!(rel(&series, integral.real()) < 1e-70, "K{n}({x})");
            }
        }
        // K wronskian: I₀K₁ + I₁K₀ = 1/x
        let xf = c.f(30.0);
        let k0 = bessel(BesselKind::K, 0.0, &xf, &c).unwrap();
        let lead = Float::with_val(256, mp::pi(256) / (Float::with_val(256, &xf * 2u32))).sqrt() * Float::with_val(256, -&xf).exp();
        assert!(rel(&k0, &lead) < 0.01);
        for &x in &[9.0, 30.0, 150.0] {
            let xf = c.f(x);
            let k0 = bessel_k(0, &xf, &c).unwrap();
            let k1 = bessel_k(1, &xf, &c).unwrap();
            let i0 = bessel_i_complex(&c.c(0.0, 0.0), &xf, &PrecisionContext::new(256 + 500)).unwrap();
            let i1 = bessel_i_complex(&c.c(1.0, 0.0), &xf, &PrecisionContext::new(256 + 500)).unwrap();
            let w = Float::with_val(256, i0.real() * &k1) + Float::with_val(256, i1.real() * &k0);
            assert!(rel(&w, &Float::with_val(256, xf.recip_ref())) < 1e-68, "x={x}");
        }
    }

    #[test]
    fn complex_order_k_matches_i_combination() {
        // K_ν = π/(2 sin νπ) (I_{−ν} − I_ν)
        let c = ctx();
        let nu = c.c(0.0, 0.6);
        for &x in &[0.3, 2.0, 7.0] {
            let xf = c.f(x);
            let k = bessel_k_complex(&nu, &xf, &c).unwrap();
            let wide = PrecisionContext::new(400);
            let ip = bessel_i_complex(&nu, &xf, &wide).unwrap();
            let im = bessel_i_complex(&Complex::with_val(400, -&nu), &xf, &wide).unwrap();
            let s = Complex::with_val(400, &nu * mp::pi(400)).sin();
            let want = Complex::with_val(400, im - ip) * mp::pi(400) / (s * 2u32);
            let d = Complex::with_val(256, &k - &want);
            assert!(mp::cabs_f64(&d) < 1e-65 * mp::cabs_f64(&want), "x={x}");
        }
    }

    #[test]
    fn complex_order_j_reduces_to_real() {
        let c = ctx();
        let xf = c.f(7.5);
        let a = bessel_j_complex(&c.c(2.5, 0.0), &xf, &c).unwrap();
        let b = bessel_j(&c.f(2.5), &xf, &c).unwrap();
        assert!(Float::with_val(256, a.real() - &b).abs().to_f64() < 1e-70);
        // J_{−1/2}(x) = √(2/(πx)) cos x
        let a = bessel_j_complex(&c.c(-0.5, 0.0), &xf, &c).unwrap();
        let want = Float::with_val(256, Float::with_val(256, 2) / (mp::pi(256) * &xf)).sqrt() * xf.clone().cos();
        assert!(Float::with_val(256, a.real() - &want).abs().to_f64() < 1e-70);
        assert!(bessel(BesselKind::Y, 2.0, &xf, &c).is_err());
        assert!(bessel(BesselKind::J, 1.0, &c.f(-1.0), &c).is_err());
    }
}
