//! Gauss ₂F₁ and Kummer ₁F₁ series, with an exact rational path for
//! terminating ₂F₁ and automatic precision escalation under cancellation.

use rug::{Complex, Float, Integer, Rational};

use super::gamma::is_nonpositive_integer;
use crate::error::{Error, Result};
use crate::mp::{self, PrecisionContext};

/// Largest number of series terms before the slow-convergence flag is set.
pub const MAX_TERMS: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct SeriesValue {
    pub value: Complex,
    pub terms: usize,
    /// Certified bound on the omitted tail (absolute).
    pub tail_bound: f64,
    /// Set when the term cap was hit before the tail bound met the target.
    pub slow: bool,
}

fn nonpos_int_value(z: &Complex) -> Option<u64> {
    if is_nonpositive_integer(z) {
        Some((-z.real().to_f64()).round() as u64)
    } else {
        None
    }
}

/// ₂F₁(a,b;c;x) for real |x| < 1 (any x when the series terminates).
pub fn gauss_2f1(a: &Complex, b: &Complex, c: &Complex, x: &Float, ctx: &PrecisionContext) -> Result<Complex> {
    let r = gauss_2f1_series(a, b, c, x, ctx)?;
    if r.slow {
        return Err(Error::NonConvergence(format!("2F1 needs more than {MAX_TERMS} terms at x={}", x.to_f64())));
    }
    Ok(r.value)
}

/// Same as `gauss_2f1` but reports term count, tail bound, and the slow flag.
pub fn gauss_2f1_series(a: &Complex, b: &Complex, c: &Complex, x: &Float, ctx: &PrecisionContext) -> Result<SeriesValue> {
    let term_a = nonpos_int_value(a);
    let term_b = nonpos_int_value(b);
    let terminate = match (term_a, term_b) {
        (Some(p), Some(q)) => Some(p.min(q)),
        (Some(p), None) | (None, Some(p)) => Some(p),
        _ => None,
    };
    if let Some(m) = nonpos_int_value(c) {
        if terminate.is_none_or(|n| n > m) {
            return Err(Error::ParameterPole(format!("c = −{m} is a non-positive integer")));
        }
    }
    if terminate.is_none() && x.clone().abs() >= 1 {
        return Err(Error::NonConvergence(format!("|x| = {} ≥ 1", x.to_f64())));
    }
    let mut guard = 40u32;
    loop {
        let (r, cancel_bits) = sum_2f1(a, b, c, x, terminate, ctx.prec() + guard, ctx)?;
        if cancel_bits + 24 <= guard as i64 || guard > 20_000 {
            return Ok(SeriesValue { value: Complex::with_val(ctx.prec(), &r.value), ..r });
        }
        guard = (cancel_bits + 48) as u32;
    }
}

/// One summation pass; returns the value and log2(max term / |sum|).
fn sum_2f1(
    a: &Complex,
    b: &Complex,
    c: &Complex,
    x: &Float,
    terminate: Option<u64>,
    wp: u32,
    ctx: &PrecisionContext,
) -> Result<(SeriesValue, i64)> {
    let a = Complex::with_val(wp, a);
    let b = Complex::with_val(wp, b);
    let c = Complex::with_val(wp, c);
    let x = Float::with_val(wp, x);
    let mut t = Complex::with_val(wp, 1);
    let mut sum = Complex::with_val(wp, 1);
    let mut max_mag = 1.0f64.log2();
    let xa = x.to_f64().abs();
    let tol = ctx.tail_tol.min(2f64.powi(-(ctx.prec() as i32) + 4));
    let a_c = mp::cabs_f64(&Complex::with_val(64, &a - &c));
    let b_1 = mp::cabs_f64(&Complex::with_val(64, &b - 1u32));
    let re_c = c.real().to_f64();
    let mut n = 0usize;
    let mut tail = 0.0f64;
    let mut slow = false;
    loop {
        if let Some(m) = terminate {
            if n as u64 >= m {
                break;
            }
        }
        let nf = n as u64;
        let num = Complex::with_val(wp, &a + nf) * Complex::with_val(wp, &b + nf);
        let den = Complex::with_val(wp, &c + nf) * (nf + 1);
        t *= num;
        t /= den;
        t *= &x;
        sum += &t;
        n += 1;
        let tm = mp::cabs_f64(&t);
        if tm > 0.0 {
            max_mag = max_mag.max(tm.log2());
        }
        if terminate.is_some() {
            continue;
        }
        let nn = n as f64;
        if nn + re_c > 0.0 {
            let rho = xa * (1.0 + a_c / (nn + re_c)) * (1.0 + b_1 / (nn + 1.0));
            if rho < 1.0 {
                tail = tm * rho / (1.0 - rho);
                let s = mp::cabs_f64(&sum);
                if tail <= tol * s || (tm == 0.0) {
                    break;
                }
            }
        }
        if n >= MAX_TERMS {
            slow = true;
            break;
        }
    }
    let s = mp::cabs_f64(&sum);
    let cancel = if s > 0.0 { (max_mag - s.log2()).ceil() as i64 } else { wp as i64 };
    Ok((SeriesValue { value: sum, terms: n, tail_bound: tail, slow }, cancel.max(0)))
}

/// Terminating ₂F₁ in exact rationals; `a` or `b` must be a non-positive integer.
pub fn gauss_2f1_rational(a: &Rational, b: &Rational, c: &Rational, x: &Rational) -> Result<Rational> {
    let is_np = |q: &Rational| q.denom() == &Integer::from(1) && q.numer() <= &0;
    let n = match (is_np(a), is_np(b)) {
        (true, true) => Integer::from(-a.numer()).min(Integer::from(-b.numer())),
        (true, false) => Integer::from(-a.numer()),
        (false, true) => Integer::from(-b.numer()),
        _ => return Err(Error::Domain("rational 2F1 path needs a terminating series".into())),
    };
    let n = n.to_u64().unwrap();
    if is_np(c) && Integer::from(-c.numer()) < n {
        return Err(Error::ParameterPole("c is a non-positive integer".into()));
    }
    let mut t = Rational::from(1);
    let mut sum = Rational::from(1);
    for m in 0..n {
        let mq = Rational::from(m);
        t *= Rational::from(a + &mq) * Rational::from(b + &mq);
        t /= Rational::from(c + &mq) * Rational::from(m + 1);
        t *= x;
        sum += &t;
    }
    Ok(sum)
}

/// Kummer ₁F₁(a;b;z) for complex z.
pub fn kummer_1f1(a: &Complex, b: &Complex, z: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    let terminate = nonpos_int_value(a);
    if let Some(m) = nonpos_int_value(b) {
        if terminate.is_none_or(|n| n > m) {
            return Err(Error::ParameterPole(format!("b = −{m} is a non-positive integer")));
        }
    }
    let zabs = mp::cabs_f64(z);
    let mut guard = (zabs / std::f64::consts::LN_2).ceil() as u32 + 32;
    loop {
        let wp = ctx.prec() + guard;
        let a_w = Complex::with_val(wp, a);
        let b_w = Complex::with_val(wp, b);
        let z_w = Complex::with_val(wp, z);
        let mut t = Complex::with_val(wp, 1);
        let mut sum = Complex::with_val(wp, 1);
        let mut max_mag = 0.0f64;
        let tol = Float::with_val(wp, 1) >> (ctx.prec() + 8);
        let peak = zabs + mp::cabs_f64(a) + mp::cabs_f64(b);
        let mut n = 0u64;
        loop {
            if let Some(m) = terminate {
                if n >= m {
                    break;
                }
            }
            let num = Complex::with_val(wp, &a_w + n);
            let den = Complex::with_val(wp, &b_w + n) * (n + 1);
            t *= num;
            t /= den;
            t *= &z_w;
            sum += &t;
            n += 1;
            let tm = mp::cabs_f64(&t);
            if tm > 0.0 {
                max_mag = max_mag.max(tm.log2());
            }
            if (n as f64) > peak && mp::cabs(&t) <= Float::with_val(wp, mp::cabs(&sum) * &tol) {
                break;
            }
            if n as usize > MAX_TERMS {
                return Err(Error::NonConvergence("1F1 series".into()));
            }
        }
        let s = mp::cabs_f64(&sum);
        let cancel = if s > 0.0 { (max_mag - s.log2()).ceil() as i64 } else { 0 };
        if cancel + 24 <= guard as i64 || guard > 20_000 {
            return Ok(Complex::with_val(ctx.prec(), sum));
        }
        guard = (cancel + 48) as u32;
    }
}
