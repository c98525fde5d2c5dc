//! Precision context and small helpers over `rug` floats.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float, Integer, Rational};

/// Working precision and truncation target shared by every routine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionContext {
    pub prec_bits: u32,
    pub tail_tol: f64,
}

impl PrecisionContext {
    pub fn new(prec_bits: u32) -> Self {
        let p = prec_bits.max(64);
        PrecisionContext { prec_bits: p, tail_tol: 2f64.powi(-(p as i32) + 32) }
    }

    pub fn with_tail_tol(mut self, tol: f64) -> Self {
        self.tail_tol = tol;
        self
    }

    /// Same tolerance semantics at a higher working precision.
    pub fn raised(&self, extra: u32) -> Self {
        PrecisionContext { prec_bits: self.prec_bits + extra, tail_tol: self.tail_tol }
    }

    pub fn prec(&self) -> u32 {
        self.prec_bits
    }

    pub fn f(&self, x: f64) -> Float {
        Float::with_val(self.prec_bits, x)
    }

    pub fn c(&self, re: f64, im: f64) -> Complex {
        Complex::with_val(self.prec_bits, (re, im))
    }

    pub fn tol(&self) -> Float {
        Float::with_val(self.prec_bits, self.tail_tol)
    }

    /// 2^(-prec_bits), the round-off scale.
    pub fn eps(&self) -> Float {
        Float::with_val(self.prec_bits, 1) >> self.prec_bits
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext::new(256)
    }
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

pub fn euler_gamma(prec: u32) -> Float {
    Float::with_val(prec, Constant::Euler)
}

pub fn log2_const(prec: u32) -> Float {
    Float::with_val(prec, Constant::Log2)
}

pub fn rat(prec: u32, q: &Rational) -> Float {
    Float::with_val(prec, q)
}

pub fn int(prec: u32, n: &Integer) -> Float {
    Float::with_val(prec, n)
}

pub fn cre(z: &Complex) -> Float {
    z.real().clone()
}

pub fn cabs(z: &Complex) -> Float {
    Float::with_val(z.prec().0, z.abs_ref())
}

pub fn cabs_f64(z: &Complex) -> f64 {
    cabs(z).to_f64()
}

/// e(t) = exp(2πi t).
pub fn e_of(t: &Float) -> Complex {
    let prec = t.prec();
    let arg = Float::with_val(prec, t * pi(prec)) * 2u32;
    let (s, c) = arg.sin_cos(Float::new(prec));
    Complex::with_val(prec, (c, s))
}

/// e(p/q) for rationals, reduced first so large numerators stay exact.
pub fn e_rat(p: i64, q: u64, prec: u32) -> Complex {
    let r = p.rem_euclid(q as i64);
    let t = Float::with_val(prec, r) / q;
    e_of(&t)
}

/// Complex power z^w on the principal branch.
pub fn cpow(z: &Complex, w: &Complex) -> Complex {
    let prec = z.prec().0.max(w.prec().0);
    let l = Complex::with_val(prec, z.ln_ref());
    Complex::with_val(prec, l * w).exp()
}

/// Positive real base to complex exponent.
pub fn rpow(x: &Float, w: &Complex) -> Complex {
    let prec = x.prec().max(w.prec().0);
    let l = Float::with_val(prec, x.ln_ref());
    Complex::with_val(prec, w * l).exp()
}

/// (−1)^k as a sign, never through floating powers.
pub fn neg1_pow(k: i64) -> i32 {
    if k.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// i^(2k) = (−1)^k.
pub fn i_pow_2k(k: i64) -> i32 {
    neg1_pow(k)
}

pub fn to_decimal(x: &Float) -> String {
    let digits = ((x.prec() as f64) * std::f64::consts::LOG10_2).floor() as usize;
    x.to_string_radix(10, Some(digits.max(1)))
}

pub fn from_decimal(s: &str, prec: u32) -> Option<Float> {
    Float::parse(s).ok().map(|p| Float::with_val(prec, p))
}

pub fn powi(x: &Float, n: i32) -> Float {
    Float::with_val(x.prec(), x.pow(n))
}

pub fn max_f(a: f64, b: f64) -> f64 {
    if a > b {
        a
    } else {
        b
    }
}
