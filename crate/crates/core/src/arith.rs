//! Elementary multiplicative number theory: factorization, divisor
//! functions, Möbius/Euler, and Kloosterman sums.

use rug::{Complex, Float, Rational};

use crate::error::{Error, Result};
use crate::mp::{self, PrecisionContext};

/// Prime factorization by trial division, as (p, exponent) pairs.
pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n <= 1 {
        return out;
    }
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut ds = vec![1u64];
    for (p, e) in factor(n) {
        let len = ds.len();
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                ds.push(ds[i] * pk);
            }
        }
    }
    ds.sort_unstable();
    ds
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Inverse of a modulo c, if it exists.
pub fn mod_inverse(a: i64, c: i64) -> Option<i64> {
    if c == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (a.rem_euclid(c), c);
    let (mut s0, mut s1) = (1i64, 0i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        None
    } else {
        Some(s0.rem_euclid(c))
    }
}

/// Number of divisors τ₀(n).
pub fn tau0(n: u64) -> u64 {
    factor(n).iter().map(|&(_, e)| e as u64 + 1).product()
}

/// τ₀(n) for all n ≤ limit (index 0 unused).
pub fn tau0_table(limit: usize) -> Vec<u32> {
    let mut t = vec![0u32; limit + 1];
    for d in 1..=limit {
        let mut m = d;
        while m <= limit {
            t[m] += 1;
            m += d;
        }
    }
    t
}

/// τ_v(n) = Σ_{d|n} (d²/n)^v.
pub fn divisor_tau(n: u64, v: &Complex, ctx: &PrecisionContext) -> Complex {
    assert!(n >= 1, "divisor_tau needs n >= 1");
    let prec = ctx.prec();
    let mut acc = Complex::new(prec);
    let nf = Float::with_val(prec, n);
    for d in divisors(n) {
        let base = Float::with_val(prec, d * d) / &nf;
        acc += mp::rpow(&base, v);
    }
    acc
}

/// σ_s(n) = Σ_{d|n} d^s.
pub fn sigma(n: u64, s: &Complex, ctx: &PrecisionContext) -> Complex {
    let prec = ctx.prec();
    let mut acc = Complex::new(prec);
    for d in divisors(n) {
        acc += mp::rpow(&Float::with_val(prec, d), s);
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct Multiplicative {
    pub mu: i64,
    pub phi: u64,
    pub rho: Rational,
}

/// Möbius μ(n), Euler φ(n), and ρ(n) = ∏_{p|n}(1 + 1/p).
pub fn multiplicative_basics(n: u64) -> Multiplicative {
    assert!(n >= 1, "multiplicative_basics needs n >= 1");
    let f = factor(n);
    let mut mu = 1i64;
    let mut phi = 1u64;
    let mut rho = Rational::from(1);
    for &(p, e) in &f {
        if e >= 2 {
            mu = 0;
        } else {
            mu = -mu;
        }
        phi *= (p - 1) * p.pow(e - 1);
        rho *= Rational::from((p + 1, p));
    }
    Multiplicative { mu, phi, rho }
}

pub fn mobius(n: u64) -> i64 {
    multiplicative_basics(n).mu
}

/// Classical Kloosterman sum S(m,n;c) = Σ_{(a,c)=1} e((am + ā n)/c).
///
/// Residues are tallied exactly before any trigonometric evaluation; the
/// imaginary part is computed and checked rather than assumed zero.
pub fn kloosterman(m: i64, n: i64, c: u64, ctx: &PrecisionContext) -> Result<Float> {
    if c == 0 {
        return Err(Error::Domain("Kloosterman modulus c must be positive".into()));
    }
    let ci = c as i64;
    let mut counts = vec![0i64; c as usize];
    for a in 0..ci {
        if let Some(inv) = mod_inverse(a, ci) {
            let r = ((a as i128 * m as i128 + inv as i128 * n as i128).rem_euclid(ci as i128)) as usize;
            counts[r] += 1;
        }
    }
    let prec = ctx.prec() + 16;
    let mut re = Float::new(prec);
    let mut im = Float::new(prec);
    for (r, &cnt) in counts.iter().enumerate() {
        if cnt == 0 {
            continue;
        }
        let z = mp::e_rat(r as i64, c, prec);
        re += Float::with_val(prec, z.real() * cnt);
        im += Float::with_val(prec, z.imag() * cnt);
    }
    let bound = ctx.tail_tol * (c as f64).max(1.0);
    if im.to_f64().abs() > bound {
        return Err(Error::Domain(format!(
            "Kloosterman sum S({m},{n};{c}) has imaginary part {:e}",
            im.to_f64()
        )));
    }
    Ok(Float::with_val(ctx.prec(), re))
}

/// Weil bound τ₀(c)·√gcd(m,n,c)·√c.
pub fn weil_bound(m: i64, n: i64, c: u64) -> f64 {
    let g = gcd(gcd(m, n), c as i64).max(1) as f64;
    tau0(c) as f64 * g.sqrt() * (c as f64).sqrt()
}

/// Certified constant C with τ₀(n) ≤ C·n^e for all n ≥ 1.
///
/// The sup of τ₀(n)/n^e is multiplicative, and only primes p < 2^{1/e}
/// contribute a local factor above 1.
pub fn tau0_power_constant(e: f64) -> f64 {
    assert!(e > 0.0 && e <= 1.0);
    let plimit = 2f64.powf(1.0 / e).ceil() as u64;
    let mut c = 1.0f64;
    for p in 2..=plimit {
        if factor(p).len() != 1 || factor(p)[0].1 != 1 {
            continue;
        }
        let mut best = 1.0f64;
        for a in 1..200u32 {
            let val = (a as f64 + 1.0) / (p as f64).powf(a as f64 * e);
            if val > best {
                best = val;
            }
        }
        c *= best;
    }
    // guard against the f64 rounding in the local maxima
    c * (1.0 + 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    #[test]
    fn factor_small() {
        assert_eq!(factor(12), vec![(2, 2), (3, 1)]);
        assert_eq!(factor(97), vec![(97, 1)]);
        assert!(factor(1).is_empty());
        assert_eq!(divisors(12), vec![1, 2, 3, 4, 6, 12]);
    }

    #[test]
    fn tau_examples() {
        let c = ctx();
        let v = c.c(0.3, -1.7);
        let t1 = divisor_tau(1, &v, &c);
        assert!((t1 - Complex::with_val(256, 1)).abs().real().to_f64() < 1e-70);
        let t6 = divisor_tau(6, &c.c(0.0, 0.0), &c);
        assert_eq!(t6.real().to_f64(), 4.0);
        // brute force over factorizations n1 n2 = 12 of (n1/n2)^v
        let v = c.c(0.0, 0.5);
        let mut brute = Complex::new(256);
        for n1 in 1..=12u64 {
            if 12 % n1 == 0 {
                let n2 = 12 / n1;
                let r = Float::with_val(256, n1) / Float::with_val(256, n2);
                brute += mp::rpow(&r, &v);
            }
        }
        let d = Complex::with_val(256, divisor_tau(12, &v, &c) - brute);
        assert!(mp::cabs_f64(&d) < 1e-70);
    }

    #[test]
    fn multiplicative_examples() {
        let m = multiplicative_basics(1);
        assert_eq!((m.mu, m.phi, m.rho), (1, 1, Rational::from(1)));
        let m = multiplicative_basics(12);
        assert_eq!((m.mu, m.phi, m.rho), (0, 4, Rational::from(2)));
        let m = multiplicative_basics(30);
        let rho = Rational::from((3, 2)) * Rational::from((4, 3)) * Rational::from((6, 5));
        assert_eq!((m.mu, m.phi, m.rho), (-1, 8, rho));
    }

    #[test]
    fn kloosterman_examples() {
        let c = ctx();
        assert_eq!(kloosterman(1, 1, 1, &c).unwrap().to_f64(), 1.0);
        let s = kloosterman(0, 1, 2, &c).unwrap();
        assert!(Float::with_val(256, &s + 1u32).abs().to_f64() < 1e-70);
        // brute force with explicit inverses for c = 5
        let mut brute = 0.0f64;
        for a in 1..5i64 {
            let inv = (1..5).find(|b| (a * b) % 5 == 1).unwrap();
            brute += (2.0 * std::f64::consts::PI * (a + inv) as f64 / 5.0).cos();
        }
        let s = kloosterman(1, 1, 5, &c).unwrap().to_f64();
        assert!((s - brute).abs() < 1e-12);
        assert!(kloosterman(1, 1, 0, &c).is_err());
    }

    #[test]
    fn weil_bound_holds() {
        let c = PrecisionContext::new(96);
        for m in 1..=20i64 {
            for n in 1..=20i64 {
                for cc in 1..=50u64 {
                    let s = kloosterman(m, n, cc, &c).unwrap().to_f64();
                    assert!(s.abs() <= weil_bound(m, n, cc) * (1.0 + 1e-12), "{m} {n} {cc}");
                }
            }
        }
    }

    #[test]
    fn tau0_multiplicative() {
        for m in 1..=100u64 {
            for n in 1..=100u64 {
                if gcd(m as i64, n as i64) == 1 {
                    assert_eq!(tau0(m * n), tau0(m) * tau0(n));
                }
            }
        }
        let t = tau0_table(200);
        for n in 1..=200 {
            assert_eq!(t[n] as u64, tau0(n as u64));
        }
    }

    #[test]
    fn tau_power_constant_bounds_table() {
        for &e in &[0.25, 1.0 / 3.0, 0.5] {
            let c = tau0_power_constant(e);
            let t = tau0_table(100_000);
            for n in 1..=100_000usize {
                assert!((t[n] as f64) <= c * (n as f64).powf(e));
            }
        }
        // τ₀(n) ≤ √(3n) is the classical e = 1/2 case
        assert!((tau0_power_constant(0.5) - 3f64.sqrt()).abs() < 1e-9);
    }
}
