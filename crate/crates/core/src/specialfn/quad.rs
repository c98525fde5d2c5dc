//! Double-exponential quadrature, Gauss–Legendre rules, and Wynn's
//! epsilon accelerator for extended-precision integrals.

use std::collections::HashMap;
use std::sync::Mutex;

use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::mp;

#[derive(Debug, Clone)]
pub struct QuadResult {
    pub value: Complex,
    pub error_estimate: f64,
    pub levels: u32,
}

fn converged(prev: &Complex, cur: &Complex, tol: f64) -> (bool, f64) {
    let d = mp::cabs_f64(&Complex::with_val(cur.prec().0, cur - prev));
    let scale = mp::cabs_f64(cur).max(1e-300);
    (d <= tol * scale || d == 0.0, d)
}

/// ∫_a^b f by tanh-sinh. Endpoint singularities of algebraic or
/// logarithmic type are tolerated.
pub fn tanh_sinh<F>(f: F, a: &Float, b: &Float, prec: u32, rel_tol: f64) -> Result<QuadResult>
where
    F: Fn(&Float) -> Complex,
{
    let half_pi = Float::with_val(prec, mp::pi(prec) / 2u32);
    let mid = Float::with_val(prec, a + b) / 2u32;
    let halfw = Float::with_val(prec, b - a) / 2u32;
    let tmax = ((prec as f64) * std::f64::consts::LN_2 / std::f64::consts::FRAC_PI_2 * 2.0).asinh() + 0.5;
    let node = |t: &Float| -> Option<Complex> {
        let sh = Float::with_val(prec, t.sinh_ref());
        let ch = Float::with_val(prec, t.cosh_ref());
        let u = Float::with_val(prec, &half_pi * &sh);
        let e2u = Float::with_val(prec, &u * 2u32).exp();
        // x − a and b − x from e^{±2u} to avoid 1 − tanh cancellation
        let xa = Float::with_val(prec, &halfw * 2u32) / Float::with_val(prec, 1u32 + Float::with_val(prec, e2u.recip_ref()));
        let x = Float::with_val(prec, a + &xa);
        if x <= *a || x >= *b {
            return None;
        }
        let chu = Float::with_val(prec, u.cosh_ref());
        let w = Float::with_val(prec, &half_pi * &ch) / chu.square() * &halfw;
        if w.is_zero() {
            return None;
        }
        let fx = f(&x);
        let _ = &mid;
        Some(fx * w)
    };
    let mut h = Float::with_val(prec, 1);
    let mut sum = node(&Float::with_val(prec, 0)).unwrap_or_else(|| Complex::new(prec));
    let n0 = (tmax / 1.0).ceil() as i64;
    for k in 1..=n0 {
        let t = Float::with_val(prec, k);
        if let Some(v) = node(&t) {
            sum += v;
        }
        if let Some(v) = node(&Float::with_val(prec, -t)) {
            sum += v;
        }
    }
    let mut est = Complex::with_val(prec, &sum * &h);
    let mut last_err = f64::INFINITY;
    for level in 1..=((prec / 16).max(12)) {
        h /= 2u32;
        let nmax = (tmax / h.to_f64()).ceil() as i64;
        let mut k = 1i64;
        while k <= nmax {
            let t = Float::with_val(prec, &h * k);
            if let Some(v) = node(&t) {
                sum += v;
            }
            if let Some(v) = node(&Float::with_val(prec, -t)) {
                sum += v;
            }
            k += 2;
        }
        let new_est = Complex::with_val(prec, &sum * &h);
        let (ok, d) = converged(&est, &new_est, rel_tol);
        est = new_est;
        last_err = d;
        if ok && level >= 3 {
            return Ok(QuadResult { value: est, error_estimate: d, levels: level });
        }
    }
    Err(Error::NonConvergence(format!("tanh-sinh quadrature stalled at error {last_err:e}")))
}

/// ∫_a^∞ f by the exp-sinh map x = a + exp(π/2·sinh t); for integrands
/// decaying at least exponentially or algebraically fast enough.
pub fn exp_sinh<F>(f: F, a: &Float, prec: u32, rel_tol: f64) -> Result<QuadResult>
where
    F: Fn(&Float) -> Complex,
{
    let half_pi = Float::with_val(prec, mp::pi(prec) / 2u32);
    let node = |t: &Float| -> Complex {
        let sh = Float::with_val(prec, t.sinh_ref());
        let ch = Float::with_val(prec, t.cosh_ref());
        let e = Float::with_val(prec, &half_pi * &sh).exp();
        let x = Float::with_val(prec, a + &e);
        if x == *a {
            return Complex::new(prec);
        }
        let w = Float::with_val(prec, &half_pi * &ch) * &e;
        f(&x) * w
    };
    // scan outward until the contributions are negligible on each side
    let scan = |h: &Float, start: i64, step: i64, sum: &mut Complex| {
        let tiny = Float::with_val(prec, 1) >> (prec + 8);
        for dir in [1i64, -1] {
            let mut k = start;
            let mut small_run = 0;
            loop {
                let t = Float::with_val(prec, h * (dir * k));
                let v = node(&t);
                let mag = mp::cabs(&v);
                *sum += v;
                let scale = mp::cabs(sum).max(&tiny).clone();
                if mag < Float::with_val(prec, &scale * &tiny) * 256u32 || mag.is_zero() {
                    small_run += 1;
                    if small_run >= 3 {
                        break;
                    }
                } else {
                    small_run = 0;
                }
                k += step;
                if (h.to_f64() * k as f64).abs() > 12.0 {
                    break;
                }
            }
        }
    };
    let mut h = Float::with_val(prec, 0.5);
    let mut sum = node(&Float::with_val(prec, 0));
    scan(&h, 1, 1, &mut sum);
    let mut est = Complex::with_val(prec, &sum * &h);
    let mut last = f64::INFINITY;
    for level in 1..=((prec / 16).max(12)) {
        h /= 2u32;
        scan(&h, 1, 2, &mut sum);
        let new_est = Complex::with_val(prec, &sum * &h);
        let (ok, d) = converged(&est, &new_est, rel_tol);
        est = new_est;
        last = d;
        if ok && level >= 3 {
            return Ok(QuadResult { value: est, error_estimate: d, levels: level });
        }
    }
    Err(Error::NonConvergence(format!("exp-sinh quadrature stalled at error {last:e}")))
}

/// Real-valued convenience wrapper over `tanh_sinh`.
pub fn integrate_real<F>(f: F, a: &Float, b: &Float, prec: u32, rel_tol: f64) -> Result<Float>
where
    F: Fn(&Float) -> Float,
{
    let r = tanh_sinh(|x| Complex::with_val(prec, f(x)), a, b, prec, rel_tol)?;
    Ok(r.value.real().clone())
}

type GlKey = (usize, u32);
static GL_CACHE: Mutex<Option<HashMap<GlKey, (Vec<Float>, Vec<Float>)>>> = Mutex::new(None);

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize, prec: u32) -> (Vec<Float>, Vec<Float>) {
    {
        let g = GL_CACHE.lock().unwrap();
        if let Some(m) = g.as_ref() {
            if let Some(v) = m.get(&(n, prec)) {
                return v.clone();
            }
        }
    }
    let wp = prec + 32;
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for i in 0..n {
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut x = Float::with_val(wp, guess);
        let mut dp = Float::new(wp);
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, &x);
            let dx = Float::with_val(wp, &p / &d);
            x -= &dx;
            dp = d;
            if dx.is_zero() || dx.clone().abs().get_exp().unwrap_or(i32::MIN) < -(wp as i32) + 4 {
                let (_, d2) = legendre_and_derivative(n, &x);
                dp = d2;
                break;
            }
        }
        let one_minus = Float::with_val(wp, 1u32 - Float::with_val(wp, x.square_ref()));
        let w = Float::with_val(wp, 2u32) / (one_minus * dp.square());
        xs.push(Float::with_val(prec, &x));
        ws.push(Float::with_val(prec, &w));
    }
    let out = (xs, ws);
    let mut g = GL_CACHE.lock().unwrap();
    g.get_or_insert_with(HashMap::new).insert((n, prec), out.clone());
    out
}

fn legendre_and_derivative(n: usize, x: &Float) -> (Float, Float) {
    let prec = x.prec();
    let mut p0 = Float::with_val(prec, 1);
    let mut p1 = x.clone();
    for k in 2..=n {
        let a = Float::with_val(prec, x * &p1) * (2 * k - 1) as u32;
        let b = Float::with_val(prec, &p0 * (k - 1) as u32);
        let p2 = (a - b) / k as u32;
        p0 = p1;
        p1 = p2;
    }
    let xx = Float::with_val(prec, x.square_ref()) - 1u32;
    let d = Float::with_val(prec, x * &p1) - &p0;
    let d = d * n as u32 / xx;
    (p1, d)
}

/// ∫_a^b f by an n-point Gauss–Legendre rule.
pub fn gl_integrate<F>(f: F, a: &Float, b: &Float, n: usize, prec: u32) -> Complex
where
    F: Fn(&Float) -> Complex,
{
    let (xs, ws) = gauss_legendre(n, prec);
    let mid = Float::with_val(prec, a + b) / 2u32;
    let half = Float::with_val(prec, b - a) / 2u32;
    let mut acc = Complex::new(prec);
    for (x, w) in xs.iter().zip(ws.iter()) {
        let t = Float::with_val(prec, x * &half) + &mid;
        acc += f(&t) * w;
    }
    acc * half
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums; returns
/// the last even-column entry and the difference to its predecessor.
pub fn wynn_epsilon(seq: &[Complex]) -> (Complex, f64) {
    let n = seq.len();
    assert!(n >= 1);
    let prec = seq[0].prec().0;
    let mut prev: Vec<Complex> = vec![Complex::new(prec); n + 1];
    let mut cur: Vec<Complex> = seq.to_vec();
    let mut best = seq[n - 1].clone();
    let mut best_diff = f64::INFINITY;
    let mut col = 0;
    while cur.len() >= 2 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = Complex::with_val(prec, &cur[i + 1] - &cur[i]);
            if d.is_zero() {
                next.push(Complex::with_val(prec, (f64::INFINITY, 0.0)));
                continue;
            }
            next.push(Complex::with_val(prec, &prev[i + 1] + d.recip()));
        }
        col += 1;
        if col % 2 == 0 && next.len() >= 2 {
            let m = next.len();
            let a = &next[m - 1];
            let b = &next[m - 2];
            if a.real().is_finite() && b.real().is_finite() {
                let diff = mp::cabs_f64(&Complex::with_val(prec, a - b));
                if diff < best_diff {
                    best_diff = diff;
                    best = a.clone();
                }
            }
        }
        prev = cur;
        cur = next;
    }
    (best, best_diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::ops::Pow;

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        let p = 256;
        let a = Float::with_val(p, 0);
        let b = Float::with_val(p, 1);
        // ∫₀¹ −log x dx = 1 and ∫₀¹ x^{-1/2} dx = 2
        let r = tanh_sinh(|x| Complex::with_val(p, -Float::with_val(p, x.ln_ref())), &a, &b, p, 1e-60).unwrap();
        assert!((r.value.real().to_f64() - 1.0).abs() < 1e-15);
        let err = Float::with_val(p, r.value.real() - 1u32).abs();
        assert!(err.to_f64() < 1e-60);
        let r = tanh_sinh(|x| Complex::with_val(p, x.clone().sqrt().recip()), &a, &b, p, 1e-60).unwrap();
        assert!(Float::with_val(p, r.value.real() - 2u32).abs().to_f64() < 1e-55);
    }

    #[test]
    fn exp_sinh_gamma_integral() {
        let p = 256;
        let a = Float::with_val(p, 0);
        // ∫₀^∞ t^{5/2} e^{-t} dt = Γ(7/2)
        let r = exp_sinh(
            |t| {
                let v = Float::with_val(p, t.ln_ref()) * 2.5f64 - t;
                Complex::with_val(p, v.exp())
            },
            &a,
            p,
            1e-60,
        )
        .unwrap();
        let want = Float::with_val(p, 3.5).gamma();
        assert!(Float::with_val(p, r.value.real() - &want).abs().to_f64() < 1e-55);
    }

    #[test]
    fn gauss_legendre_polynomials_exact() {
        let p = 200;
        let a = Float::with_val(p, -0.5);
        let b = Float::with_val(p, 2);
        // degree-59 polynomial x^59 integrated exactly with 30 points
        let r = gl_integrate(|x| Complex::with_val(p, Float::with_val(p, x.pow(59u32))), &a, &b, 30, p);
        let want = (Float::with_val(p, 2).pow(60u32) - Float::with_val(p, -0.5).pow(60u32)) / 60u32;
        let rel = Float::with_val(p, r.real() - &want).abs() / &want;
        assert!(rel.to_f64() < 1e-55);
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // log 2 = Σ (−1)^{n+1}/n
        let p = 128;
        let mut s = Complex::new(p);
        let mut seq = Vec::new();
        for n in 1..=30u32 {
            let t = Float::with_val(p, 1) / n;
            if n % 2 == 1 {
                s += t;
            } else {
                s -= t;
            }
            seq.push(s.clone());
        }
        let (v, _) = wynn_epsilon(&seq);
        let want = mp::log2_const(p);
        assert!(Float::with_val(p, v.real() - &want).abs().to_f64() < 1e-20);
    }
}
