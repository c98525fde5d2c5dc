//! The kernels φ_k, Φ_k, ψ_k of the shifted-convolution error terms, at the
//! central point and at general shifts (u, v), plus ODE residual checks.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::{Complete, Complex, Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mp::{self, PrecisionContext};
use crate::specialfn::gamma::{harmonic, ln_gamma};
use crate::specialfn::hyper::{gauss_2f1_series, MAX_TERMS};

#[derive(Debug, Clone)]
pub struct KernelParams {
    pub k: u32,
    pub u: Complex,
    pub v: Complex,
}

impl KernelParams {
    pub fn new(k: u32, u: Complex, v: Complex) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("k must be positive".into()));
        }
        let ru = u.real().to_f64().abs();
        let rv = v.real().to_f64().abs();
        if ru + rv >= k as f64 - 1.0 && !(ru == 0.0 && rv == 0.0) {
            return Err(Error::Regime(format!("|Re u| + |Re v| = {} not below k − 1 = {}", ru + rv, k as f64 - 1.0)));
        }
        Ok(KernelParams { k, u, v })
    }

    pub fn central(k: u32, prec: u32) -> Self {
        KernelParams { k, u: Complex::new(prec), v: Complex::new(prec) }
    }
}

#[derive(Debug, Clone)]
pub struct KernelValue {
    pub x: f64,
    pub value: Complex,
    /// Certified bound on the omitted series tail, absolute.
    pub tail_bound: f64,
    /// Set when the series needed more than `MAX_TERMS` terms.
    pub slow: bool,
}

impl KernelValue {
    pub fn re(&self) -> Float {
        self.value.real().clone()
    }
}

/// φ_k together with its first two derivatives, from the series.
#[derive(Debug, Clone)]
pub struct PhiJet {
    pub value: Float,
    pub d1: Float,
    pub d2: Float,
    pub tail_bound: f64,
}

/// Exact coefficients of the finite part: φ_k = −2 log x · P(x) + Q(x) + tail.
struct PhiPoly {
    p: Vec<Rational>,
    q: Vec<Rational>,
}

fn phi_poly(k: u32) -> Arc<PhiPoly> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<PhiPoly>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&k) {
        return p.clone();
    }
    let kk = k as i64;
    let mut a = Integer::from(1);
    let mut p = Vec::with_capacity(k as usize);
    let mut q = Vec::with_capacity(k as usize);
    for n in 0..kk {
        // A(n) = (−1)^n Γ(k+n)/(Γ(k−n) n!²); digamma terms combine to
        // 4H_n − 2H_{k+n−1} − 2H_{k−n−1} (Euler's constant cancels)
        let h = (harmonic(n as u64) * 4u32)
            - (harmonic((kk + n - 1) as u64) * 2u32)
            - (harmonic((kk - n - 1) as u64) * 2u32);
        p.push(Rational::from(&a));
        q.push(Rational::from(&a) * h);
        if n + 1 < kk {
            a *= -(kk + n) * (kk - n - 1);
            a /= (n + 1) * (n + 1);
        }
    }
    let poly = Arc::new(PhiPoly { p, q });
    cache.lock().unwrap().insert(k, poly.clone());
    poly
}

fn check_unit(x: &Float) -> Result<()> {
    if !(x > &0 && x < &1) {
        return Err(Error::Domain(format!("x = {} outside (0, 1)", x.to_f64())));
    }
    Ok(())
}

/// φ_k(x), φ_k′(x), φ_k″(x) from the log-polynomial series plus the
/// Σ_{n≥k} tail, for any x ∈ (0,1) and any k ≥ 1 (no reflection).
pub fn phi_k_series(x: &Float, k: u32, ctx: &PrecisionContext) -> Result<PhiJet> {
    check_unit(x)?;
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    let poly = phi_poly(k);
    // precision lost to the alternating polynomial: log2 of its largest term
    let xf = x.to_f64();
    let mut big = 0.0f64;
    for (n, c) in poly.q.iter().enumerate() {
        let m = Float::with_val(64, c).abs();
        if m > 0 {
            let l = m.get_exp().unwrap_or(0) as f64 + n as f64 * xf.log2();
            big = big.max(l);
        }
    }
    let wp = ctx.prec() + 48 + big.max(0.0).ceil() as u32 + 2 * (32 - k.leading_zeros());
    let xw = Float::with_val(wp, x);
    let lx = Float::with_val(wp, xw.ln_ref());
    let (p0, p1, p2) = poly_jet(&poly.p, &xw, wp);
    let (q0, q1, q2) = poly_jet(&poly.q, &xw, wp);
    let (t0, t1, t2, tail) = tail_jet(k, &xw, wp)?;
    let sign = mp::neg1_pow(k as i64);
    let x2 = Float::with_val(wp, xw.square_ref());
    // φ = −2 log x P + Q + 2(−1)^k T
    let v = Float::with_val(wp, &lx * &p0) * -2i32 + &q0 + Float::with_val(wp, &t0 * (2 * sign));
    let d1 = Float::with_val(wp, &p0 / &xw) * -2i32 + Float::with_val(wp, &lx * &p1) * -2i32 + &q1 + Float::with_val(wp, &t1 * (2 * sign));
    let d2 = Float::with_val(wp, &p0 / &x2) * 2u32 - Float::with_val(wp, &p1 / &xw) * 4u32 + Float::with_val(wp, &lx * &p2) * -2i32
        + &q2
        + Float::with_val(wp, &t2 * (2 * sign));
    Ok(PhiJet {
        value: Float::with_val(ctx.prec(), v),
        d1: Float::with_val(ctx.prec(), d1),
        d2: Float::with_val(ctx.prec(), d2),
        tail_bound: 2.0 * tail,
    })
}

fn poly_jet(c: &[Rational], x: &Float, wp: u32) -> (Float, Float, Float) {
    let mut f0 = Float::new(wp);
    let mut f1 = Float::new(wp);
    let mut f2 = Float::new(wp);
    // Horner on value and both derivatives
    for cn in c.iter().rev() {
        f2 = Float::with_val(wp, &f2 * x) + Float::with_val(wp, &f1 * 2u32);
        f1 = Float::with_val(wp, &f1 * x) + &f0;
        f0 = Float::with_val(wp, &f0 * x) + Float::with_val(wp, cn);
    }
    (f0, f1, f2)
}

/// Σ_{n≥k} C(n) xⁿ with C(n) = Γ(n+k)Γ(n−k+1)/Γ²(n+1), and two derivatives.
fn tail_jet(k: u32, x: &Float, wp: u32) -> Result<(Float, Float, Float, f64)> {
    let kk = k as u64;
    let c0 = Rational::from((Integer::factorial(2 * k - 1).complete(), Integer::from(Integer::factorial(k)).square()));
    let mut t = Float::with_val(wp, &c0) * mp::powi(x, k as i32);
    let mut s0 = Float::new(wp);
    let mut s1 = Float::new(wp);
    let mut s2 = Float::new(wp);
    let xf = x.to_f64();
    let tol = Float::with_val(wp, 1) >> (wp - 16);
    let mut n = kk;
    let mut tail;
    loop {
        let nf = Float::with_val(wp, n);
        let d1 = Float::with_val(wp, &t * &nf) / x;
        let d2 = Float::with_val(wp, &d1 * (n as f64 - 1.0)) / x;
        s0 += &t;
        s1 += &d1;
        s2 += &d2;
        // every later term ratio of the three series is at most ρ
        let rho = if n > 1 { xf * (n as f64 + 1.0) / (n as f64 - 1.0) } else { 1.0 };
        if rho < 1.0 {
            let tm = d2.to_f64().abs().max(d1.to_f64().abs()).max(t.to_f64().abs());
            tail = tm * rho / (1.0 - rho);
            let scale = Float::with_val(wp, s2.clone().abs() + s0.clone().abs()) + s1.clone().abs();
            if Float::with_val(wp, &scale * &tol) >= tail || tm == 0.0 {
                break;
            }
        }
        let num = (n + kk) * (n + 1 - kk);
        t *= num;
        t /= (n + 1) * (n + 1);
        t *= x;
        n += 1;
        if (n - kk) as usize > MAX_TERMS {
            return Err(Error::NonConvergence(format!("φ_k tail at x = {xf}")));
        }
    }
    Ok((s0, s1, s2, tail))
}


/// φ_k(x) for even k; x > 1/2 goes through φ_k(x) = (−1)^k φ_k(1−x).
pub fn phi_k(x: &Float, k: u32, ctx: &PrecisionContext) -> Result<KernelValue> {
    check_unit(x)?;
    if k % 2 == 1 {
        return Err(Error::Parity(format!("φ_k at the central point needs even k, got {k}")));
    }
    let reflect = x > &0.5f64;
    let xe = if reflect { Float::with_val(x.prec().max(ctx.prec()), 1u32 - x) } else { x.clone() };
    let jet = phi_k_series(&xe, k, ctx)?;
    Ok(KernelValue { x: x.to_f64(), value: Complex::with_val(ctx.prec(), &jet.value), tail_bound: jet.tail_bound, slow: false })
}

fn sin_half_plus(z: &Complex, wp: u32) -> Complex {
    (Complex::with_val(wp, z + Float::with_val(wp, 0.5)) * mp::pi(wp)).sin()
}

/// φ̃_k(x; u, v) with the Gamma ratio in log space.
pub fn phi_tilde(x: &Float, k: u32, u: &Complex, v: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    check_unit(x)?;
    let wp = ctx.prec() + 32;
    let wctx = ctx.raised(32);
    let kf = Float::with_val(wp, k);
    let a = Complex::with_val(wp, &kf - u) + v;
    let b = Complex::with_val(wp, 1u32 - Complex::with_val(wp, &kf + u)) + v;
    let c = Complex::with_val(wp, v * 2u32) + 1u32;
    let kuv = Complex::with_val(wp, &kf + u) - v;
    let lg = Complex::with_val(wp, ln_gamma(&a, &wctx)? - ln_gamma(&c, &wctx)?) - ln_gamma(&kuv, &wctx)?;
    let two_pi = Float::with_val(wp, mp::pi(wp) * 2u32);
    let l2p = Float::with_val(wp, two_pi.ln_ref());
    let lx = Float::with_val(wp, x.ln_ref());
    let l1x = Float::with_val(wp, Float::with_val(wp, 1u32 - x).ln_ref());
    let e = lg + Complex::with_val(wp, Complex::with_val(wp, u * 2u32) + 1u32) * &l2p + Complex::with_val(wp, v * &lx)
        - Complex::with_val(wp, u * &l1x);
    let den = (Complex::with_val(wp, v + Float::with_val(wp, 0.5)) * mp::pi(wp)).cos() * 2u32;
    let f = gauss_2f1_series(&a, &b, &c, &Float::with_val(wp, x), &wctx)?;
    if f.slow {
        return Err(Error::NonConvergence(format!("φ̃_k series at x = {}", x.to_f64())));
    }
    Ok(Complex::with_val(ctx.prec(), e.exp() * f.value / den))
}

/// φ_k(x; u, v) = φ̃_k(x; u, v) + φ̃_k(x; u, −v), for v ≠ 0.
pub fn phi_k_uv(x: &Float, p: &KernelParams, ctx: &PrecisionContext) -> Result<Complex> {
    if p.v.real().is_zero() && p.v.imag().is_zero() {
        return Err(Error::Domain("φ_k(x; u, v) needs v ≠ 0; use phi_k for the limit".into()));
    }
    let mv = Complex::with_val(ctx.prec(), -&p.v);
    Ok(phi_tilde(x, p.k, &p.u, &p.v, ctx)? + phi_tilde(x, p.k, &p.u, &mv, ctx)?)
}

/// 2(2π)^{2u} Γ(k−u+v)Γ(k−u−v)/Γ(2k) in log space.
fn log_big_prefactor(k: u32, u: &Complex, v: &Complex, wp: u32, wctx: &PrecisionContext) -> Result<(Complex, Complex, Complex)> {
    let kf = Float::with_val(wp, k);
    let a = Complex::with_val(wp, &kf - u) + v;
    let b = Complex::with_val(wp, &kf - u) - v;
    let two_k = Complex::with_val(wp, (2 * k, 0));
    let l2p = Float::with_val(wp, Float::with_val(wp, mp::pi(wp) * 2u32).ln_ref());
    let lg = Complex::with_val(wp, ln_gamma(&a, wctx)? + ln_gamma(&b, wctx)?) - ln_gamma(&two_k, wctx)?;
    let l = lg + Complex::with_val(wp, u * 2u32) * &l2p + mp::log2_const(wp);
    Ok((l, a, b))
}

/// Φ_k(x; u, v) = 2(2π)^{2u} Γ(k−u+v)Γ(k−u−v)/Γ(2k) · sin π(1/2+u) · x^k (1−x)^{−u} ₂F₁(k−u+v, k−u−v; 2k; x).
pub fn big_phi_k(x: &Float, p: &KernelParams, ctx: &PrecisionContext) -> Result<KernelValue> {
    check_unit(x)?;
    let wp = ctx.prec() + 32;
    let wctx = ctx.raised(32);
    let (l, a, b) = log_big_prefactor(p.k, &p.u, &p.v, wp, &wctx)?;
    let lx = Float::with_val(wp, x.ln_ref());
    let l1x = Float::with_val(wp, Float::with_val(wp, 1u32 - x).ln_ref());
    let e = l + Complex::with_val(wp, &lx * p.k) - Complex::with_val(wp, &p.u * &l1x);
    let pref = e.exp() * sin_half_plus(&p.u, wp);
    let c = Complex::with_val(wp, (2 * p.k, 0));
    let f = gauss_2f1_series(&a, &b, &c, &Float::with_val(wp, x), &wctx)?;
    let scale = mp::cabs_f64(&pref);
    Ok(KernelValue {
        x: x.to_f64(),
        value: Complex::with_val(ctx.prec(), &pref * &f.value),
        tail_bound: f.tail_bound * scale,
        slow: f.slow,
    })
}

/// Central Φ_k(x) = 2Γ²(k)/Γ(2k) x^k ₂F₁(k, k; 2k; x).
pub fn big_phi_k_central(x: &Float, k: u32, ctx: &PrecisionContext) -> Result<KernelValue> {
    big_phi_k(x, &KernelParams::central(k, ctx.prec()), ctx)
}

/// ψ_k(x; u, v) = 2(2π)^{2u} Γ(k−u+v)Γ(k−u−v)/Γ(2k) · sin π(1/2+v) · x^k (1+x)^{−u} ₂F₁(k−u+v, k−u−v; 2k; −x),
/// with ₂F₁ at −x taken through the Pfaff transform to x/(1+x) ∈ (0, 1).
pub fn psi_k(x: &Float, p: &KernelParams, ctx: &PrecisionContext) -> Result<KernelValue> {
    psi_k_route(x, p, false, ctx)
}

/// Same value through the other Pfaff transform (roles of the upper
/// parameters swapped); an independent route for cross-checks.
pub fn psi_k_alt(x: &Float, p: &KernelParams, ctx: &PrecisionContext) -> Result<KernelValue> {
    psi_k_route(x, p, true, ctx)
}

fn psi_k_route(x: &Float, p: &KernelParams, swap: bool, ctx: &PrecisionContext) -> Result<KernelValue> {
    if !(x > &0) {
        return Err(Error::Domain(format!("x = {} must be positive", x.to_f64())));
    }
    let wp = ctx.prec() + 32;
    let wctx = ctx.raised(32);
    let (l, a, b) = log_big_prefactor(p.k, &p.u, &p.v, wp, &wctx)?;
    let c = Complex::with_val(wp, (2 * p.k, 0));
    // F(a,b;c;−x) = (1+x)^{−a} F(a, c−b; c; x/(1+x))
    let (a1, b1) = if swap { (b.clone(), a.clone()) } else { (a.clone(), b.clone()) };
    let cb = Complex::with_val(wp, &c - &b1);
    let x1 = Float::with_val(wp, x + 1u32);
    let z = Float::with_val(wp, x / &x1);
    let f = gauss_2f1_series(&a1, &cb, &c, &z, &wctx)?;
    let lx = Float::with_val(wp, x.ln_ref());
    let l1x = Float::with_val(wp, x1.ln_ref());
    let e = l + Complex::with_val(wp, &lx * p.k) - Complex::with_val(wp, Complex::with_val(wp, &p.u + &a1) * &l1x);
    let pref = e.exp() * sin_half_plus(&p.v, wp);
    let scale = mp::cabs_f64(&pref);
    Ok(KernelValue {
        x: x.to_f64(),
        value: Complex::with_val(ctx.prec(), &pref * &f.value),
        tail_bound: f.tail_bound * scale,
        slow: f.slow,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdeForm {
    /// (x−x²)φ″ + (1−2x)φ′ + k(k−1)φ = 0
    Phi,
    /// Y″ + (1/(4x²(1−x)²) + k(k−1)/(x(1−x))) Y = 0 for Y = √(x(1−x)) φ_k
    YForm,
    /// y″ − (u²f + g) y = 0 for y = ₂F₁(k,k;2k;x) x^k √(1−x), u = k − 1/2
    PhiForm,
}

/// |residual| divided by the largest individual term of the equation;
/// derivatives come from term-wise differentiated series.
pub fn ode_residual(which: OdeForm, x: &Float, k: u32, ctx: &PrecisionContext) -> Result<f64> {
    if !(&1e-3..=&(1.0 - 1e-3)).contains(&x) {
        return Err(Error::Domain(format!("x = {} within 10⁻³ of an endpoint", x.to_f64())));
    }
    let wp = ctx.prec();
    let x1 = Float::with_val(wp, 1u32 - x);
    let kk1 = Float::with_val(wp, k as u64 * (k as u64 - 1));
    let terms: Vec<Float> = match which {
        OdeForm::Phi => {
            let j = phi_k_series(x, k, ctx)?;
            let s = Float::with_val(wp, x * &x1);
            vec![s * &j.d2, Float::with_val(wp, 1u32 - Float::with_val(wp, x * 2u32)) * &j.d1, kk1 * &j.value]
        }
        OdeForm::YForm => {
            let j = phi_k_series(x, k, ctx)?;
            let s = Float::with_val(wp, x * &x1);
            let sp = Float::with_val(wp, 1u32 - Float::with_val(wp, x * 2u32));
            let al = Float::with_val(wp, s.sqrt_ref());
            let al1 = Float::with_val(wp, &sp / &al) / 2u32;
            let al2 = Float::with_val(wp, -Float::with_val(wp, al.recip_ref())) - Float::with_val(wp, sp.square_ref()) / (Float::with_val(wp, &s * &al) * 4u32);
            let y = Float::with_val(wp, &al * &j.value);
            let y2 = Float::with_val(wp, &al2 * &j.value) + Float::with_val(wp, &al1 * &j.d1) * 2u32 + Float::with_val(wp, &al * &j.d2);
            let q = Float::with_val(wp, Float::with_val(wp, s.square_ref()) * 4u32).recip() + Float::with_val(wp, &kk1 / &s);
            vec![y2, q * y]
        }
        OdeForm::PhiForm => {
            let (f0, f1, f2) = hyp_kk2k_jet(k, x, wp)?;
            let kf = Float::with_val(wp, k);
            let h = mp::powi(x, k as i32) * Float::with_val(wp, x1.sqrt_ref());
            let r = Float::with_val(wp, &kf / x) - Float::with_val(wp, x1.recip_ref()) / 2u32;
            let rp = Float::with_val(wp, -Float::with_val(wp, &kf / Float::with_val(wp, x.square_ref())))
                - Float::with_val(wp, x1.square_ref()).recip() / 2u32;
            let h1 = Float::with_val(wp, &h * &r);
            let h2 = Float::with_val(wp, &h * (Float::with_val(wp, r.square_ref()) + &rp));
            let y = Float::with_val(wp, &f0 * &h);
            let y2 = Float::with_val(wp, &f2 * &h) + Float::with_val(wp, &f1 * &h1) * 2u32 + Float::with_val(wp, &f0 * &h2);
            let uu = Float::with_val(wp, &kf - 0.5f64).square();
            let x2 = Float::with_val(wp, x.square_ref());
            let ff = Float::with_val(wp, &x2 * &x1).recip();
            let s = Float::with_val(wp, x * &x1);
            let g = Float::with_val(wp, -Float::with_val(wp, Float::with_val(wp, s.square_ref()) * 4u32).recip()) + Float::with_val(wp, &s * 4u32).recip();
            let q = uu * ff + g;
            vec![y2, -(q * y)]
        }
    };
    let mut sum = Float::new(wp);
    let mut scale = 0.0f64;
    for t in &terms {
        sum += t;
        scale = scale.max(t.to_f64().abs());
    }
    Ok(sum.to_f64().abs() / scale.max(1e-300))
}

/// ₂F₁(k,k;2k;x) and two derivatives by term-wise differentiation.
fn hyp_kk2k_jet(k: u32, x: &Float, wp: u32) -> Result<(Float, Float, Float)> {
    let kk = k as u64;
    let mut t = Float::with_val(wp, 1);
    let mut s0 = Float::new(wp);
    let mut s1 = Float::new(wp);
    let mut s2 = Float::new(wp);
    let tol = Float::with_val(wp, 1) >> (wp + 8);
    let xf = x.to_f64();
    let mut n = 0u64;
    loop {
        // t = coefficient × xⁿ
        s0 += &t;
        if n >= 1 {
            s1 += Float::with_val(wp, &t * n) / x;
        }
        if n >= 2 {
            s2 += Float::with_val(wp, &t * (n * (n - 1))) / Float::with_val(wp, x.square_ref());
        }
        let nn = n as f64;
        let rho = if n >= 2 { xf * (nn + 1.0) / (nn - 1.0) * (1.0 + (kk as f64) / (nn + 2.0 * kk as f64)) } else { 1.0 };
        if n > 2 && rho < 1.0 {
            let bound = t.to_f64() * (nn * nn) / (xf * xf) * rho / (1.0 - rho);
            if Float::with_val(wp, &s2 * &tol) >= bound.abs() && Float::with_val(wp, &s0 * &tol) >= t.to_f64() * rho / (1.0 - rho) {
                break;
            }
        }
        t *= (kk + n) * (kk + n);
        t /= (2 * kk + n) * (n + 1);
        t *= x;
        n += 1;
        if n as usize > MAX_TERMS {
            return Err(Error::NonConvergence("₂F₁(k,k;2k;x) jet".into()));
        }
    }
    Ok((s0, s1, s2))
}
