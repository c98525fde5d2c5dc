//! Liouville-Green uniform approximations of φ_k (Bessel Y/J, oscillatory)
//! and Φ_k (Bessel K, exponential) with u = k − 1/2 as the large parameter.
//!
//! Coefficient functions are written in s = √ξ. With σ = +1 for the
//! oscillatory case (c = cot s, q = csc² s) and σ = −1 for the exponential
//! case (c = coth s, q = csch² s):
//!
//! ψ = (s⁻² − q)/16, B(0) = −σ(c/s − s⁻²)/8,
//! A(1) = σ[(s⁻² − c/(2s) − q/2)/8 − (c − 1/s)²/128] + λ₁.

use rug::{Complex, Float};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{big_phi_k_central, phi_k};
use crate::mp::{self, PrecisionContext};
use crate::specialfn::bessel::{bessel_j, bessel_k, bessel_y};
use crate::specialfn::gamma::ln_gamma_real;
use crate::specialfn::quad::gl_integrate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LgCase {
    Oscillatory,
    Exponential,
}

impl LgCase {
    fn sigma(self) -> i32 {
        match self {
            LgCase::Oscillatory => 1,
            LgCase::Exponential => -1,
        }
    }

    /// ξ₂ = π²/4 for the oscillatory case, +∞ otherwise.
    pub fn xi_limit(self) -> f64 {
        match self {
            LgCase::Oscillatory => std::f64::consts::PI.powi(2) / 4.0,
            LgCase::Exponential => f64::INFINITY,
        }
    }
}

/// λ₁ = 1/16 + 75/(32π²), the constant that cancels the u^{-5/2} term of
/// Z_Y′(ξ₂) − Z_Y(ξ₂)/π² and so makes C_J = O(k⁻⁵). Uses the Hankel
/// coefficient a₃(1) = (μ−1)(μ−9)(μ−25)/(3!·8³) = +105/1024 at μ = 4.
pub fn lambda1_y(prec: u32) -> Float {
    lambda1_from(75, prec)
}

/// 1/16 + 405/(32π²), the value obtained with a₃(1) = −105/1024.
/// Kept for comparison; C_J then decays only like k⁻³.
pub fn lambda1_y_negative_a3(prec: u32) -> Float {
    lambda1_from(405, prec)
}

fn lambda1_from(num: u32, prec: u32) -> Float {
    let pi2 = Float::with_val(prec, mp::pi(prec).square_ref());
    Float::with_val(prec, num) / (pi2 * 32u32) + Float::with_val(prec, 1u32) / 16u32
}

#[derive(Debug, Clone)]
pub struct LgTransform {
    pub xi: Float,
    pub alpha: Float,
}

/// ξ = 4 arcsin²√x with α = (x−x²)^{1/4}/(2 arcsin^{1/2}√x), or
/// ξ = 4 artanh²√(1−x) with α = (x²−x³)^{1/4}/(2 artanh^{1/2}√(1−x)).
pub fn lg_transform(case: LgCase, x: &Float, ctx: &PrecisionContext) -> Result<LgTransform> {
    if !(x > &0 && x < &1) {
        return Err(Error::Domain(format!("x = {} outside (0, 1)", x.to_f64())));
    }
    let wp = ctx.prec() + 16;
    let xw = Float::with_val(wp, x);
    let x1 = Float::with_val(wp, 1u32 - &xw);
    let (half_s, quart) = match case {
        LgCase::Oscillatory => {
            let t = Float::with_val(wp, xw.sqrt_ref()).asin();
            let q = Float::with_val(wp, &xw * &x1).sqrt().sqrt();
            (t, q)
        }
        LgCase::Exponential => {
            let t = Float::with_val(wp, x1.sqrt_ref()).atanh();
            let q = (Float::with_val(wp, xw.square_ref()) * &x1).sqrt().sqrt();
            (t, q)
        }
    };
    let xi = Float::with_val(wp, half_s.square_ref()) * 4u32;
    let alpha = quart / (Float::with_val(wp, half_s.sqrt_ref()) * 2u32);
    Ok(LgTransform { xi: Float::with_val(ctx.prec(), xi), alpha: Float::with_val(ctx.prec(), alpha) })
}

/// x = sin²(√ξ/2) or x = 1/cosh²(√ξ/2).
pub fn lg_inverse(case: LgCase, xi: &Float, ctx: &PrecisionContext) -> Result<Float> {
    if !(xi > &0) || (case == LgCase::Oscillatory && xi.to_f64() >= case.xi_limit() * 4.0) {
        return Err(Error::Domain(format!("ξ = {} outside the case domain", xi.to_f64())));
    }
    let wp = ctx.prec() + 16;
    let h = Float::with_val(wp, xi.sqrt_ref()) / 2u32;
    let x = match case {
        LgCase::Oscillatory => h.sin().square(),
        LgCase::Exponential => h.cosh().square().recip(),
    };
    Ok(Float::with_val(ctx.prec(), x))
}

/// Working precision for s-space formulas, which cancel like s⁻⁴ near 0.
fn s_prec(s: f64, prec: u32) -> u32 {
    prec + 48 + (4.0 * (1.0 / s).log2().max(0.0)).ceil() as u32
}

/// c(s), q(s) for the case.
fn cq(case: LgCase, s: &Float) -> (Float, Float) {
    let wp = s.prec();
    match case {
        LgCase::Oscillatory => {
            let c = Float::with_val(wp, s.tan_ref()).recip();
            let q = Float::with_val(wp, c.square_ref()) + 1u32;
            (c, q)
        }
        LgCase::Exponential => {
            let c = Float::with_val(wp, s.tanh_ref()).recip();
            let q = Float::with_val(wp, c.square_ref()) - 1u32;
            (c, q)
        }
    }
}

fn check_xi(case: LgCase, xi: &Float) -> Result<()> {
    if !(xi > &0) {
        return Err(Error::Domain(format!("ξ = {} must be positive", xi.to_f64())));
    }
    if case == LgCase::Oscillatory && xi.to_f64() >= std::f64::consts::PI.powi(2) {
        return Err(Error::Pole(format!("ξ = {} at or beyond the pole at π²", xi.to_f64())));
    }
    Ok(())
}

/// The potential ψ(ξ) of the transformed equation.
pub fn lg_potential(case: LgCase, xi: &Float, ctx: &PrecisionContext) -> Result<Float> {
    check_xi(case, xi)?;
    let s0 = xi.to_f64().sqrt();
    let wp = s_prec(s0, ctx.prec());
    let s = Float::with_val(wp, xi.sqrt_ref());
    let (_, q) = cq(case, &s);
    let si2 = Float::with_val(wp, xi.recip_ref());
    let v = (si2 - q) / 16u32;
    Ok(Float::with_val(ctx.prec(), v))
}

/// Values and ξ-derivatives of B(0) and A(1), plus ψ, at one point.
#[derive(Debug, Clone)]
pub(crate) struct CoefJet {
    #[cfg_attr(not(test), allow(dead_code))]
    pub psi: Float,
    pub b0: Float,
    pub b0p: Float,
    pub a1: Float,
    pub a1p: Float,
    /// ξA(1)″ + A(1)′ − ψA(1), the integrand of √ξB(1) up to the 1/√ξ factor.
    pub b1_source: Float,
}

pub(crate) fn coef_jet(case: LgCase, lambda1: &Float, xi: &Float, ctx: &PrecisionContext) -> Result<CoefJet> {
    check_xi(case, xi)?;
    let s0 = xi.to_f64().sqrt();
    let wp = s_prec(s0, ctx.prec());
    let sg = case.sigma();
    let s = Float::with_val(wp, xi.sqrt_ref());
    let (c, q) = cq(case, &s);
    // c′ = −q, q′ = −2cq in both cases
    let cp = Float::with_val(wp, -&q);
    let qp = Float::with_val(wp, &c * &q) * -2i32;
    let is = Float::with_val(wp, s.recip_ref());
    let is2 = Float::with_val(wp, is.square_ref());
    let is3 = Float::with_val(wp, &is2 * &is);
    let is4 = Float::with_val(wp, is2.square_ref());
    let psi = Float::with_val(wp, &is2 - &q) / 16u32;
    // B(0) = −σ(c/s − s⁻²)/8
    let b = Float::with_val(wp, &c * &is) - &is2;
    let b0 = Float::with_val(wp, &b * -sg) / 8u32;
    let db_ds = Float::with_val(wp, &cp * &is) - Float::with_val(wp, &c * &is2) + Float::with_val(wp, &is3 * 2u32);
    let b0_s = db_ds * (-sg) / 8u32;
    // A(1) core and s-derivatives
    let d = Float::with_val(wp, &c - &is); // c − 1/s
    let dp = Float::with_val(wp, &cp + &is2);
    let dpp = Float::with_val(wp, &qp * -1i32) - Float::with_val(wp, &is3 * 2u32); // c″ = −q′
    let t = Float::with_val(wp, &is2 - Float::with_val(wp, &c * &is) / 2u32) - Float::with_val(wp, &q / 2u32);
    let tp = Float::with_val(wp, &is3 * -2i32) - Float::with_val(wp, &cp * &is) / 2u32 + Float::with_val(wp, &c * &is2) / 2u32
        - Float::with_val(wp, &qp / 2u32);
    // q″ = −2(c′q + cq′)
    let qpp = (Float::with_val(wp, &cp * &q) + Float::with_val(wp, &c * &qp)) * -2i32;
    let cpp = Float::with_val(wp, -&qp);
    let tpp = Float::with_val(wp, &is4 * 6u32) - Float::with_val(wp, &cpp * &is) / 2u32 + Float::with_val(wp, &cp * &is2)
        - Float::with_val(wp, &c * &is3)
        - Float::with_val(wp, &qpp / 2u32);
    let core = Float::with_val(wp, &t / 8u32) - Float::with_val(wp, d.square_ref()) / 128u32;
    let core_s = Float::with_val(wp, &tp / 8u32) - Float::with_val(wp, &d * &dp) / 64u32;
    let core_ss = Float::with_val(wp, &tpp / 8u32) - (Float::with_val(wp, dp.square_ref()) + Float::with_val(wp, &d * &dpp)) / 64u32;
    let lam = Float::with_val(wp, lambda1);
    let a1 = Float::with_val(wp, &core * sg) + &lam;
    let a1_s = Float::with_val(wp, &core_s * sg);
    let a1_ss = Float::with_val(wp, &core_ss * sg);
    // d/dξ = (1/2s) d/ds; ξA″ + A′ = (a_ss + a_s/s)/4
    let two_s = Float::with_val(wp, &s * 2u32);
    let b0p = Float::with_val(wp, &b0_s / &two_s);
    let a1p = Float::with_val(wp, &a1_s / &two_s);
    let b1_source = (a1_ss + Float::with_val(wp, &a1_s * &is)) / 4u32 - Float::with_val(wp, &psi * &a1);
    let out = |f: Float| Float::with_val(ctx.prec(), f);
    Ok(CoefJet { psi: out(psi), b0: out(b0), b0p: out(b0p), a1: out(a1), a1p: out(a1p), b1_source: out(b1_source) })
}

#[derive(Debug, Clone)]
pub struct LgCoefficients {
    pub a0: Float,
    pub b0: Float,
    pub a1: Float,
    /// Var of √x B(1;x) over [ξ, ξ₂] (oscillatory) or [ξ, ∞) (exponential).
    pub b1_variation_bound: f64,
}

pub fn lg_coefficients(case: LgCase, lambda1: &Float, xi: &Float, ctx: &PrecisionContext) -> Result<LgCoefficients> {
    let j = coef_jet(case, lambda1, xi, ctx)?;
    let var = b1_variation(case, lambda1, xi)?;
    Ok(LgCoefficients { a0: Float::with_val(ctx.prec(), 1), b0: j.b0, a1: j.a1, b1_variation_bound: var })
}

/// ∫ |(√x B(1;x))′| dx over the case range. The integrand has kinks where
/// it changes sign, so composite Gauss-Legendre panels are compared at two
/// refinements and the difference is added, then a 1% margin.
fn b1_variation(case: LgCase, lambda1: &Float, xi: &Float) -> Result<f64> {
    let prec = 128;
    let c = PrecisionContext::new(prec);
    let lam = Float::with_val(prec, lambda1);
    // in s = √x the integrand |(ξA″ + A′ − ψA)/√ξ| dξ becomes 2|·| ds
    let f = |s: &Float| -> Complex {
        let x = Float::with_val(prec, s.square_ref());
        match coef_jet(case, &lam, &x, &c) {
            Ok(j) => Complex::with_val(prec, j.b1_source.abs() * 2u32),
            Err(_) => Complex::with_val(prec, (0, 0)),
        }
    };
    let s0 = xi.to_f64().sqrt();
    let mut breaks: Vec<f64> = Vec::new();
    let tail;
    match case {
        LgCase::Oscillatory => {
            let end = std::f64::consts::FRAC_PI_2;
            if s0 >= end {
                return Ok(0.0);
            }
            breaks.extend((0..=32).map(|i| s0 + (end - s0) * i as f64 / 32.0));
            tail = 0.0;
        }
        LgCase::Exponential => {
            breaks.extend((0..=16).map(|i| s0 + i as f64 / 16.0));
            let mut a = s0 + 1.0;
            while a < 1e4 {
                a *= 1.25;
                breaks.push(a);
            }
            // the integrand decays like s⁻³, so the tail is about f(S)·S/2
            let last = *breaks.last().unwrap();
            tail = mp::cabs_f64(&f(&Float::with_val(prec, last))) * last;
        }
    }
    let total = |n: usize| -> f64 {
        breaks
            .windows(2)
            .map(|w| mp::cabs_f64(&gl_integrate(f, &Float::with_val(prec, w[0]), &Float::with_val(prec, w[1]), n, prec)))
            .sum()
    };
    let coarse = total(10);
    let fine = total(20);
    Ok((fine + (fine - coarse).abs() + tail) * 1.01)
}

/// Bessel pair (C₀, C₁) at z for the approximating family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Y,
    J,
    K,
}

fn bessel_pair(fam: Family, z: &Float, ctx: &PrecisionContext) -> Result<(Float, Float)> {
    Ok(match fam {
        Family::Y => (bessel_y(0, z, ctx)?, bessel_y(1, z, ctx)?),
        Family::J => (bessel_j(&Float::with_val(ctx.prec(), 0), z, ctx)?, bessel_j(&Float::with_val(ctx.prec(), 1), z, ctx)?),
        Family::K => (bessel_k(0, z, ctx)?, bessel_k(1, z, ctx)?),
    })
}

/// Partial sum Z = √ξ C₀(u√ξ) Σ_{n≤N} A(n)/u^{2n} − (ξ/u) C₁(u√ξ) Σ_{n<N} B(n)/u^{2n}
/// and its ξ-derivative (oscillatory families only for the derivative).
fn z_partial(fam: Family, case: LgCase, n_order: u32, lambda1: &Float, xi: &Float, u: &Float, ctx: &PrecisionContext) -> Result<(Float, Float)> {
    let wp = ctx.prec();
    let s = Float::with_val(wp, xi.sqrt_ref());
    let z = Float::with_val(wp, u * &s);
    let (c0, c1) = bessel_pair(fam, &z, ctx)?;
    let w = Float::with_val(wp, &s * &c0);
    let v = Float::with_val(wp, xi * &c1);
    let u2 = Float::with_val(wp, u.square_ref());
    let (sa, sap, sb, sbp) = if n_order == 0 {
        (Float::with_val(wp, 1), Float::new(wp), Float::new(wp), Float::new(wp))
    } else {
        let j = coef_jet(case, lambda1, xi, ctx)?;
        (Float::with_val(wp, &j.a1 / &u2) + 1u32, Float::with_val(wp, &j.a1p / &u2), j.b0, j.b0p)
    };
    let zv = Float::with_val(wp, &w * &sa) - Float::with_val(wp, &v * &sb) / u;
    // W′ = W/(2ξ) ∓ (u/2ξ)V, V′ = V/(2ξ) ± (u/2)W (upper sign: Y, J; lower: K)
    let sg = if fam == Family::K { -1i32 } else { 1 };
    let two_xi = Float::with_val(wp, xi * 2u32);
    let wprime = Float::with_val(wp, &w / &two_xi) - Float::with_val(wp, &v * u) / &two_xi;
    let vprime = Float::with_val(wp, &v / &two_xi) + Float::with_val(wp, &w * u) / 2u32 * sg;
    let dz = Float::with_val(wp, &wprime * &sa) + Float::with_val(wp, &w * &sap) - Float::with_val(wp, &vprime * &sb) / u
        - Float::with_val(wp, &v * &sbp) / u;
    Ok((zv, dz))
}

#[derive(Debug, Clone)]
pub struct LgConstants {
    pub c_y: Float,
    pub c_j: Float,
    pub c_k: Float,
    pub z_y_at_xi2: Float,
    pub z_y_prime_at_xi2: Float,
}

/// Connection constants for even k at order N = 1.
pub fn lg_constants(k: u32, ctx: &PrecisionContext) -> Result<LgConstants> {
    lg_constants_order(k, 1, ctx)
}

/// Constants matched to the order-N partial sums (N ∈ {0, 1}).
pub fn lg_constants_order(k: u32, n_order: u32, ctx: &PrecisionContext) -> Result<LgConstants> {
    lg_constants_with_lambda(k, n_order, &lambda1_y(ctx.prec()), ctx)
}

pub(crate) fn lg_constants_with_lambda(k: u32, n_order: u32, lambda1: &Float, ctx: &PrecisionContext) -> Result<LgConstants> {
    if k < 2 || k % 2 == 1 {
        return Err(Error::Parity(format!("connection constants need even k ≥ 2, got {k}")));
    }
    if n_order > 1 {
        return Err(Error::Domain("only N ∈ {0, 1} is implemented".into()));
    }
    let wp = ctx.prec() + 32;
    let wctx = ctx.raised(32);
    let u = Float::with_val(wp, k) - 0.5f64;
    let pi = mp::pi(wp);
    let xi2 = Float::with_val(wp, pi.square_ref()) / 4u32;
    let (zy, dzy) = z_partial(Family::Y, LgCase::Oscillatory, n_order, lambda1, &xi2, &u, &wctx)?;
    // Γ(k/2)/Γ(k/2+1/2) in log space
    let h = Float::with_val(wp, k) / 2u32;
    let lr = ln_gamma_real(&h) - ln_gamma_real(&Float::with_val(wp, &h + 0.5f64));
    let ratio = lr.exp();
    let sign = mp::neg1_pow(k as i64 / 2);
    let sqrt_pi = Float::with_val(wp, pi.sqrt_ref());
    let xi2_q = Float::with_val(wp, xi2.sqrt_ref()).sqrt();
    let c_y = Float::with_val(wp, &ratio * &sqrt_pi) * 2u32 * sign * &xi2_q / &zy;
    let pi2 = Float::with_val(wp, pi.square_ref());
    let bracket = Float::with_val(wp, &dzy - Float::with_val(wp, &zy / &pi2));
    let c_j = -(Float::with_val(wp, ratio.square_ref()) * &pi2) * bracket / &zy;
    let c_k = connection_k(k, n_order, wp)?;
    let out = |f: Float| Float::with_val(ctx.prec(), f);
    Ok(LgConstants { c_y: out(c_y), c_j: out(c_j), c_k: out(c_k), z_y_at_xi2: out(zy), z_y_prime_at_xi2: out(dzy) })
}

/// C_K = 2Γ²(k)/Γ(2k) · 2^{2k}√u/√π · [Σ_{n≤N} a_n u^{−2n} − Σ_{n<N} b_n u^{−2n−1}]⁻¹
/// with a₀ = 1, a₁ = 1/128 + λ₁ (λ₁ = 0 for the K family), b₀ = 1/8.
fn connection_k(k: u32, n_order: u32, wp: u32) -> Result<Float> {
    let kf = Float::with_val(wp, k);
    let u = Float::with_val(wp, &kf - 0.5f64);
    let lg = ln_gamma_real(&kf) * 2u32 - ln_gamma_real(&Float::with_val(wp, &kf * 2u32))
        + Float::with_val(wp, mp::log2_const(wp) * (2 * k + 1));
    let pref = lg.exp() * Float::with_val(wp, &u / mp::pi(wp)).sqrt();
    let mut br = Float::with_val(wp, 1);
    if n_order >= 1 {
        let u2 = Float::with_val(wp, u.square_ref());
        br += Float::with_val(wp, 1u32) / (u2 * 128u32);
        br -= Float::with_val(wp, u.recip_ref()) / 8u32;
    }
    Ok(pref / br)
}

/// Approximation with an error envelope.
#[derive(Debug, Clone)]
pub struct LgApprox {
    pub value: Float,
    pub error_envelope: f64,
    /// u√ξ at the evaluation point.
    pub bessel_argument: f64,
}

/// Frozen envelope constants, fitted once on the calibration grid
/// k ∈ {20, 40} × 20 points and inflated by a factor of 2.
pub const ENVELOPE_Y: [f64; 2] = [ENV_Y0, ENV_Y1];
pub const ENVELOPE_K: [f64; 2] = [ENV_K0, ENV_K1];
const ENV_Y0: f64 = 0.08;
const ENV_Y1: f64 = 0.008;
const ENV_K0: f64 = 2.0;
const ENV_K1: f64 = 0.025;

/// Amplitude of the oscillatory approximation in φ-space:
/// |C_Y| √ξ M₀(u√ξ) / (ξ^{1/4} (sin√ξ)^{1/2}) with M₀ = √(J₀²+Y₀²).
pub(crate) fn amplitude_y(xi: &Float, u: &Float, c_y: &Float, ctx: &PrecisionContext) -> Result<f64> {
    let wp = ctx.prec();
    let s = Float::with_val(wp, xi.sqrt_ref());
    let z = Float::with_val(wp, u * &s);
    let (y0, _) = bessel_pair(Family::Y, &z, ctx)?;
    let (j0, _) = bessel_pair(Family::J, &z, ctx)?;
    let m0 = (Float::with_val(wp, y0.square_ref()) + Float::with_val(wp, j0.square_ref())).sqrt();
    let xf = xi.to_f64();
    let sf = xf.sqrt();
    Ok(c_y.to_f64().abs() * sf * m0.to_f64() / (xf.powf(0.25) * sf.sin().sqrt()))
}

/// Oscillatory envelope shape without the fitted constant:
/// amplitude · √(ξ₂−ξ) / u^{2N+1}.
pub(crate) fn envelope_shape_y(xi: &Float, u: &Float, n_order: u32, c_y: &Float, ctx: &PrecisionContext) -> Result<f64> {
    let xi2 = std::f64::consts::PI.powi(2) / 4.0;
    let amp = amplitude_y(xi, u, c_y, ctx)?;
    Ok(amp * (xi2 - xi.to_f64()).max(0.0).sqrt() / u.to_f64().powi(2 * n_order as i32 + 1))
}

/// Shape of the exponential envelope in Φ-space:
/// C_K √ξ K₀(u√ξ) v_N(ξ) / (u^{2N+1} (ξ sinh²√ξ)^{1/4}),
/// v₀ = 1/8 − √ξ B(0;ξ), v₁ = min(√ξ, 1/ξ).
pub(crate) fn envelope_shape_k(xi: &Float, u: &Float, n_order: u32, c_k: &Float, ctx: &PrecisionContext) -> Result<Float> {
    let wp = ctx.prec();
    let s = Float::with_val(wp, xi.sqrt_ref());
    let z = Float::with_val(wp, u * &s);
    let (k0, _) = bessel_pair(Family::K, &z, ctx)?;
    let var = if n_order == 0 {
        let j = coef_jet(LgCase::Exponential, &Float::new(wp), xi, ctx)?;
        Float::with_val(wp, 1u32) / 8u32 - Float::with_val(wp, &s * &j.b0)
    } else {
        let a = s.clone();
        let b = Float::with_val(wp, xi.recip_ref());
        if a < b { a } else { b }
    };
    let sh = Float::with_val(wp, s.sinh_ref());
    let scale = (Float::with_val(wp, xi * sh.square()) ).sqrt().sqrt();
    let up = mp::powi(u, 2 * n_order as i32 + 1);
    Ok(Float::with_val(wp, c_k * &s) * k0 * var / up / scale)
}

fn phi_lhs_scale(xi: &Float, wp: u32) -> Float {
    let s = Float::with_val(wp, xi.sqrt_ref());
    let q = Float::with_val(wp, xi.sqrt_ref()).sqrt();
    q * s.sin().sqrt()
}

/// Raw LG value of φ_k(x), x ≤ 1/2, without the regime check.
pub(crate) fn approx_phi_raw(x: &Float, k: u32, n_order: u32, ctx: &PrecisionContext) -> Result<(Float, Float, LgConstants)> {
    let wp = ctx.prec() + 32;
    let wctx = ctx.raised(32);
    let t = lg_transform(LgCase::Oscillatory, &Float::with_val(wp, x), &wctx)?;
    let u = Float::with_val(wp, k) - 0.5f64;
    let lam = lambda1_y(wp);
    let consts = lg_constants_order(k, n_order, &wctx)?;
    let (zy, _) = z_partial(Family::Y, LgCase::Oscillatory, n_order, &lam, &t.xi, &u, &wctx)?;
    let (zj, _) = z_partial(Family::J, LgCase::Oscillatory, n_order, &Float::new(wp), &t.xi, &u, &wctx)?;
    let num = Float::with_val(wp, &consts.c_y * &zy) + Float::with_val(wp, &consts.c_j * &zj);
    let v = num / phi_lhs_scale(&t.xi, wp);
    Ok((Float::with_val(ctx.prec(), v), t.xi, consts))
}

/// LG approximation of φ_k(x) of order N ∈ {0, 1}; x > 1/2 is reflected.
pub fn lg_approx_phi(x: &Float, k: u32, n_order: u32, ctx: &PrecisionContext) -> Result<LgApprox> {
    if !(x > &0 && x < &1) {
        return Err(Error::Domain(format!("x = {} outside (0, 1)", x.to_f64())));
    }
    if k % 2 == 1 || k < 2 {
        return Err(Error::Parity(format!("φ_k approximation needs even k, got {k}")));
    }
    if n_order > 1 {
        return Err(Error::Domain("only N ∈ {0, 1} is implemented".into()));
    }
    let xe = if x > &0.5f64 { Float::with_val(x.prec(), 1u32 - x) } else { x.clone() };
    let t = lg_transform(LgCase::Oscillatory, &xe, ctx)?;
    let uf = k as f64 - 0.5;
    let arg = uf * t.xi.to_f64().sqrt();
    if arg < 1.0 {
        return Err(Error::Regime(format!("u√ξ = {arg:.3} < 1")));
    }
    let (v, xi, consts) = approx_phi_raw(&xe, k, n_order, ctx)?;
    let u = Float::with_val(ctx.prec(), uf);
    // the closed C_Y, C_J formulas neglect a coupling of size |C_J|·|Z_J|
    let coupling = consts.c_j.to_f64().abs() * amplitude_y(&xi, &u, &consts.c_y, ctx)? / consts.c_y.to_f64().abs();
    let env = ENVELOPE_Y[n_order as usize] * envelope_shape_y(&xi, &u, n_order, &consts.c_y, ctx)? + coupling;
    Ok(LgApprox { value: v, error_envelope: env, bessel_argument: arg })
}

/// φ_k(x) by the LG formula where u√ξ ≥ 1 and by the exact series otherwise.
pub fn phi_k_uniform(x: &Float, k: u32, ctx: &PrecisionContext) -> Result<Float> {
    match lg_approx_phi(x, k, 1, ctx) {
        Ok(a) => Ok(a.value),
        Err(Error::Regime(_)) => Ok(phi_k(x, k, ctx)?.re()),
        Err(e) => Err(e),
    }
}

pub(crate) fn approx_big_phi_raw(x: &Float, k: u32, n_order: u32, ctx: &PrecisionContext) -> Result<(Float, Float, Float)> {
    let wp = ctx.prec() + 32;
    let wctx = ctx.raised(32);
    let t = lg_transform(LgCase::Exponential, &Float::with_val(wp, x), &wctx)?;
    let u = Float::with_val(wp, k) - 0.5f64;
    let (zk, _) = z_partial(Family::K, LgCase::Exponential, n_order, &Float::new(wp), &t.xi, &u, &wctx)?;
    let c_k = connection_k(k, n_order, wp)?;
    let s = Float::with_val(wp, t.xi.sqrt_ref());
    let sh = s.sinh();
    let scale = (Float::with_val(wp, &t.xi * sh.square())).sqrt().sqrt();
    let v = Float::with_val(wp, &c_k * &zk) / scale;
    Ok((Float::with_val(ctx.prec(), v), t.xi, Float::with_val(ctx.prec(), c_k)))
}

/// LG approximation of Φ_k(x) of order N ∈ {0, 1}.
pub fn lg_approx_big_phi(x: &Float, k: u32, n_order: u32, ctx: &PrecisionContext) -> Result<LgApprox> {
    if !(x > &0 && x < &1) {
        return Err(Error::Domain(format!("x = {} outside (0, 1)", x.to_f64())));
    }
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    if n_order > 1 {
        return Err(Error::Domain("only N ∈ {0, 1} is implemented".into()));
    }
    let (v, xi, c_k) = approx_big_phi_raw(x, k, n_order, ctx)?;
    let u = Float::with_val(ctx.prec(), k as f64 - 0.5);
    let env = envelope_shape_k(&xi, &u, n_order, &c_k, ctx)? * ENVELOPE_K[n_order as usize];
    let arg = u.to_f64() * xi.to_f64().sqrt();
    Ok(LgApprox { value: v, error_envelope: env.to_f64(), bessel_argument: arg })
}

/// |approx − exact| divided by the amplitude scale: the Y/J modulus form in
/// the oscillatory case, |Φ_k| in the exponential case.
pub fn lg_scaled_error(case: LgCase, n_order: u32, k: u32, x: &Float, ctx: &PrecisionContext) -> Result<f64> {
    match case {
        LgCase::Oscillatory => {
            let xe = if x > &0.5f64 { Float::with_val(x.prec(), 1u32 - x) } else { x.clone() };
            let (v, xi, consts) = approx_phi_raw(&xe, k, n_order, ctx)?;
            let exact = phi_k(&xe, k, ctx)?.re();
            let u = Float::with_val(ctx.prec(), k as f64 - 0.5);
            let amp = amplitude_y(&xi, &u, &consts.c_y, ctx)?;
            Ok(Float::with_val(ctx.prec(), &v - &exact).abs().to_f64() / amp)
        }
        LgCase::Exponential => {
            let (v, _, _) = approx_big_phi_raw(x, k, n_order, ctx)?;
            let exact = big_phi_k_central(x, k, ctx)?.re();
            Ok((Float::with_val(ctx.prec(), &v - &exact) / &exact).abs().to_f64())
        }
    }
}

/// Error level near x. In the oscillatory case the scaled error carries the
/// Bessel phase, so it is maximised over one period √ξ ± π/u (9 points).
pub fn lg_error_level(case: LgCase, n_order: u32, k: u32, x: &Float, ctx: &PrecisionContext) -> Result<f64> {
    if case == LgCase::Exponential {
        return lg_scaled_error(case, n_order, k, x, ctx);
    }
    let xe = if x > &0.5f64 { Float::with_val(x.prec(), 1u32 - x) } else { x.clone() };
    let s0 = lg_transform(case, &xe, ctx)?.xi.to_f64().sqrt();
    let u = k as f64 - 0.5;
    let half = std::f64::consts::PI / u;
    let smax = std::f64::consts::PI / 2.0 - 1e-9;
    let mut worst = 0f64;
    for i in 0..9 {
        let s = (s0 - half + 2.0 * half * i as f64 / 8.0).clamp(1.0 / u, smax);
        let xi = Float::with_val(ctx.prec(), s * s);
        let x = lg_inverse(case, &xi, ctx)?;
        worst = worst.max(lg_scaled_error(case, n_order, k, &x, ctx)?);
    }
    Ok(worst)
}

/// Least-squares slope of log(error level) against log u over `k_list`.
pub fn error_order_fit(case: LgCase, n_order: u32, k_list: &[u32], x: &Float, ctx: &PrecisionContext) -> Result<f64> {
    if k_list.len() < 3 {
        return Err(Error::InsufficientPoints(format!("{} weights given, need at least 3", k_list.len())));
    }
    let mut pts = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let e = lg_error_level(case, n_order, k, x, ctx)?;
        pts.push(((k as f64 - 0.5).ln(), e.max(1e-300).ln()));
    }
    Ok(ls_slope(&pts))
}

/// Largest observed |approx − exact| / envelope shape over a grid; the
/// frozen envelope constants are this value times a safety factor.
pub fn calibrate_envelope(case: LgCase, n_order: u32, ks: &[u32], xs: &[f64], ctx: &PrecisionContext) -> Result<f64> {
    let mut worst = 0f64;
    for &k in ks {
        let u = Float::with_val(ctx.prec(), k as f64 - 0.5);
        for &x in xs {
            let xf = ctx.f(x);
            let ratio = match case {
                LgCase::Oscillatory => {
                    let xe = if x > 0.5 { ctx.f(1.0 - x) } else { xf.clone() };
                    let (v, xi, consts) = approx_phi_raw(&xe, k, n_order, ctx)?;
                    let exact = phi_k(&xe, k, ctx)?.re();
                    let shape = envelope_shape_y(&xi, &u, n_order, &consts.c_y, ctx)?;
                    Float::with_val(ctx.prec(), &v - &exact).abs().to_f64() / shape
                }
                LgCase::Exponential => {
                    let (v, xi, c_k) = approx_big_phi_raw(&xf, k, n_order, ctx)?;
                    let exact = big_phi_k_central(&xf, k, ctx)?.re();
                    let shape = envelope_shape_k(&xi, &u, n_order, &c_k, ctx)?;
                    (Float::with_val(ctx.prec(), &v - &exact).abs() / shape).to_f64()
                }
            };
            worst = worst.max(ratio);
        }
    }
    Ok(worst)
}

/// The calibration grid: 20 midpoints of (0, 1).
pub fn calibration_grid() -> Vec<f64> {
    (0..20).map(|i| (i as f64 + 0.5) / 20.0).collect()
}

/// Least-squares slope of log|C_J| against log k over `ks`.
pub fn cj_decay_exponent(ks: &[u32], ctx: &PrecisionContext) -> Result<f64> {
    cj_decay_exponent_with(ks, &lambda1_y(ctx.prec()), ctx)
}

pub(crate) fn cj_decay_exponent_with(ks: &[u32], lambda1: &Float, ctx: &PrecisionContext) -> Result<f64> {
    if ks.len() < 3 {
        return Err(Error::InsufficientPoints(format!("{} weights given, need at least 3", ks.len())));
    }
    let mut pts = Vec::with_capacity(ks.len());
    for &k in ks {
        let cj = lg_constants_with_lambda(k, 1, lambda1, ctx)?.c_j.to_f64().abs();
        pts.push(((k as f64).ln(), cj.ln()));
    }
    Ok(ls_slope(&pts))
}

pub(crate) fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
