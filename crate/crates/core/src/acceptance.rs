//! The acceptance suite: one pass/fail verdict per numbered criterion.
//!
//! Each check returns its verdict together with a one-line detail of the
//! measured quantity against its threshold.

use std::time::Instant;

use rug::{Complex, Float, Rational};
use serde::Serialize;

use crate::error::Result;
use crate::kernels::{ode_residual, phi_k, phi_k_series, OdeForm};
use crate::lgreen::{cj_decay_exponent, error_order_fit, lg_constants, LgCase};
use crate::modforms::{central_value, delta_series, form_space, form_spaces, l_value, petersson_residual, AfeConfig};
use crate::moments::{
    averaged_moments, error_term_bounds, first_moment_envelope, first_moment_exact, main_term_scaled_residual,
    nonvanishing_report, oracle_budget, oracle_moment, second_moment_exact, second_moment_exact_uv, second_moment_grid,
    MollifierConfig, TestWeight, ERROR_CONSTANTS, ERROR_L_GRID, VERIFICATION_WEIGHTS,
};
use crate::mp::{self, PrecisionContext};
use crate::specialfn::estermann::{estermann_d, estermann_functional_rhs};
use crate::specialfn::gamma::ln_gamma_real;
use crate::specialfn::hyper::gauss_2f1_rational;
use crate::specialfn::mellin::{mellin_kernel_check, BesselKernelKind};

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub duration_ms: u128,
    /// Set when the threshold cannot be met at any feasible truncation.
    pub known_infeasible: Option<&'static str>,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!("[{verdict}] {:>3}  {}: {}", self.id, self.title, self.detail);
        if let (false, Some(why)) = (self.passed, self.known_infeasible) {
            s.push_str(&format!(" (known infeasible: {why})"));
        }
        s
    }
}

type Check = fn(&PrecisionContext) -> Result<(bool, String)>;

pub struct Criterion {
    pub id: &'static str,
    pub title: &'static str,
    pub check: Check,
    pub known_infeasible: Option<&'static str>,
}

pub const CRITERIA: &[Criterion] = &[
    Criterion { id: "1", title: "second-moment oracle equality", check: c1, known_infeasible: None },
    Criterion { id: "2", title: "odd-k vanishing", check: c2, known_infeasible: None },
    Criterion { id: "3", title: "first-moment exact formula", check: c3, known_infeasible: None },
    Criterion { id: "4", title: "first-moment asymptotic at weight 80", check: c4, known_infeasible: None },
    Criterion { id: "5", title: "Petersson residual", check: c5, known_infeasible: None },
    Criterion { id: "6", title: "phi_k identities", check: c6, known_infeasible: None },
    Criterion { id: "7", title: "ODE residuals", check: c7, known_infeasible: None },
    Criterion { id: "8", title: "Liouville-Green error orders and constants", check: c8, known_infeasible: None },
    Criterion { id: "9", title: "asymptotic second moment", check: c9, known_infeasible: None },
    Criterion { id: "10", title: "averaged moments", check: c10, known_infeasible: None },
    Criterion { id: "11", title: "mollified non-vanishing", check: c11, known_infeasible: None },
    Criterion { id: "12", title: "Estermann functional equation", check: c12, known_infeasible: None },
    Criterion { id: "13", title: "Mellin kernel identities", check: c13, known_infeasible: None },
    Criterion { id: "14a", title: "AFE split invariance", check: c14a, known_infeasible: None },
    Criterion {
        id: "14b",
        title: "AFE L(2) against the direct Dirichlet series",
        check: c14b,
        known_infeasible: Some("the series at s = 2 has tail ~ log N/N, so 1e-20 needs N ~ 1e22 terms"),
    },
    Criterion { id: "15", title: "general-shift convolution identity", check: c15, known_infeasible: None },
];

pub fn find(id: &str) -> Option<&'static Criterion> {
    CRITERIA.iter().find(|c| c.id == id)
}

pub fn run(c: &Criterion, ctx: &PrecisionContext) -> CriterionResult {
    let start = Instant::now();
    let (passed, detail) = match (c.check)(ctx) {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionResult {
        id: c.id,
        title: c.title,
        passed,
        detail,
        duration_ms: start.elapsed().as_millis(),
        known_infeasible: c.known_infeasible,
    }
}

pub fn run_all(ctx: &PrecisionContext) -> Vec<CriterionResult> {
    CRITERIA.iter().map(|c| run(c, ctx)).collect()
}

fn c1(ctx: &PrecisionContext) -> Result<(bool, String)> {
    let mut pts = Vec::new();
    for w in [12u32, 16, 20, 24, 28] {
        for l in 1..=5u64 {
            pts.push((l, w));
        }
    }
    let reps = second_moment_grid(&pts, ctx)?;
    let worst = reps.iter().map(|r| r.residual).fold(0.0, f64::max);
    let ok = reps.iter().all(|r| r.residual <= 1e-20 && r.within_budget());
    let over = reps.iter().filter(|r| !r.within_budget()).count();
    Ok((ok, format!("max residual {worst:.3e} over {} pairs (≤ 1e-20), {over} over budget", reps.len())))
}

fn c2(ctx: &PrecisionContext) -> Result<(bool, String)> {
    let mut ok = true;
    for w in [18u32, 22, 26] {
        for l in 1..=3u64 {
            let r = second_moment_exact(l, w, ctx)?;
            ok &= r.exact.is_zero() && r.oracle.is_zero();
        }
    }
    Ok((ok, "weights 18, 22, 26 with l ≤ 3: exact and oracle both exactly 0".into()))
}

fn c3(ctx: &PrecisionContext) -> Result<(bool, String)> {
    let z = Complex::new(ctx.prec());
    form_spaces(&[12, 16, 20], ctx)?;
    let res: Vec<Result<f64>> = std::thread::scope(|sc| {
        let mut hs = Vec::new();
        for w in [12u32, 16, 20] {
            for l in 1..=3u64 {
                let z = &z;
                hs.push(sc.spawn(move || first_moment_exact(l, w, z, z, ctx).map(|r| r.residual)));
            }
        }
        hs.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut worst = 0.0f64;
    for r in res {
        worst = worst.max(r?);
    }
    Ok((worst <= 1e-10, format!("max residual {worst:.3e} (≤ 1e-10)")))
}

fn c4(ctx: &PrecisionContext) -> Result<(bool, String)> {
    let space = form_space(80, ctx)?;
    let (m, _) = oracle_moment(&space, 1, 1, ctx)?;
    let dev = Float::with_val(ctx.prec(), m - 2u32).abs().to_f64();
    let env = 10.0 * first_moment_envelope(1, 40);
    Ok((dev <= env, format!("|Σ ω L − 2| = {dev:.3e} (≤ 10·(2πe/40)^40 = {env:.3e}), dim {}", space.dim)))
}

fn c5(ctx: &PrecisionContext) -> Result<(bool, String)> {
    let weights = [12u32, 16, 18, 20, 22, 24, 26, 28];
    let spaces = form_spaces(&weights, ctx)?;
    let mut ok = true;
    let mut worst_res = 0.0f64;
    let mut worst_tail = 0.0f64;
    for sp in &spaces {
        for m in 1..=4u64 {
            for n in 1..=4u64 {
                let chk = petersson_residual(&sp.forms, m, n, 200, ctx)?;
                let mag: f64 = sp.forms.iter().map(|f| Float::with_val(64, &f.lambda[m as usize] * &f.lambda[n as usize]).abs().to_f64()).sum();
                ok &= chk.residual <= chk.tail_bound + oracle_budget(sp, mag) && chk.tail_bound <= 1e-15;
                worst_res = worst_res.max(chk.residual);
                worst_tail = worst_tail.max(chk.tail_bound);
            }
        }
    }
    Ok((ok, format!("max residual {worst_res:.3e} within tail plus ω budget, max certified tail {worst_tail:.3e} (≤ 1e-15) at c_max = 200")))
}

fn c6(ctx: &PrecisionContext) -> Result<(bool, String)> {
    let prec = ctx.prec();
    let mut fe = 0.0f64;
    for k in [2u32, 4, 6, 12] {
        for i in 1..=19 {
            let x = Float::with_val(prec, i) / 20u32;
            let x1 = Float::with_val(prec, 1u32 - &x);
            let a = phi_k_series(&x, k, ctx)?.value;
            let b = phi_k_series(&x1, k, ctx)?.value;
            let d = Float::with_val(prec, a - b * mp::neg1_pow(k as i64)).abs().to_f64();
            fe = fe.max(d);
        }
    }
    let fe_ok = fe <= 2f64.powi(-240);
    let mut half = 0.0f64;
    for k in [2u32, 4, 6, 12, 20] {
        let h = Float::with_val(prec, 0.5);
        let v = phi_k(&h, k, ctx)?.re();
        let kh = Float::with_val(prec, k) / 2u32;
        let r = (ln_gamma_real(&kh) - ln_gamma_real(&Float::with_val(prec, &kh + 0.5f64))).exp();
        let want = r * Float::with_val(prec, mp::pi(prec).sqrt_ref()) * (2 * mp::neg1_pow(k as i64 / 2));
        half = half.max((Float::with_val(prec, &v - &want) / &want).abs().to_f64());
    }
    let half_ok = half <= 2f64.powi(-(prec as i32) + 24);
    let mut zero_ok = true;
    for k in (2..=40i64).step_by(2) {
        let v = gauss_2f1_rational(&Rational::from(k), &Rational::from(1 - k), &Rational::from(1), &Rational::from((1, 2)))?;
        zero_ok &= v == 0;
    }
    Ok((
        fe_ok && half_ok && zero_ok,
        format!("functional eq. sup {fe:.3e} (≤ 2^-240), φ_k(1/2) rel. {half:.3e}, 2F1(k,1−k;1;1/2) = 0 for even k ≤ 40: {zero_ok}"),
    ))
}

fn c7(ctx: &PrecisionContext) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (form, xs) in [
        (OdeForm::Phi, [0.1, 0.3, 0.5, 0.7, 0.9]),
        (OdeForm::YForm, [0.1, 0.25, 0.5, 0.75, 0.9]),
        (OdeForm::PhiForm, [0.1, 0.3, 0.5, 0.7, 0.9]),
    ] {
        for k in [6u32, 12, 20] {
            for x in xs {
                worst = worst.max(ode_residual(form, &ctx.f(x), k, ctx)?);
            }
        }
    }
    Ok((worst <= 1e-60, format!("max relative residual {worst:.3e} (≤ 1e-60)")))
}

fn c8(_ctx: &PrecisionContext) -> Result<(bool, String)> {
    let c = PrecisionContext::new(192);
    let ks = [20u32, 40, 80, 160];
    let x = c.f(0.3);
    let s_osc1 = error_order_fit(LgCase::Oscillatory, 1, &ks, &x, &c)?;
    let s_exp1 = error_order_fit(LgCase::Exponential, 1, &ks, &x, &c)?;
    let s_osc0 = error_order_fit(LgCase::Oscillatory, 0, &ks, &x, &c)?;
    let slopes_ok = (s_osc1 + 3.0).abs() <= 0.3 && (s_exp1 + 3.0).abs() <= 0.3 && (s_osc0 + 1.0).abs() <= 0.3;
    // |C_K − 4| ≤ C/k: fit on the first set, verify on the second
    let mut fit = 0.0f64;
    for k in [12u32, 20, 28, 36, 44] {
        fit = fit.max((lg_constants(k, &c)?.c_k.to_f64() - 4.0).abs() * k as f64);
    }
    let cfit = 2.0 * fit;
    let mut ck_ok = true;
    for k in [52u32, 64, 80, 96, 128] {
        ck_ok &= (lg_constants(k, &c)?.c_k.to_f64() - 4.0).abs() <= cfit / k as f64;
    }
    let cj = cj_decay_exponent(&[12, 24, 36, 48, 60, 72, 84, 96], &c)?;
    Ok((
        slopes_ok && ck_ok && cj <= -4.5,
        format!(
            "slopes osc N=1 {s_osc1:.3}, exp N=1 {s_exp1:.3}, osc N=0 {s_osc0:.3}; |C_K − 4|·k ≤ {cfit:.3e} verified: {ck_ok}; C_J exponent {cj:.3}"
        ),
    ))
}

fn c9(ctx: &PrecisionContext) -> Result<(bool, String)> {
    let weights: Vec<u32> = (12..=48).step_by(4).collect();
    let vals: Vec<Result<f64>> = std::thread::scope(|sc| {
        let hs: Vec<_> = weights.iter().map(|&w| sc.spawn(move || main_term_scaled_residual(w, ctx))).collect();
        hs.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut worst = 0.0f64;
    for v in vals {
        worst = worst.max(v?);
    }
    let mut env_ok = true;
    for &w in &VERIFICATION_WEIGHTS {
        for &l in &ERROR_L_GRID {
            let b = error_term_bounds(l, w, ctx)?;
            env_ok &= b.big_phi_observed <= b.big_phi_bound && b.phi_observed <= b.phi_bound;
        }
    }
    let c = ERROR_CONSTANTS.main_c;
    Ok((
        worst <= c && env_ok,
        format!("max |exact − main|·√k {worst:.4} (≤ frozen {c:.4}) over weights 12..48; Φ/φ envelopes hold on weights 32..48: {env_ok}"),
    ))
}

fn c10(ctx: &PrecisionContext) -> Result<(bool, String)> {
    let h = TestWeight::default();
    let a = averaged_moments(1, 32.0, &h, ctx)?;
    let b = averaged_moments(2, 32.0, &h, ctx)?;
    let rel = |x: &Float, y: &Float| (Float::with_val(ctx.prec(), x - y) / y).abs().to_f64();
    let r1 = rel(&a.a1_direct, &a.a1_predicted);
    let r2a = rel(&a.a2_direct, &a.a2_predicted);
    let r2b = rel(&b.a2_direct, &b.a2_predicted);
    let p2a = rel(&a.a2_direct, &a.a2_predicted_printed);
    let p2b = rel(&b.a2_direct, &b.a2_predicted_printed);
    Ok((
        r1 <= 0.10 && r2a <= 0.25 && r2b <= 0.25,
        format!(
            "A1 rel. {r1:.4} (≤ 0.10); A2 rel. {r2a:.4}, {r2b:.4} at l = 1, 2 (≤ 0.25, −2 log 4π constant; with −2 log 8π: {p2a:.4}, {p2b:.4})"
        ),
    ))
}

fn c11(ctx: &PrecisionContext) -> Result<(bool, String)> {
    let cfg = MollifierConfig::new(0.2)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for w in [12u32, 16, 20, 24, 28] {
        let r = nonvanishing_report(w, &cfg, ctx)?;
        ok &= r.lower_bound > 0.0 && r.lower_bound <= 1.0 && r.lower_bound <= r.proportion_observed && r.proportion_observed >= 0.19;
        parts.push(format!("{w}: {:.3}/{:.3}", r.lower_bound, r.proportion_observed));
    }
    Ok((ok, format!("lower bound/observed {}", parts.join(", "))))
}

fn c12(_ctx: &PrecisionContext) -> Result<(bool, String)> {
    let c = PrecisionContext::new(256);
    let s = c.c(-0.5, 0.0);
    let v = c.c(0.0, 0.7);
    let lhs = estermann_d(&s, &v, 2, 5, &c)?;
    let rhs = estermann_functional_rhs(&s, &v, 2, 5, &c)?;
    let d = mp::cabs_f64(&Complex::with_val(256, lhs - rhs));
    Ok((d <= 1e-18, format!("residual {d:.3e} (≤ 1e-18)")))
}

fn c13(_ctx: &PrecisionContext) -> Result<(bool, String)> {
    let c = PrecisionContext::new(128);
    let mut worst = 0.0f64;
    for (kind, w, v) in [
        (BesselKernelKind::K0, c.c(0.8, 0.0), c.c(0.0, 0.3)),
        (BesselKernelKind::K0, c.c(1.2, 0.5), c.c(0.0, 0.1)),
        (BesselKernelKind::K0, c.c(0.5, -0.4), c.c(0.0, 0.25)),
        (BesselKernelKind::K1, c.c(1.2, 0.0), c.c(0.0, 0.3)),
        (BesselKernelKind::K1, c.c(2.5, 1.0), c.c(0.0, 0.45)),
        (BesselKernelKind::K1, c.c(0.7, 0.0), c.c(0.0, 0.2)),
    ] {
        worst = worst.max(mellin_kernel_check(kind, &w, &v, &c)?.relative_error());
    }
    Ok((worst <= 1e-10, format!("max relative error {worst:.3e} over six points (≤ 1e-10)")))
}

fn c14a(ctx: &PrecisionContext) -> Result<(bool, String)> {
    let space = form_space(12, ctx)?;
    let f = &space.forms[0];
    let base = central_value(f, &AfeConfig::for_context(ctx).with_split(1.0), ctx)?;
    let mut worst = 0.0f64;
    for x in [0.8, 1.25] {
        let v = central_value(f, &AfeConfig::for_context(ctx).with_split(x), ctx)?;
        worst = worst.max(Float::with_val(ctx.prec(), v - &base).abs().to_f64());
    }
    Ok((worst <= 1e-25, format!("max spread {worst:.3e} over X ∈ {{0.8, 1, 1.25}} (≤ 1e-25)")))
}

/// Terms of the direct Dirichlet series used by criterion 14b.
pub const DIRICHLET_TERMS: usize = 3000;

fn c14b(ctx: &PrecisionContext) -> Result<(bool, String)> {
    let prec = ctx.prec();
    let space = form_space(12, ctx)?;
    let s = Complex::with_val(prec, (2, 0));
    let afe = l_value(&space.forms[0], &s, &AfeConfig::for_context(ctx), ctx)?;
    let tau = delta_series(DIRICHLET_TERMS);
    let mut direct = Float::new(prec);
    for (n, t) in tau.iter().enumerate().skip(1) {
        let nf = Float::with_val(prec, n);
        let scale = mp::rpow(&nf, &Complex::with_val(prec, (7.5, 0)));
        direct += Float::with_val(prec, t) / Float::with_val(prec, scale.real());
    }
    let d = Float::with_val(prec, afe.real() - &direct).abs().to_f64();
    Ok((d <= 1e-20, format!("|AFE − Σ_{{n≤{DIRICHLET_TERMS}}} λ(n)n^-2| = {d:.3e} (≤ 1e-20)")))
}

fn c15(ctx: &PrecisionContext) -> Result<(bool, String)> {
    let u = Complex::with_val(ctx.prec(), (0.1, 0));
    let v = Complex::with_val(ctx.prec(), (0, 0.2));
    let r = second_moment_exact_uv(1, 12, &u, &v, ctx)?;
    Ok((r.residual <= 1e-10, format!("residual {:.3e} (≤ 1e-10), certified tail {:.3e}", r.residual, r.certified_tail)))
}
