//! Level-1 holomorphic cusp forms: Miller basis, Hecke eigenforms, harmonic
//! weights from the Petersson formula, and L-values from an incomplete-gamma
//! approximate functional equation.
//!
//! Normalisation: weight w = 2k, f = Σ λ_f(n) n^{(w−1)/2} e(nz),
//! L_f(s) = Σ λ_f(n) n^{−s}, Λ_f(s) = (2π)^{−s} Γ(s + (w−1)/2) L_f(s) = (−1)^k Λ_f(1−s).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::ops::Pow;
use rug::{Complex, Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::arith::{divisors, gcd, mod_inverse, tau0, tau0_power_constant};
use crate::error::{Error, Result};
use crate::linalg::{condition_number, least_squares, Matrix};
use crate::mp::{self, PrecisionContext};
use crate::specialfn::bessel::bessel_j;
use crate::specialfn::gamma::{ln_gamma, ln_gamma_real};
use crate::specialfn::incgamma::incomplete_gamma_upper;

/// q-expansion with exact integer coefficients; `coeffs[n]` is a(n), n = 0..=n_max.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QExpansion {
    pub weight: u32,
    pub coeffs: Vec<Integer>,
}

impl QExpansion {
    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn a(&self, n: usize) -> &Integer {
        &self.coeffs[n]
    }
}

/// dim S_w(SL₂(Z)).
pub fn cusp_dimension(weight: u32) -> usize {
    if weight % 2 == 1 || weight < 12 {
        return 0;
    }
    let q = (weight / 12) as usize;
    if weight % 12 == 2 {
        q - 1
    } else {
        q
    }
}

fn divisor_power_sum(n: u64, p: u32) -> Integer {
    divisors(n).into_iter().map(|d| Integer::from(d).pow(p)).sum()
}

fn eisenstein(weight: u32, n_max: usize) -> Vec<Integer> {
    let (c, p): (i64, u32) = match weight {
        4 => (240, 3),
        6 => (-504, 5),
        _ => unreachable!("only E4 and E6 are needed"),
    };
    let mut e = vec![Integer::new(); n_max + 1];
    e[0] = Integer::from(1);
    for (n, en) in e.iter_mut().enumerate().skip(1) {
        *en = divisor_power_sum(n as u64, p) * c;
    }
    e
}

fn mul_series(a: &[Integer], b: &[Integer], n_max: usize) -> Vec<Integer> {
    let mut c = vec![Integer::new(); n_max + 1];
    for (i, ai) in a.iter().enumerate().take(n_max + 1) {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(n_max + 1 - i) {
            c[i + j] += Integer::from(ai * bj);
        }
    }
    c
}

fn series_pow(a: &[Integer], e: u32, n_max: usize) -> Vec<Integer> {
    let mut r = vec![Integer::new(); n_max + 1];
    r[0] = Integer::from(1);
    for _ in 0..e {
        r = mul_series(&r, a, n_max);
    }
    r
}

/// Δ = (E₄³ − E₆²)/1728.
pub fn delta_series(n_max: usize) -> Vec<Integer> {
    let e4 = eisenstein(4, n_max);
    let e6 = eisenstein(6, n_max);
    let a = series_pow(&e4, 3, n_max);
    let b = series_pow(&e6, 2, n_max);
    a.into_iter().zip(b).map(|(x, y)| (x - y).div_exact(&Integer::from(1728))).collect()
}

/// Echelonised integral basis f_i = q^i + O(q^{d+1}) from Δ^j E₄^α E₆^β.
pub fn miller_basis(weight: u32, n_max: usize) -> Result<Vec<QExpansion>> {
    if weight % 2 == 1 {
        return Err(Error::Parity(format!("cusp forms of level 1 have even weight, got {weight}")));
    }
    let d = cusp_dimension(weight);
    if d == 0 {
        return Ok(Vec::new());
    }
    if n_max < d {
        return Err(Error::Domain(format!("n_max = {n_max} below the dimension {d}")));
    }
    let delta = delta_series(n_max);
    let e4 = eisenstein(4, n_max);
    let e6 = eisenstein(6, n_max);
    let mut gens: Vec<Vec<Integer>> = Vec::with_capacity(d);
    let mut dpow = delta.clone();
    for j in 1..=d {
        let r = weight - 12 * j as u32;
        let (alpha, beta) = if r.is_multiple_of(4) { (r / 4, 0) } else { ((r - 6) / 4, 1) };
        let mut g = mul_series(&dpow, &series_pow(&e4, alpha, n_max), n_max);
        if beta == 1 {
            g = mul_series(&g, &e6, n_max);
        }
        gens.push(g);
        dpow = mul_series(&dpow, &delta, n_max);
    }
    for j in (0..d).rev() {
        for i in j + 1..d {
            let f = gens[j][i + 1].clone();
            if f.is_zero() {
                continue;
            }
            let (head, tail) = gens.split_at_mut(i);
            for (x, y) in head[j].iter_mut().zip(tail[0].iter()) {
                *x -= Integer::from(&f * y);
            }
        }
    }
    Ok(gens.into_iter().map(|coeffs| QExpansion { weight, coeffs }).collect())
}

/// Matrix of T_p on the echelon basis: T_p f_i = Σ_j M[i][j] f_j.
pub fn hecke_matrix(basis: &[QExpansion], p: u64) -> Result<Vec<Vec<Integer>>> {
    let d = basis.len();
    if d == 0 {
        return Ok(Vec::new());
    }
    let w = basis[0].weight;
    if basis[0].n_max() < p as usize * d {
        return Err(Error::Domain(format!("n_max must be at least {} for T_{p}", p as usize * d)));
    }
    let pw = Integer::from(p).pow(w - 1);
    Ok(basis
        .iter()
        .map(|f| {
            (1..=d)
                .map(|n| {
                    let mut b = f.a(p as usize * n).clone();
                    if (n as u64).is_multiple_of(p) {
                        b += Integer::from(&pw * f.a(n / p as usize));
                    }
                    b
                })
                .collect()
        })
        .collect())
}

/// Characteristic polynomial det(xI − M), coefficients low to high, by
/// Faddeev–LeVerrier in exact integers.
pub fn char_poly(m: &[Vec<Integer>]) -> Vec<Integer> {
    let n = m.len();
    let mut coef = vec![Integer::new(); n + 1];
    coef[n] = Integer::from(1);
    let mut mk = vec![vec![Integer::new(); n]; n];
    for k in 1..=n {
        // M_k = A·M_{k−1} + c_{n−k+1} I
        let mut next = vec![vec![Integer::new(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = Integer::new();
                for t in 0..n {
                    s += Integer::from(&m[i][t] * &mk[t][j]);
                }
                next[i][j] = s;
            }
            next[i][i] += &coef[n - k + 1];
        }
        mk = next;
        let mut tr = Integer::new();
        for i in 0..n {
            for t in 0..n {
                tr += Integer::from(&m[i][t] * &mk[t][i]);
            }
        }
        coef[n - k] = -(tr.div_exact(&Integer::from(k as u64)));
    }
    coef
}

type Poly = Vec<Rational>;

fn trim(mut p: Poly) -> Poly {
    while p.len() > 1 && p.last().is_some_and(|c| *c == 0) {
        p.pop();
    }
    p
}

fn poly_rem(a: &Poly, b: &Poly) -> Poly {
    let mut r = a.clone();
    let db = b.len() - 1;
    let lead = b[db].clone();
    while r.len() > db && !(r.len() == 1 && r[0] == 0) {
        let dr = r.len() - 1;
        let f = Rational::from(&r[dr] / &lead);
        for i in 0..=db {
            let t = Rational::from(&f * &b[i]);
            r[dr - db + i] -= t;
        }
        r.pop();
        r = trim(r);
        if r.len() <= db {
            break;
        }
    }
    trim(r)
}

fn poly_eval(p: &Poly, x: &Rational) -> Rational {
    let mut acc = Rational::new();
    for c in p.iter().rev() {
        acc = Rational::from(&acc * x) + c;
    }
    acc
}

fn sturm_chain(p: &Poly) -> Vec<Poly> {
    let dp: Poly = trim(p.iter().enumerate().skip(1).map(|(i, c)| Rational::from(c * i as u64)).collect());
    let mut chain = vec![p.clone(), dp];
    loop {
        let n = chain.len();
        if chain[n - 1].len() == 1 && chain[n - 1][0] == 0 {
            chain.pop();
            break;
        }
        if chain[n - 1].len() == 1 {
            break;
        }
        let r = poly_rem(&chain[n - 2], &chain[n - 1]);
        let neg: Poly = r.into_iter().map(|c| -c).collect();
        chain.push(neg);
    }
    chain
}

fn sign_changes(chain: &[Poly], x: &Rational) -> usize {
    let mut last = 0i32;
    let mut count = 0;
    for p in chain {
        let v = poly_eval(p, x);
        let s = v.cmp0() as i32;
        if s != 0 {
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
    }
    count
}

fn poly_eval_float(p: &[Integer], x: &Float) -> Float {
    let mut acc = Float::new(x.prec());
    for c in p.iter().rev() {
        acc *= x;
        acc += c;
    }
    acc
}

/// Real roots of a squarefree integer polynomial with only real roots,
/// isolated by Sturm sequences and refined by bisection at `wp` bits.
fn real_roots(p: &[Integer], weight: u32, wp: u32) -> Result<Vec<Float>> {
    let rp: Poly = p.iter().map(Rational::from).collect();
    let chain = sturm_chain(&rp);
    if chain.last().map(|g| g.len()).unwrap_or(1) > 1 {
        return Err(Error::EigenvalueCollision(weight));
    }
    let bound: Integer = p.iter().map(|c| c.clone().abs()).max().unwrap_or_default() + 1u32;
    let mut stack = vec![(Rational::from(-bound.clone()), Rational::from(bound))];
    let mut isolated = Vec::new();
    while let Some((a, b)) = stack.pop() {
        let cnt = sign_changes(&chain, &a) as i64 - sign_changes(&chain, &b) as i64;
        if cnt == 0 {
            continue;
        }
        if cnt == 1 {
            isolated.push((a, b));
            continue;
        }
        let mid = Rational::from(&a + &b) / 2u32;
        stack.push((a, mid.clone()));
        stack.push((mid, b));
    }
    let mut roots = Vec::with_capacity(isolated.len());
    for (a, b) in isolated {
        // root in (a, b]
        if poly_eval(&rp, &b) == 0 {
            roots.push(Float::with_val(wp, &b));
            continue;
        }
        let mut lo = Float::with_val(wp, &a);
        let mut hi = Float::with_val(wp, &b);
        let s_hi = poly_eval_float(p, &hi).cmp0();
        let target = (wp + 8) as i32;
        loop {
            let width = Float::with_val(wp, &hi - &lo);
            let scale = Float::with_val(wp, hi.abs_ref()).max(&Float::with_val(wp, 1));
            if width.is_zero() || width.get_exp().unwrap_or(i32::MIN) < scale.get_exp().unwrap_or(0) - target {
                break;
            }
            let mid = Float::with_val(wp, &lo + &hi) / 2u32;
            if mid == lo || mid == hi {
                break;
            }
            let s = poly_eval_float(p, &mid).cmp0();
            if s == Some(std::cmp::Ordering::Equal) {
                lo = mid.clone();
                hi = mid;
                break;
            }
            if s == s_hi {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        roots.push(Float::with_val(wp, &lo + &hi) / 2u32);
    }
    roots.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(roots)
}

/// A normalised Hecke eigenform; the later fields are filled once the whole
/// space is processed.
#[derive(Debug, Clone)]
pub struct HeckeEigenform {
    pub weight: u32,
    /// λ_f(n) for n = 0..=n_max (index 0 unused and zero).
    pub lambda: Vec<Float>,
    pub omega: Option<Float>,
    pub central_value: Option<Float>,
    pub sym2_at_1: Option<Float>,
}

impl HeckeEigenform {
    pub fn n_max(&self) -> usize {
        self.lambda.len() - 1
    }

    /// k with weight 2k.
    pub fn k(&self) -> u32 {
        self.weight / 2
    }

    pub fn omega(&self) -> Result<&Float> {
        self.omega.as_ref().ok_or_else(|| Error::Config("harmonic weight not computed".into()))
    }
}

fn max_bits(basis: &[QExpansion]) -> u32 {
    basis.iter().flat_map(|f| f.coeffs.iter()).map(|c| c.significant_bits()).max().unwrap_or(1)
}

/// Eigenforms of T₂ (T₃ if T₂ has a repeated eigenvalue) normalised to
/// a(1) = 1, with λ_f(n) up to n_max, sorted by decreasing λ_f(2).
pub fn hecke_eigenforms(weight: u32, n_max: usize, ctx: &PrecisionContext) -> Result<Vec<HeckeEigenform>> {
    let d = cusp_dimension(weight);
    if d == 0 {
        return Ok(Vec::new());
    }
    if n_max < 2 * d + 10 {
        return Err(Error::Domain(format!("n_max = {n_max} below 2·dim + 10 = {}", 2 * d + 10)));
    }
    let n_need = n_max.max(3 * d);
    let basis = miller_basis(weight, n_need)?;
    let mut chosen = None;
    for p in [2u64, 3] {
        let m = hecke_matrix(&basis, p)?;
        let cp = char_poly(&m);
        let cp_bits = cp.iter().map(|c| c.significant_bits()).max().unwrap_or(1);
        let wp = ctx.prec() + 96 + max_bits(&basis) + cp_bits;
        match real_roots(&cp, weight, wp) {
            Ok(r) => {
                chosen = Some((m, r, wp));
                break;
            }
            Err(Error::EigenvalueCollision(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    let (m, roots, wp) = chosen.ok_or(Error::EigenvalueCollision(weight))?;
    let half_w = Float::with_val(wp, weight - 1) / 2u32;
    let mut forms = Vec::with_capacity(d);
    for mu in roots {
        // (Mᵀ − μI)c = 0 with c₁ = 1
        let mut c = vec![Float::with_val(wp, 1)];
        if d > 1 {
            let mut a: Matrix = Vec::with_capacity(d);
            let mut rhs = Vec::with_capacity(d);
            for r in 0..d {
                let row: Vec<Float> = (1..d)
                    .map(|j| {
                        let mut v = Float::with_val(wp, &m[j][r]);
                        if j == r {
                            v -= &mu;
                        }
                        v
                    })
                    .collect();
                let mut b0 = Float::with_val(wp, &m[0][r]);
                if r == 0 {
                    b0 -= &mu;
                }
                a.push(row);
                rhs.push(-b0);
            }
            c.extend(least_squares(&a, &rhs)?);
        }
        let mut lambda = vec![Float::new(ctx.prec())];
        for n in 1..=n_max {
            let mut an = Float::new(wp);
            for (ci, f) in c.iter().zip(&basis) {
                an += Float::with_val(wp, ci * f.a(n));
            }
            let scale = (Float::with_val(wp, n).ln() * &half_w).exp();
            lambda.push(Float::with_val(ctx.prec(), an / scale));
        }
        forms.push(HeckeEigenform { weight, lambda, omega: None, central_value: None, sym2_at_1: None });
    }
    forms.sort_by(|f, g| g.lambda[2].partial_cmp(&f.lambda[2]).unwrap());
    Ok(forms)
}

/// Pair sets for the harmonic-weight solve: P₁ = {(m,n): 1 ≤ m ≤ n ≤ d} and the
/// next d(d+1)/2 pairs in the same (n, then m) order as held-out set P₂.
pub fn pair_sets(d: usize) -> (Vec<(u64, u64)>, Vec<(u64, u64)>) {
    let want = d * (d + 1) / 2;
    let mut all = Vec::new();
    let mut n = 1u64;
    while all.len() < 2 * want {
        for m in 1..=n {
            all.push((m, n));
        }
        n += 1;
    }
    let p2 = all[want..2 * want].to_vec();
    all.truncate(want);
    (all, p2)
}

/// ln of the bound 2π·√gcd(m,n)·K·(2π√(mn))^ν/Γ(ν+1)·C^{1−ν}/(ν−1), ν = w − 1, on
/// the tail Σ_{c>C} of the Petersson sum, from the Weil bound
/// |S(m,n;c)| ≤ τ₀(c)√gcd(m,n,c)√c with τ₀(c) ≤ K√c and |J_ν(x)| ≤ (x/2)^ν/Γ(ν+1).
pub fn petersson_tail_bound(weight: u32, m: u64, n: u64, c_max: u64) -> f64 {
    let nu = weight as f64 - 1.0;
    let k = tau0_power_constant(0.5);
    let g = gcd(m as i64, n as i64) as f64;
    let mn = (m * n) as f64;
    let lg = ln_gamma_real(&Float::with_val(64, nu + 1.0)).to_f64();
    let ln_b = (2.0 * std::f64::consts::PI).ln() + 0.5 * g.ln() + k.ln() + nu * (2.0 * std::f64::consts::PI * mn.sqrt()).ln() - lg
        + (1.0 - nu) * (c_max as f64).ln()
        - (nu - 1.0).ln();
    ln_b.exp()
}

/// Sharper certified tail: the per-c bound 2π τ₀(c)√gcd(m,n,c) c^{−1/2}
/// (2π√(mn)/c)^ν/Γ(ν+1) summed exactly over C < c ≤ 16C, plus
/// `petersson_tail_bound` at 16C for the rest.
pub fn petersson_tail_bound_summed(weight: u32, m: u64, n: u64, c_max: u64) -> f64 {
    let nu = weight as f64 - 1.0;
    let g = gcd(m as i64, n as i64);
    let lg = ln_gamma_real(&Float::with_val(64, nu + 1.0)).to_f64();
    let ln_a = (2.0 * std::f64::consts::PI).ln() + nu * (2.0 * std::f64::consts::PI * ((m * n) as f64).sqrt()).ln() - lg;
    let top = c_max.saturating_mul(16);
    let mut sum = 0.0f64;
    for c in c_max + 1..=top {
        let gc = gcd(g, c as i64) as f64;
        let cf = c as f64;
        sum += (ln_a + 0.5 * gc.ln() + (tau0(c) as f64).ln() - (nu + 0.5) * cf.ln()).exp();
    }
    // each f64 term carries a relative error below 1e-15
    sum * (1.0 + 1e-12) + petersson_tail_bound(weight, m, n, top)
}

/// Smallest c_max whose certified tail is below `tol` for every pair, capped.
pub fn petersson_cmax(weight: u32, pairs: &[(u64, u64)], tol: f64, cap: u64) -> u64 {
    let mut c = 1u64;
    while c < cap && pairs.iter().any(|&(m, n)| petersson_tail_bound(weight, m, n, c) > tol) {
        c = (c + 1).max(c * 21 / 20);
    }
    // step back down to the smallest passing value
    let mut lo = c * 20 / 21;
    while lo < c && pairs.iter().any(|&(m, n)| petersson_tail_bound(weight, m, n, lo) > tol) {
        lo += 1;
    }
    lo.min(cap).max(1)
}

/// 2π i^{w} Σ_{c≤c_max} S(m,n;c)/c · J_{w−1}(4π√(mn)/c) for each pair (δ not included).
pub fn petersson_sums(weight: u32, pairs: &[(u64, u64)], c_max: u64, ctx: &PrecisionContext) -> Result<Vec<Float>> {
    let prec = ctx.prec() + 16;
    let nu = weight as f64 - 1.0;
    let lg = ln_gamma_real(&Float::with_val(64, nu + 1.0)).to_f64();
    let mut sums = vec![Float::new(prec); pairs.len()];
    let two_pi = Float::with_val(prec, mp::pi(prec) * 2u32);
    for c in 1..=c_max {
        // magnitude bound of the c-th term over all pairs decides its precision
        let mut ln_term = f64::NEG_INFINITY;
        for &(m, n) in pairs {
            let w = crate::arith::weil_bound(m as i64, n as i64, c);
            let x2 = 2.0 * std::f64::consts::PI * ((m * n) as f64).sqrt() / c as f64;
            let t = w.ln() - (c as f64).ln() + nu * x2.ln() - lg;
            ln_term = ln_term.max(t);
        }
        let need = prec as f64 + 8.0 + ln_term / std::f64::consts::LN_2;
        if need < 0.0 {
            continue;
        }
        let bits = (need.ceil() as u32 + 24).clamp(64, prec);
        let bctx = PrecisionContext::new(bits);
        let cos_table: Vec<Float> = (0..c)
            .map(|r| {
                let arg = Float::with_val(bits, mp::pi(bits) * (2 * r)) / c;
                arg.cos()
            })
            .collect();
        let units: Vec<(u64, u64)> = if c == 1 {
            vec![(0, 0)]
        } else {
            (1..c).filter_map(|a| mod_inverse(a as i64, c as i64).map(|inv| (a, inv as u64))).collect()
        };
        for (idx, &(m, n)) in pairs.iter().enumerate() {
            let mut s = Float::new(bits);
            for &(a, inv) in &units {
                let r = ((m as u128 * a as u128 + n as u128 * inv as u128) % c as u128) as usize;
                s += &cos_table[r];
            }
            let x = Float::with_val(bits, mp::pi(bits) * 4u32) * Float::with_val(bits, (m * n) as f64).sqrt() / c;
            let j = bessel_j(&Float::with_val(bits, nu), &x, &bctx)?;
            let term = Float::with_val(prec, s * j) / c;
            sums[idx] += term;
        }
    }
    let sign = mp::neg1_pow(weight as i64 / 2);
    Ok(sums.into_iter().map(|s| Float::with_val(ctx.prec(), s * &two_pi * sign)).collect())
}

#[derive(Debug, Clone)]
pub struct HarmonicSolution {
    pub omega: Vec<Float>,
    pub heldout_residual: f64,
    pub condition_number: f64,
    pub c_max: u64,
    /// Largest certified Petersson tail over the pairs used.
    pub tail_bound: f64,
}

fn petersson_rows(forms: &[HeckeEigenform], pairs: &[(u64, u64)], prec: u32) -> Matrix {
    pairs
        .iter()
        .map(|&(m, n)| forms.iter().map(|f| Float::with_val(prec, &f.lambda[m as usize] * &f.lambda[n as usize])).collect())
        .collect()
}

/// ω_f by least squares on `pairs`, residual reported on `heldout`.
pub fn harmonic_weights_from_pairs(
    forms: &[HeckeEigenform],
    pairs: &[(u64, u64)],
    heldout: &[(u64, u64)],
    c_max: u64,
    ctx: &PrecisionContext,
) -> Result<HarmonicSolution> {
    if forms.is_empty() {
        return Err(Error::EmptySupport("no cusp forms in this weight".into()));
    }
    let weight = forms[0].weight;
    let need = pairs.iter().chain(heldout).map(|&(m, n)| m.max(n) as usize).max().unwrap_or(1);
    if need > forms[0].n_max() {
        return Err(Error::Domain(format!("pair index {need} beyond n_max {}", forms[0].n_max())));
    }
    let prec = ctx.prec();
    let all: Vec<(u64, u64)> = pairs.iter().chain(heldout).copied().collect();
    let sums = petersson_sums(weight, &all, c_max, ctx)?;
    let rhs: Vec<Float> = all
        .iter()
        .zip(sums)
        .map(|(&(m, n), s)| if m == n { s + 1u32 } else { s })
        .collect();
    let a = petersson_rows(forms, pairs, prec);
    let cond = condition_number(&a);
    if cond > 1e12 {
        return Err(Error::IllConditioned(cond));
    }
    let omega = least_squares(&a, &rhs[..pairs.len()])?;
    let held = petersson_rows(forms, heldout, prec);
    let mut worst = 0f64;
    for (row, r) in held.iter().zip(&rhs[pairs.len()..]) {
        let mut s = Float::new(prec);
        for (x, w) in row.iter().zip(&omega) {
            s += Float::with_val(prec, x * w);
        }
        worst = worst.max(Float::with_val(prec, s - r).abs().to_f64());
    }
    let tail = all.iter().map(|&(m, n)| petersson_tail_bound(weight, m, n, c_max)).fold(0.0, f64::max);
    Ok(HarmonicSolution { omega, heldout_residual: worst, condition_number: cond, c_max, tail_bound: tail })
}

/// ω_f from the pair set P₁ with P₂ held out.
pub fn harmonic_weights(forms: &[HeckeEigenform], c_max: u64, ctx: &PrecisionContext) -> Result<HarmonicSolution> {
    let (p1, p2) = pair_sets(forms.len());
    harmonic_weights_from_pairs(forms, &p1, &p2, c_max, ctx)
}

/// |Σ_f ω_f λ_f(m)λ_f(n) − δ_{m,n} − Petersson sum up to c_max| and the
/// certified tail bound for c > c_max.
#[derive(Debug, Clone, Copy)]
pub struct PeterssonCheck {
    pub residual: f64,
    pub tail_bound: f64,
}

pub fn petersson_residual(forms: &[HeckeEigenform], m: u64, n: u64, c_max: u64, ctx: &PrecisionContext) -> Result<PeterssonCheck> {
    if m == 0 || n == 0 {
        return Err(Error::Domain("Petersson indices start at 1".into()));
    }
    if forms.is_empty() {
        return Err(Error::EmptySupport("no cusp forms in this weight".into()));
    }
    let weight = forms[0].weight;
    let prec = ctx.prec();
    let mut lhs = Float::new(prec);
    for f in forms {
        lhs += Float::with_val(prec, &f.lambda[m as usize] * &f.lambda[n as usize]) * f.omega()?;
    }
    let mut rhs = petersson_sums(weight, &[(m, n)], c_max, ctx)?.remove(0);
    if m == n {
        rhs += 1u32;
    }
    Ok(PeterssonCheck { residual: Float::with_val(prec, lhs - rhs).abs().to_f64(), tail_bound: petersson_tail_bound_summed(weight, m, n, c_max) })
}

/// Approximate functional equation settings; `split` is X.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfeConfig {
    pub split: f64,
    /// Fixed number of terms; `None` picks the smallest adequate count.
    pub n_terms: Option<usize>,
    pub target_tol: f64,
}

impl AfeConfig {
    pub fn for_context(ctx: &PrecisionContext) -> Self {
        AfeConfig { split: 1.0, n_terms: None, target_tol: ctx.tail_tol }
    }

    pub fn with_split(mut self, x: f64) -> Self {
        self.split = x;
        self
    }
}

/// ln of the bound τ₀(n)[n^{−σ}Γ(a₁,2πnX) + (2π)^{2σ−1}n^{σ−1}Γ(a₂,2πn/X)]/|Γ(w)| on the
/// n-th AFE term, with Γ(a,x) ≤ x^{a−1}e^{−x}/(1 − (a−1)/x) for x > a − 1.
fn afe_term_bound(n: usize, sigma: f64, a1: f64, a2: f64, ln_gamma_w: f64, x_split: f64) -> f64 {
    let g = |a: f64, x: f64| -> f64 {
        if x <= a - 1.0 + 1.0 {
            return f64::INFINITY;
        }
        let corr = if a > 1.0 { 1.0 - (a - 1.0) / x } else { 1.0 };
        (a - 1.0) * x.ln() - x - corr.ln()
    };
    let nf = n as f64;
    let two_pi = 2.0 * std::f64::consts::PI;
    let t1 = -sigma * nf.ln() + g(a1, two_pi * nf * x_split);
    let t2 = (2.0 * sigma - 1.0) * two_pi.ln() + (sigma - 1.0) * nf.ln() + g(a2, two_pi * nf / x_split);
    let m = t1.max(t2);
    (tau0(n as u64) as f64).ln() + m + ((t1 - m).exp() + (t2 - m).exp()).ln() - ln_gamma_w
}

fn afe_terms(f: &HeckeEigenform, sigma: f64, a1: f64, a2: f64, ln_gamma_w: f64, cfg: &AfeConfig) -> Result<usize> {
    let x = cfg.split;
    if !(x > 0.0) {
        return Err(Error::Config(format!("AFE split X = {x} must be positive")));
    }
    let ln_tol = (cfg.target_tol * 1e-3).ln();
    let avail = f.n_max();
    match cfg.n_terms {
        Some(n) => {
            if n > avail {
                return Err(Error::TruncationInsufficient(format!("{n} terms requested, λ known to {avail}")));
            }
            let b = afe_term_bound(n + 1, sigma, a1, a2, ln_gamma_w, x);
            if b > cfg.target_tol.ln() {
                return Err(Error::TruncationInsufficient(format!("first omitted term bound {:e} above target", b.exp())));
            }
            Ok(n)
        }
        None => {
            let xmin = x.min(1.0 / x);
            let amax = a1.max(a2);
            for n in 1..=avail {
                let past = 2.0 * std::f64::consts::PI * n as f64 * xmin > 2.0 * amax + 2.0;
                if past && afe_term_bound(n + 1, sigma, a1, a2, ln_gamma_w, x) < ln_tol {
                    return Ok(n);
                }
            }
            Err(Error::TruncationInsufficient(format!("λ known only to n = {avail}")))
        }
    }
}

/// Γ(k,x)/Γ(k) = e^{−x} Σ_{j<k} x^j/j! for integer k ≥ 1.
fn regularized_upper_int(k: u32, x: &Float) -> Float {
    let wp = x.prec();
    let mut term = Float::with_val(wp, 1);
    let mut sum = Float::with_val(wp, 1);
    for j in 1..k {
        term *= x;
        term /= j;
        sum += &term;
    }
    sum * Float::with_val(wp, -x).exp()
}

/// L_f(1/2) by the approximate functional equation
/// Σ λ(n) n^{−1/2}[Γ(k,2πnX) + (−1)^k Γ(k,2πn/X)]/Γ(k); exactly 0 for odd k.
pub fn central_value(f: &HeckeEigenform, cfg: &AfeConfig, ctx: &PrecisionContext) -> Result<Float> {
    let k = f.k();
    if k % 2 == 1 {
        return Ok(Float::new(ctx.prec()));
    }
    let wp = ctx.prec() + 32;
    let kf = k as f64;
    let lgk = ln_gamma_real(&Float::with_val(64, kf)).to_f64();
    let n_terms = afe_terms(f, 0.5, kf, kf, lgk, cfg)?;
    let two_pi = Float::with_val(wp, mp::pi(wp) * 2u32);
    let x = Float::with_val(wp, cfg.split);
    let mut sum = Float::new(wp);
    for n in 1..=n_terms {
        let a = Float::with_val(wp, &two_pi * n) * &x;
        let b = Float::with_val(wp, &two_pi * n) / &x;
        let g = regularized_upper_int(k, &a) + regularized_upper_int(k, &b);
        let rn = Float::with_val(wp, n).sqrt();
        sum += Float::with_val(wp, &f.lambda[n] * g) / rn;
    }
    Ok(Float::with_val(ctx.prec(), sum))
}

/// L_f(s) = Γ(w)⁻¹ Σ λ(n)[n^{−s}Γ(w,2πnX) + (−1)^k (2π)^{2s−1} n^{s−1} Γ(k+1/2−s, 2πn/X)],
/// w = s + k − 1/2.
pub fn l_value(f: &HeckeEigenform, s: &Complex, cfg: &AfeConfig, ctx: &PrecisionContext) -> Result<Complex> {
    let k = f.k();
    let wp = ctx.prec() + 32;
    let wctx = ctx.raised(32);
    let s = Complex::with_val(wp, s);
    let w = Complex::with_val(wp, &s + (k as f64 - 0.5));
    let a2 = Complex::with_val(wp, (k as f64 + 0.5) - Complex::with_val(wp, &s));
    let lgw = ln_gamma(&w, &wctx)?;
    let sigma = s.real().to_f64();
    let n_terms = afe_terms(f, sigma, w.real().to_f64(), a2.real().to_f64(), lgw.real().to_f64(), cfg)?;
    let two_pi = Float::with_val(wp, mp::pi(wp) * 2u32);
    let x = Float::with_val(wp, cfg.split);
    let sign = mp::neg1_pow(k as i64);
    let s2m1 = Complex::with_val(wp, Complex::with_val(wp, &s * 2u32) - 1u32);
    let pref2 = mp::rpow(&two_pi, &s2m1) * sign;
    let sm1 = Complex::with_val(wp, &s - 1u32);
    let neg_s = Complex::with_val(wp, -&s);
    let mut sum = Complex::new(wp);
    for n in 1..=n_terms {
        let nf = Float::with_val(wp, n);
        let g1 = incomplete_gamma_upper(&w, &(Float::with_val(wp, &two_pi * n) * &x), &wctx)?;
        let g2 = incomplete_gamma_upper(&a2, &(Float::with_val(wp, &two_pi * n) / &x), &wctx)?;
        let t1 = mp::rpow(&nf, &neg_s) * g1;
        let t2 = mp::rpow(&nf, &sm1) * g2 * &pref2;
        sum += Complex::with_val(wp, t1 + t2) * &f.lambda[n];
    }
    let inv_gamma = Complex::with_val(wp, -lgw).exp();
    Ok(Complex::with_val(ctx.prec(), sum * inv_gamma))
}

/// L(sym²f, 1) = 12ζ(2)/((w−1)ω_f).
pub fn sym2_at_1(f: &HeckeEigenform, ctx: &PrecisionContext) -> Result<Float> {
    let prec = ctx.prec();
    let omega = f.omega()?;
    let pi2 = Float::with_val(prec, mp::pi(prec).square_ref());
    Ok(pi2 * 2u32 / (Float::with_val(prec, omega * (f.weight - 1))))
}

/// |1/ω_f − L(sym²f,1)·dim/ζ(2)|, the size of the O((log k)³) term when
/// the dimension stands in for (w−1)/12.
pub fn sym2_dimension_residual(f: &HeckeEigenform, ctx: &PrecisionContext) -> Result<f64> {
    let prec = ctx.prec();
    let l = sym2_at_1(f, ctx)?;
    let zeta2 = Float::with_val(prec, mp::pi(prec).square_ref()) / 6u32;
    let d = cusp_dimension(f.weight);
    let r = Float::with_val(prec, f.omega()?.recip_ref()) - l * d as u32 / zeta2;
    Ok(r.abs().to_f64())
}

/// Everything computed for one weight.
#[derive(Debug, Clone)]
pub struct FormSpace {
    pub weight: u32,
    pub dim: usize,
    pub n_max: usize,
    pub c_max: u64,
    pub prec_bits: u32,
    pub forms: Vec<HeckeEigenform>,
    pub heldout_residual: f64,
    pub condition_number: f64,
    pub petersson_tail: f64,
}

/// Default Petersson target: the certified tail must fall below this.
pub const PETERSSON_TARGET: f64 = 1e-28;
/// Hard cap on c_max.
pub const PETERSSON_CAP: u64 = 5000;

/// n_max default: max(2·dim + 10, ⌈k/2π⌉ + ⌈8√k⌉ + 16) raised until the AFE
/// tail at X ∈ [1/2, 2] is below 2^{−prec}.
pub fn default_n_max(weight: u32, prec: u32) -> usize {
    let d = cusp_dimension(weight);
    let k = (weight / 2) as f64;
    let base = (2 * d + 10).max((k / (2.0 * std::f64::consts::PI)).ceil() as usize + (8.0 * k.sqrt()).ceil() as usize + 16);
    let ln_tol = -(prec as f64 + 16.0) * std::f64::consts::LN_2;
    let lgk = ln_gamma_real(&Float::with_val(64, k)).to_f64();
    let mut n = base;
    // complex shifts up to |Re| = 1 in the Gamma parameter are allowed for
    while afe_term_bound(n, -0.5, k + 1.5, k + 1.5, lgk, 2.0) > ln_tol
        || afe_term_bound(n, -0.5, k + 1.5, k + 1.5, lgk, 0.5) > ln_tol
        || (n as f64) * std::f64::consts::PI <= 2.0 * (k + 1.5) + 2.0
    {
        n += 1;
    }
    n.max(3 * d)
}

/// Build a weight's space: eigenforms, ω_f, L_f(1/2), L(sym²f,1).
pub fn build_form_space(weight: u32, n_max: Option<usize>, c_max: Option<u64>, ctx: &PrecisionContext) -> Result<FormSpace> {
    let dim = cusp_dimension(weight);
    let n_max = n_max.unwrap_or_else(|| default_n_max(weight, ctx.prec()));
    if dim == 0 {
        return Ok(FormSpace {
            weight,
            dim,
            n_max,
            c_max: 0,
            prec_bits: ctx.prec(),
            forms: Vec::new(),
            heldout_residual: 0.0,
            condition_number: 1.0,
            petersson_tail: 0.0,
        });
    }
    let mut forms = hecke_eigenforms(weight, n_max, ctx)?;
    let (p1, p2) = pair_sets(dim);
    let all: Vec<(u64, u64)> = p1.iter().chain(&p2).copied().collect();
    let c_max = c_max.unwrap_or_else(|| petersson_cmax(weight, &all, PETERSSON_TARGET.max(ctx.tail_tol), PETERSSON_CAP));
    let sol = harmonic_weights_from_pairs(&forms, &p1, &p2, c_max, ctx)?;
    let cfg = AfeConfig::for_context(ctx);
    for (f, w) in forms.iter_mut().zip(&sol.omega) {
        f.omega = Some(w.clone());
        f.central_value = Some(central_value(f, &cfg, ctx)?);
        f.sym2_at_1 = Some(sym2_at_1(f, ctx)?);
    }
    Ok(FormSpace {
        weight,
        dim,
        n_max,
        c_max,
        prec_bits: ctx.prec(),
        forms,
        heldout_residual: sol.heldout_residual,
        condition_number: sol.condition_number,
        petersson_tail: sol.tail_bound,
    })
}

type SpaceCache = Mutex<HashMap<(u32, u32), Arc<FormSpace>>>;

fn cache() -> &'static SpaceCache {
    static CACHE: OnceLock<SpaceCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Memoised default space for (weight, precision). Concurrent first calls may
/// both compute; the first stored value wins and is shared afterwards.
pub fn form_space(weight: u32, ctx: &PrecisionContext) -> Result<Arc<FormSpace>> {
    let key = (weight, ctx.prec());
    if let Some(s) = cache().lock().unwrap().get(&key) {
        return Ok(s.clone());
    }
    let space = Arc::new(build_form_space(weight, None, None, ctx)?);
    let mut guard = cache().lock().unwrap();
    Ok(guard.entry(key).or_insert(space).clone())
}

/// Insert a space (for example one read from a fixture) into the memo table.
pub fn install_form_space(space: FormSpace) -> Arc<FormSpace> {
    let key = (space.weight, space.prec_bits);
    let arc = Arc::new(space);
    cache().lock().unwrap().entry(key).or_insert(arc).clone()
}

/// Spaces for several weights computed on separate threads.
pub fn form_spaces(weights: &[u32], ctx: &PrecisionContext) -> Result<Vec<Arc<FormSpace>>> {
    std::thread::scope(|sc| {
        let handles: Vec<_> = weights.iter().map(|&w| sc.spawn(move || form_space(w, ctx))).collect();
        handles.into_iter().map(|h| h.join().expect("form space worker panicked")).collect()
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EigenformFixture {
    pub lambda: Vec<String>,
    pub omega: String,
    #[serde(rename = "L_half")]
    pub l_half: String,
    pub sym2: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FormSpaceFixture {
    pub weight: u32,
    pub dim: usize,
    pub prec_bits: u32,
    pub n_max: usize,
    pub c_max: u64,
    pub eigenforms: Vec<EigenformFixture>,
    #[serde(default)]
    pub heldout_residual: Option<f64>,
    #[serde(default)]
    pub condition_number: Option<f64>,
    #[serde(default)]
    pub petersson_tail: Option<f64>,
}

impl FormSpace {
    pub fn to_fixture(&self) -> FormSpaceFixture {
        let dec = |x: &Option<Float>| x.as_ref().map(mp::to_decimal).unwrap_or_default();
        FormSpaceFixture {
            weight: self.weight,
            dim: self.dim,
            prec_bits: self.prec_bits,
            n_max: self.n_max,
            c_max: self.c_max,
            eigenforms: self
                .forms
                .iter()
                .map(|f| EigenformFixture {
                    lambda: f.lambda[1..].iter().map(mp::to_decimal).collect(),
                    omega: dec(&f.omega),
                    l_half: dec(&f.central_value),
                    sym2: dec(&f.sym2_at_1),
                })
                .collect(),
            heldout_residual: self.heldout_residual.is_finite().then_some(self.heldout_residual),
            condition_number: self.condition_number.is_finite().then_some(self.condition_number),
            petersson_tail: self.petersson_tail.is_finite().then_some(self.petersson_tail),
        }
    }

    pub fn from_fixture(fx: &FormSpaceFixture) -> Result<FormSpace> {
        let prec = fx.prec_bits;
        let parse = |s: &str| mp::from_decimal(s, prec).ok_or_else(|| Error::Config(format!("bad decimal in fixture: {s}")));
        if fx.dim != cusp_dimension(fx.weight) || fx.eigenforms.len() != fx.dim {
            return Err(Error::Config(format!("fixture for weight {} has inconsistent dimension", fx.weight)));
        }
        let mut forms = Vec::with_capacity(fx.dim);
        for e in &fx.eigenforms {
            let mut lambda = vec![Float::new(prec)];
            for s in &e.lambda {
                lambda.push(parse(s)?);
            }
            forms.push(HeckeEigenform {
                weight: fx.weight,
                lambda,
                omega: Some(parse(&e.omega)?),
                central_value: Some(parse(&e.l_half)?),
                sym2_at_1: Some(parse(&e.sym2)?),
            });
        }
        Ok(FormSpace {
            weight: fx.weight,
            dim: fx.dim,
            n_max: fx.n_max,
            c_max: fx.c_max,
            prec_bits: prec,
            forms,
            heldout_residual: fx.heldout_residual.unwrap_or(f64::NAN),
            condition_number: fx.condition_number.unwrap_or(f64::NAN),
            petersson_tail: fx.petersson_tail.unwrap_or(f64::NAN),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::divisor_tau;
    use crate::specialfn::zeta::riemann_zeta;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    #[test]
    fn delta_from_product() {
        // oracle: q∏(1−qⁿ)²⁴ expanded directly
        let n_max = 30;
        let mut prod = vec![Integer::new(); n_max + 1];
        prod[0] = Integer::from(1);
        for n in 1..=n_max {
            for _ in 0..24 {
                for i in (n..=n_max).rev() {
                    let t = prod[i - n].clone();
                    prod[i] -= t;
                }
            }
        }
        let d = delta_series(n_max);
        assert_eq!(d[0], 0);
        for n in 1..=n_max {
            assert_eq!(d[n], prod[n - 1], "n = {n}");
        }
        assert_eq!(d[2], -24);
        assert_eq!(d[3], 252);
    }

    #[test]
    fn dimensions_and_basis_shape() {
        let b = miller_basis(12, 3).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].coeffs[1], 1);
        assert_eq!(b[0].coeffs[2], -24);
        assert_eq!(miller_basis(26, 10).unwrap().len(), 1);
        assert!(miller_basis(14, 10).unwrap().is_empty());
        assert!(miller_basis(10, 10).unwrap().is_empty());
        let b = miller_basis(24, 10).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!((b[0].coeffs[1].clone(), b[0].coeffs[2].clone()), (Integer::from(1), Integer::from(0)));
        assert_eq!((b[1].coeffs[1].clone(), b[1].coeffs[2].clone()), (Integer::from(0), Integer::from(1)));
        for w in (12..=100).step_by(2) {
            let d = cusp_dimension(w);
            let formula = if w % 12 == 2 { w / 12 - 1 } else { w / 12 };
            assert_eq!(d, formula as usize);
        }
        assert!(matches!(miller_basis(13, 10), Err(Error::Parity(_))));
    }

    #[test]
    fn delta_eigenvalue() {
        let c = ctx();
        let f = &hecke_eigenforms(12, 30, &c).unwrap()[0];
        let want = Float::with_val(256, -24) / Float::with_val(256, 2).pow(Float::with_val(256, 5.5));
        assert!(Float::with_val(256, &f.lambda[2] - &want).abs() < 1e-70);
        // τ(n) recovered
        let tau = delta_series(30);
        for n in 1..=30usize {
            let scale = Float::with_val(256, n).pow(Float::with_val(256, 5.5));
            let a = Float::with_val(256, &f.lambda[n] * scale);
            assert!(Float::with_val(256, a - &tau[n]).abs() < 1e-50);
        }
    }

    #[test]
    fn hecke_relations_and_deligne() {
        let c = ctx();
        let tol = Float::with_val(256, 1) >> (256 - 16);
        for w in [12u32, 24, 36, 48, 72] {
            let forms = hecke_eigenforms(w, 40, &c).unwrap();
            assert_eq!(forms.len(), cusp_dimension(w));
            for f in &forms {
                assert_eq!(f.lambda[1], 1);
                for m in 1..=6usize {
                    for n in 1..=6usize {
                        let lhs = Float::with_val(256, &f.lambda[m] * &f.lambda[n]);
                        let g = gcd(m as i64, n as i64) as usize;
                        let mut rhs = Float::new(256);
                        for d in divisors(g as u64) {
                            rhs += &f.lambda[m * n / (d * d) as usize];
                        }
                        assert!(Float::with_val(256, lhs - rhs).abs() <= tol, "w={w} m={m} n={n}");
                    }
                }
                for n in 1..=40usize {
                    assert!(f.lambda[n].to_f64().abs() <= tau0(n as u64) as f64 * (1.0 + 1e-10));
                }
            }
        }
    }

    #[test]
    fn weight_24_relation() {
        let c = ctx();
        for f in hecke_eigenforms(24, 30, &c).unwrap() {
            let r = Float::with_val(256, f.lambda[2].square_ref()) - &f.lambda[4] - 1u32;
            assert!(r.abs() < 1e-70);
        }
    }

    #[test]
    fn char_poly_and_roots() {
        // x² − 5x + 6 from [[2, 0], [1, 3]]
        let m = vec![vec![Integer::from(2), Integer::from(0)], vec![Integer::from(1), Integer::from(3)]];
        let cp = char_poly(&m);
        assert_eq!(cp, vec![Integer::from(6), Integer::from(-5), Integer::from(1)]);
        let r = real_roots(&cp, 0, 128).unwrap();
        assert_eq!(r[0], 3);
        assert_eq!(r[1], 2);
        let sq = vec![Integer::from(1), Integer::from(-2), Integer::from(1)];
        assert!(matches!(real_roots(&sq, 7, 128), Err(Error::EigenvalueCollision(7))));
    }

    #[test]
    fn weight_12_harmonic_weight() {
        let c = ctx();
        let forms = hecke_eigenforms(12, 30, &c).unwrap();
        let sol = harmonic_weights_from_pairs(&forms, &[(1, 1)], &[(2, 3)], 100, &c).unwrap();
        let direct = petersson_sums(12, &[(1, 1)], 100, &c).unwrap().remove(0) + 1u32;
        assert!(Float::with_val(256, &sol.omega[0] - &direct).abs() < 1e-70);
        // (2,3) at c_max = 100 carries a tail of order 1e-17; at 500 it is below 1e-20
        let sol = harmonic_weights_from_pairs(&forms, &[(1, 1)], &[(2, 3)], 500, &c).unwrap();
        assert!(sol.heldout_residual <= 1e-20, "{}", sol.heldout_residual);
        let w = sol.omega[0].to_f64();
        assert!(w * 11.0 >= 1.0 && w * 11.0 <= 100.0);
    }

    #[test]
    fn kloosterman_table_matches_arith() {
        // the cos-table route inside petersson_sums against arith::kloosterman
        let c = PrecisionContext::new(128);
        for cm in [1u64, 2, 7, 12, 30] {
            let s = crate::arith::kloosterman(2, 5, cm, &c).unwrap();
            let units: Vec<(u64, u64)> = if cm == 1 {
                vec![(0, 0)]
            } else {
                (1..cm).filter_map(|a| mod_inverse(a as i64, cm as i64).map(|i| (a, i as u64))).collect()
            };
            let mut t = Float::new(128);
            for (a, inv) in units {
                let r = (2 * a + 5 * inv) % cm;
                t += (Float::with_val(128, mp::pi(128) * (2 * r)) / cm).cos();
            }
            assert!(Float::with_val(128, s - t).abs() < 1e-30, "c = {cm}");
        }
    }

    #[test]
    fn summed_tail_dominates_the_omitted_range() {
        let c = PrecisionContext::new(128);
        for (w, m, n) in [(12u32, 4u64, 4u64), (12, 3, 4), (16, 2, 4)] {
            let crude = petersson_tail_bound(w, m, n, 200);
            let sharp = petersson_tail_bound_summed(w, m, n, 200);
            let a = petersson_sums(w, &[(m, n)], 200, &c).unwrap().remove(0);
            let b = petersson_sums(w, &[(m, n)], 1600, &c).unwrap().remove(0);
            let moved = Float::with_val(128, a - b).abs().to_f64();
            assert!(moved <= sharp && sharp <= crude, "{w} ({m},{n}): {moved:e} {sharp:e} {crude:e}");
        }
    }

    #[test]
    fn petersson_pairs_and_tail() {
        let c = ctx();
        let sp16 = build_form_space(16, Some(40), Some(200), &c).unwrap();
        let chk = petersson_residual(&sp16.forms, 2, 2, 200, &c).unwrap();
        assert!(chk.tail_bound <= 1e-15 && chk.residual <= chk.tail_bound.max(1e-60), "{chk:?}");
        let sp12 = build_form_space(12, Some(40), Some(300), &c).unwrap();
        let chk = petersson_residual(&sp12.forms, 1, 4, 300, &c).unwrap();
        assert!(chk.tail_bound <= 1e-15 && chk.residual <= chk.tail_bound, "{chk:?}");
        // halving c_max scales the bound by 2^{ν−1}
        let r = petersson_tail_bound(12, 1, 4, 100) / petersson_tail_bound(12, 1, 4, 200);
        assert!((r / 2f64.powi(10) - 1.0).abs() < 1e-9);
        let s = petersson_sums(12, &[(1, 1)], 1, &c).unwrap().remove(0);
        let j = bessel_j(&Float::with_val(256, 11), &Float::with_val(256, mp::pi(256) * 4u32), &c).unwrap();
        let want = j * Float::with_val(256, mp::pi(256) * 2u32);
        assert!(Float::with_val(256, s - want).abs() < 1e-70);
    }

    #[test]
    fn harmonic_pair_sets_agree() {
        let c = ctx();
        for w in [24u32, 36, 40] {
            let forms = hecke_eigenforms(w, 40, &c).unwrap();
            let (p1, p2) = pair_sets(forms.len());
            let a = harmonic_weights_from_pairs(&forms, &p1, &p2, 300, &c).unwrap();
            let b = harmonic_weights_from_pairs(&forms, &p2, &p1, 300, &c).unwrap();
            for (x, y) in a.omega.iter().zip(&b.omega) {
                assert!(Float::with_val(256, x - y).abs() < 1e-15, "w = {w}");
                assert!(*x > 0);
            }
            let total: f64 = a.omega.iter().map(|x| x.to_f64()).sum();
            let rhs = petersson_sums(w, &[(1, 1)], 300, &c).unwrap().remove(0) + 1u32;
            assert!((total - rhs.to_f64()).abs() < 1e-15);
        }
    }

    #[test]
    fn central_value_split_invariance() {
        let c = ctx();
        let sp = build_form_space(12, None, Some(200), &c).unwrap();
        let f = &sp.forms[0];
        let base = AfeConfig::for_context(&c);
        let v1 = central_value(f, &base, &c).unwrap();
        for x in [0.8, 1.25, 0.5, 2.0] {
            let v = central_value(f, &base.with_split(x), &c).unwrap();
            assert!(Float::with_val(256, &v - &v1).abs() < 1e-25, "X = {x}");
        }
        assert!(v1 > 0);
        let half = Complex::with_val(256, (0.5, 0));
        let lv = l_value(f, &half, &base, &c).unwrap();
        assert!(Complex::with_val(256, lv - &v1).abs().real().to_f64() < 1e-25);
    }

    #[test]
    fn odd_k_vanishes() {
        let c = ctx();
        let sp = build_form_space(18, None, Some(100), &c).unwrap();
        for f in &sp.forms {
            assert_eq!(central_value(f, &AfeConfig::for_context(&c), &c).unwrap(), 0);
        }
    }

    #[test]
    fn l_value_against_dirichlet_series() {
        // at s = 12 the direct series over n ≤ 200 has tail below 1e-22
        let c = ctx();
        let forms = hecke_eigenforms(12, 200, &c).unwrap();
        let f = &forms[0];
        let s = Complex::with_val(256, (12, 0));
        let afe = l_value(f, &s, &AfeConfig::for_context(&c), &c).unwrap();
        let mut direct = Float::new(256);
        for n in 1..=200usize {
            direct += Float::with_val(256, &f.lambda[n] / Float::with_val(256, n).pow(12u32));
        }
        assert!(Float::with_val(256, afe.real() - &direct).abs() < 1e-20);
        assert!(afe.imag().to_f64().abs() < 1e-60);
        // complex s, split invariance
        let s = Complex::with_val(256, (0.8, 0.3));
        let a = l_value(f, &s, &AfeConfig::for_context(&c), &c).unwrap();
        let b = l_value(f, &s, &AfeConfig::for_context(&c).with_split(1.3), &c).unwrap();
        assert!(Complex::with_val(256, a - b).abs().real().to_f64() < 1e-25);
    }

    #[test]
    fn l_product_identity() {
        // Σ τ_v(n)λ(n)n^{−1/2−u} = L(1/2+u+v)L(1/2+u−v)/ζ(1+2u) at u = 4.5
        let c = ctx();
        let forms = hecke_eigenforms(12, 400, &c).unwrap();
        let f = &forms[0];
        let u = Complex::with_val(256, (4.5, 0));
        let v = Complex::with_val(256, (0, 0.3));
        let mut series = Complex::new(256);
        for n in 1..=400usize {
            let t = divisor_tau(n as u64, &v, &c) * &f.lambda[n];
            let e = Complex::with_val(256, -Complex::with_val(256, &u + 0.5));
            series += t * mp::rpow(&Float::with_val(256, n), &e);
        }
        let cfg = AfeConfig::for_context(&c);
        let s1 = Complex::with_val(256, Complex::with_val(256, &u + 0.5) + &v);
        let s2 = Complex::with_val(256, Complex::with_val(256, &u + 0.5) - &v);
        let z = riemann_zeta(&Complex::with_val(256, Complex::with_val(256, &u * 2u32) + 1u32), &c).unwrap();
        let prod = l_value(f, &s1, &cfg, &c).unwrap() * l_value(f, &s2, &cfg, &c).unwrap() / z;
        assert!(Complex::with_val(256, series - prod).abs().real().to_f64() < 1e-8);
    }

    #[test]
    fn truncation_errors() {
        let c = ctx();
        let forms = hecke_eigenforms(12, 30, &c).unwrap();
        let cfg = AfeConfig { split: 1.0, n_terms: Some(3), target_tol: 1e-40 };
        assert!(matches!(central_value(&forms[0], &cfg, &c), Err(Error::TruncationInsufficient(_))));
        let cfg = AfeConfig { split: 1.0, n_terms: None, target_tol: 1e-300 };
        assert!(matches!(central_value(&forms[0], &cfg, &c), Err(Error::TruncationInsufficient(_))));
    }

    #[test]
    fn sym2_round_trip_and_fixture() {
        let c = ctx();
        let sp = build_form_space(12, None, Some(300), &c).unwrap();
        let f = &sp.forms[0];
        let l = f.sym2_at_1.clone().unwrap();
        assert!(l > 0);
        let pi2 = Float::with_val(256, mp::pi(256).square_ref());
        let back = pi2 * 2u32 / (Float::with_val(256, &l * 11u32));
        assert!(Float::with_val(256, back - f.omega().unwrap()).abs() < 1e-70);
        let r = sym2_dimension_residual(f, &c).unwrap();
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!(r <= 2.0 * (1.0 - 11.0 / 12.0f64).abs() * l.to_f64() / zeta2 + 1e-12);
        let fx = sp.to_fixture();
        let js = serde_json::to_string(&fx).unwrap();
        let back: FormSpaceFixture = serde_json::from_str(&js).unwrap();
        let sp2 = FormSpace::from_fixture(&back).unwrap();
        assert_eq!(sp2.forms[0].lambda[7], f.lambda[7]);
        assert_eq!(sp2.forms[0].omega, f.omega);
    }
}
