//! Command-line surface. Every command produces a table whose numeric cells
//! are decimal strings, written as CSV or JSON, plus a run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::{Complex, Float};
use serde::Serialize;

use crate::acceptance;
use crate::error::{Error, Result};
use crate::kernels::{big_phi_k, ode_residual, phi_k, phi_k_uv, psi_k, KernelParams, OdeForm};
use crate::lgreen::{error_order_fit, lg_constants, lg_error_level, lg_transform, LgCase};
use crate::modforms::{build_form_space, form_space, install_form_space, petersson_residual, FormSpace, FormSpaceFixture};
use crate::moments::{
    averaged_moments, error_term_bounds, first_moment_exact, mollified_moments, nonvanishing_report, oracle_budget,
    second_moment_exact, second_moment_exact_uv, second_moment_grid, MollifierConfig, TestWeight,
};
use crate::mp::{self, PrecisionContext};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_COMPUTATION: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "moment-lab", version, about = "Moments of level-1 L-functions in the weight aspect")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum CaseArg {
    Osc,
    Exp,
}

impl From<CaseArg> for LgCase {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::Osc => LgCase::Oscillatory,
            CaseArg::Exp => LgCase::Exponential,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    #[arg(long, global = true, default_value_t = 256)]
    pub prec_bits: u32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Directory for the report and manifest; stdout/stderr when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Directory of weight_<w>.json oracle fixtures (overrides MOMENT_LAB_FIXTURES).
    #[arg(long, global = true)]
    pub fixtures: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Default)]
pub struct Params {
    #[arg(long)]
    pub weight: Option<String>,
    #[arg(long)]
    pub ell: Option<String>,
    #[arg(long = "k-list", alias = "k")]
    pub k_list: Option<String>,
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long = "N")]
    pub n_order: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<String>,
    #[arg(long = "K")]
    pub big_k: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub c_max: Option<u64>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long, value_enum)]
    pub case: Option<CaseArg>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel values and ODE residuals.
    Kernels {
        #[command(subcommand)]
        op: KernelOp,
    },
    /// Liouville-Green transform, constants and error orders.
    Lg {
        #[command(subcommand)]
        op: LgOp,
    },
    /// Eigenform oracle: forms, harmonic weights, Petersson check.
    Oracle {
        #[command(subcommand)]
        op: OracleOp,
    },
    /// Exact and asymptotic moment formulas against the oracle.
    Moments {
        #[command(subcommand)]
        op: MomentOp,
    },
    /// Mollified first and second moments.
    Mollify(Params),
    /// Non-vanishing proportion and mollifier lower bound.
    Nonvanishing(Params),
    /// Run acceptance criteria; exit 4 unless all pass.
    Acceptance {
        #[arg(long)]
        all: bool,
        /// Criterion ids to run (e.g. 1,5,14a).
        #[arg(long)]
        criteria: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum KernelOp {
    Eval(Params),
    OdeResidual(Params),
}

#[derive(Debug, Subcommand)]
pub enum LgOp {
    Transform(Params),
    Constants(Params),
    Compare(Params),
}

#[derive(Debug, Subcommand)]
pub enum OracleOp {
    Forms(Params),
    Weights(Params),
    VerifyPetersson(Params),
}

#[derive(Debug, Subcommand)]
pub enum MomentOp {
    Exact(Params),
    ExactUv(Params),
    First(Params),
    Averaged(Params),
    Bounds(Params),
}

/// An ordered table of string cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let esc = |s: &str| {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.columns.iter().map(|c| esc(c)).collect::<Vec<_>>().join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.iter().map(|c| esc(c)).collect::<Vec<_>>().join(","));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<BTreeMap<&str, &str>> =
            self.rows.iter().map(|r| self.columns.iter().map(String::as_str).zip(r.iter().map(String::as_str)).collect()).collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("string map serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, f: Format) -> String {
        match f {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Outcome of one command: the table and whether a certified bound was violated.
pub struct Outcome {
    pub table: Table,
    pub violation: bool,
    pub name: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub flags: serde_json::Value,
    pub prec_bits: u32,
    pub started_at: String,
    pub duration_ms: u128,
    pub git_describe: String,
}

fn dec(x: &Float) -> String {
    mp::to_decimal(x)
}

fn dec_f64(x: f64) -> String {
    format!("{x:e}")
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<T>().map_err(|_| Error::Config(format!("bad {what} value '{t}'"))))
        .collect()
}

fn need<'a>(v: &'a Option<String>, flag: &str) -> Result<&'a str> {
    v.as_deref().ok_or_else(|| Error::Config(format!("--{flag} is required")))
}

/// Parses "a", "bi", "a+bi" or "a-bi".
pub fn parse_complex(s: &str, prec: u32) -> Result<Complex> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Config(format!("bad complex number '{s}'"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        let re: f64 = t.parse().map_err(|_| bad())?;
        return Ok(Complex::with_val(prec, (re, 0)));
    };
    // split at the last sign that is not part of an exponent or the leading sign
    let bytes = body.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            split = Some(i);
            break;
        }
    }
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        x => x,
    };
    let re: f64 = re.parse().map_err(|_| bad())?;
    let im: f64 = im.parse().map_err(|_| bad())?;
    Ok(Complex::with_val(prec, (re, im)))
}

fn fixture_dir(common: &Common) -> Option<PathBuf> {
    common.fixtures.clone().or_else(|| std::env::var_os("MOMENT_LAB_FIXTURES").map(PathBuf::from))
}

/// Installs every weight_<w>.json fixture in `dir` into the form-space cache.
pub fn load_fixtures(dir: &Path) -> Result<usize> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut n = 0;
    let mut paths: Vec<PathBuf> = rd.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    for p in paths {
        let name = p.file_name().and_then(|s| s.to_str()).unwrap_or_default();
        if !(name.starts_with("weight_") && name.ends_with(".json")) {
            continue;
        }
        let text = std::fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        let fx: FormSpaceFixture = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
        install_form_space(FormSpace::from_fixture(&fx)?);
        n += 1;
    }
    Ok(n)
}

pub fn write_fixture(space: &FormSpace, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(e.to_string()))?;
    let p = dir.join(format!("weight_{}.json", space.weight));
    let text = serde_json::to_string_pretty(&space.to_fixture()).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(&p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
    Ok(p)
}

fn weights(p: &Params) -> Result<Vec<u32>> {
    parse_list(need(&p.weight, "weight")?, "weight")
}

fn ells(p: &Params) -> Result<Vec<u64>> {
    match &p.ell {
        Some(s) => parse_list(s, "ell"),
        None => Ok(vec![1]),
    }
}

fn shifts(p: &Params, prec: u32) -> Result<(Complex, Complex)> {
    let u = match &p.u {
        Some(s) => parse_complex(s, prec)?,
        None => Complex::new(prec),
    };
    let v = match &p.v {
        Some(s) => parse_complex(s, prec)?,
        None => Complex::new(prec),
    };
    Ok((u, v))
}

fn kernels_eval(p: &Params, ctx: &PrecisionContext) -> Result<Outcome> {
    let ks: Vec<u32> = parse_list(need(&p.k_list, "k-list")?, "k")?;
    let xs: Vec<f64> = parse_list(need(&p.x, "x")?, "x")?;
    let (u, v) = shifts(p, ctx.prec())?;
    let central = u.is_zero() && v.is_zero();
    let mut t = Table::new(&["k", "x", "phi_re", "phi_im", "Phi_re", "Phi_im", "psi_re", "psi_im"]);
    for &k in &ks {
        let kp = KernelParams::new(k, u.clone(), v.clone())?;
        for &x in &xs {
            let xf = ctx.f(x);
            let phi = if central { phi_k(&xf, k, ctx)?.value } else { phi_k_uv(&xf, &kp, ctx)? };
            let big = big_phi_k(&xf, &kp, ctx)?.value;
            let psi = psi_k(&xf, &kp, ctx)?.value;
            t.push(vec![
                k.to_string(),
                x.to_string(),
                dec(phi.real()),
                dec(phi.imag()),
                dec(big.real()),
                dec(big.imag()),
                dec(psi.real()),
                dec(psi.imag()),
            ]);
        }
    }
    Ok(Outcome { table: t, violation: false, name: "kernels eval" })
}

fn kernels_ode(p: &Params, ctx: &PrecisionContext) -> Result<Outcome> {
    let ks: Vec<u32> = parse_list(need(&p.k_list, "k-list")?, "k")?;
    let xs: Vec<f64> = parse_list(need(&p.x, "x")?, "x")?;
    let mut t = Table::new(&["k", "x", "form", "relative_residual"]);
    for &k in &ks {
        for &x in &xs {
            for (name, form) in [("phi", OdeForm::Phi), ("y", OdeForm::YForm), ("hypergeometric", OdeForm::PhiForm)] {
                let r = ode_residual(form, &ctx.f(x), k, ctx)?;
                t.push(vec![k.to_string(), x.to_string(), name.into(), dec_f64(r)]);
            }
        }
    }
    Ok(Outcome { table: t, violation: false, name: "kernels ode-residual" })
}

fn lg_transform_cmd(p: &Params, ctx: &PrecisionContext) -> Result<Outcome> {
    let case: LgCase = p.case.unwrap_or(CaseArg::Osc).into();
    let xs: Vec<f64> = parse_list(need(&p.x, "x")?, "x")?;
    let mut t = Table::new(&["x", "xi", "alpha"]);
    for &x in &xs {
        let r = lg_transform(case, &ctx.f(x), ctx)?;
        t.push(vec![x.to_string(), dec(&r.xi), dec(&r.alpha)]);
    }
    Ok(Outcome { table: t, violation: false, name: "lg transform" })
}

fn lg_constants_cmd(p: &Params, ctx: &PrecisionContext) -> Result<Outcome> {
    let ks: Vec<u32> = parse_list(need(&p.k_list, "k-list")?, "k")?;
    let mut t = Table::new(&["k", "C_Y", "C_J", "C_K"]);
    for &k in &ks {
        let c = lg_constants(k, ctx)?;
        t.push(vec![k.to_string(), dec(&c.c_y), dec(&c.c_j), dec(&c.c_k)]);
    }
    Ok(Outcome { table: t, violation: false, name: "lg constants" })
}

fn lg_compare(p: &Params, ctx: &PrecisionContext) -> Result<Outcome> {
    let case: LgCase = p.case.unwrap_or(CaseArg::Osc).into();
    let ks: Vec<u32> = parse_list(need(&p.k_list, "k-list")?, "k")?;
    let x: f64 = need(&p.x, "x")?.parse().map_err(|_| Error::Config("bad --x".into()))?;
    let n = p.n_order.unwrap_or(1);
    let xf = ctx.f(x);
    let mut t = Table::new(&["k", "u", "error_level", "fitted_slope"]);
    for &k in &ks {
        let e = lg_error_level(case, n, k, &xf, ctx)?;
        t.push(vec![k.to_string(), (k as f64 - 0.5).to_string(), dec_f64(e), String::new()]);
    }
    let slope = error_order_fit(case, n, &ks, &xf, ctx)?;
    t.push(vec!["fit".into(), String::new(), String::new(), format!("{slope:.6}")]);
    Ok(Outcome { table: t, violation: false, name: "lg compare" })
}

fn space_for(w: u32, p: &Params, ctx: &PrecisionContext) -> Result<std::sync::Arc<FormSpace>> {
    if p.n_max.is_some() || p.c_max.is_some() {
        Ok(std::sync::Arc::new(build_form_space(w, p.n_max, p.c_max, ctx)?))
    } else {
        form_space(w, ctx)
    }
}

fn oracle_forms(p: &Params, common: &Common, ctx: &PrecisionContext) -> Result<Outcome> {
    let mut t = Table::new(&["weight", "form", "lambda_2", "omega", "L_half", "sym2_at_1"]);
    for w in weights(p)? {
        let sp = space_for(w, p, ctx)?;
        for (i, f) in sp.forms.iter().enumerate() {
            let opt = |x: &Option<Float>| x.as_ref().map(dec).unwrap_or_default();
            t.push(vec![w.to_string(), i.to_string(), dec(&f.lambda[2]), opt(&f.omega), opt(&f.central_value), opt(&f.sym2_at_1)]);
        }
        if let Some(dir) = &common.out {
            write_fixture(&sp, &dir.join("fixtures"))?;
        }
    }
    Ok(Outcome { table: t, violation: false, name: "oracle forms" })
}

fn oracle_weights(p: &Params, ctx: &PrecisionContext) -> Result<Outcome> {
    let mut t = Table::new(&["weight", "form", "omega", "c_max", "heldout_residual", "condition_number", "petersson_tail"]);
    for w in weights(p)? {
        let sp = space_for(w, p, ctx)?;
        for (i, f) in sp.forms.iter().enumerate() {
            t.push(vec![
                w.to_string(),
                i.to_string(),
                dec(f.omega()?),
                sp.c_max.to_string(),
                dec_f64(sp.heldout_residual),
                dec_f64(sp.condition_number),
                dec_f64(sp.petersson_tail),
            ]);
        }
    }
    Ok(Outcome { table: t, violation: false, name: "oracle weights" })
}

fn oracle_verify(p: &Params, ctx: &PrecisionContext) -> Result<Outcome> {
    let c_max = p.c_max.unwrap_or(200);
    let mut t = Table::new(&["weight", "m", "n", "c_max", "residual", "tail_bound", "omega_budget", "within_bound"]);
    let mut bad = false;
    for w in weights(p)? {
        let sp = form_space(w, ctx)?;
        for m in 1..=4u64 {
            for n in m..=4u64 {
                let chk = petersson_residual(&sp.forms, m, n, c_max, ctx)?;
                let mag: f64 =
                    sp.forms.iter().map(|f| Float::with_val(64, &f.lambda[m as usize] * &f.lambda[n as usize]).abs().to_f64()).sum();
                let ob = oracle_budget(&sp, mag);
                let ok = chk.residual <= chk.tail_bound + ob;
                bad |= !ok;
                t.push(vec![
                    w.to_string(),
                    m.to_string(),
                    n.to_string(),
                    c_max.to_string(),
                    dec_f64(chk.residual),
                    dec_f64(chk.tail_bound),
                    dec_f64(ob),
                    ok.to_string(),
                ]);
            }
        }
    }
    Ok(Outcome { table: t, violation: bad, name: "oracle verify-petersson" })
}

fn moments_exact(p: &Params, ctx: &PrecisionContext) -> Result<Outcome> {
    let mut pts = Vec::new();
    for w in weights(p)? {
        for l in ells(p)? {
            pts.push((l, w));
        }
    }
    let reps = if pts.len() == 1 { vec![second_moment_exact(pts[0].0, pts[0].1, ctx)?] } else { second_moment_grid(&pts, ctx)? };
    let mut t = Table::new(&[
        "l",
        "weight",
        "exact",
        "oracle",
        "residual",
        "main_term",
        "phi_sum",
        "Phi_sum",
        "certified_tail",
        "wall_time_ms",
    ]);
    let mut bad = false;
    for r in &reps {
        bad |= !r.within_budget();
        t.push(vec![
            r.l.to_string(),
            r.weight.to_string(),
            dec(&r.exact),
            dec(&r.oracle),
            dec_f64(r.residual),
            dec(&r.main_term),
            dec(&r.phi_sum),
            dec(&r.big_phi_sum),
            dec_f64(r.budget()),
            r.wall_time_ms.to_string(),
        ]);
    }
    Ok(Outcome { table: t, violation: bad, name: "moments exact" })
}

fn moments_uv(p: &Params, ctx: &PrecisionContext, first: bool) -> Result<Outcome> {
    let (u, v) = shifts(p, ctx.prec())?;
    let mut t = Table::new(&["l", "weight", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "residual", "certified_tail"]);
    let mut bad = false;
    for w in weights(p)? {
        for l in ells(p)? {
            let (lhs, rhs, res, tail) = if first {
                let r = first_moment_exact(l, w, &u, &v, ctx)?;
                (r.lhs, r.rhs, r.residual, r.certified_tail)
            } else {
                let r = second_moment_exact_uv(l, w, &u, &v, ctx)?;
                (r.lhs, r.rhs, r.residual, r.certified_tail)
            };
            // the oracle side carries its own ~1e-25 budget on top of the tail
            bad |= res > tail + 1e-20;
            t.push(vec![
                l.to_string(),
                w.to_string(),
                dec(lhs.real()),
                dec(lhs.imag()),
                dec(rhs.real()),
                dec(rhs.imag()),
                dec_f64(res),
                dec_f64(tail),
            ]);
        }
    }
    Ok(Outcome { table: t, violation: bad, name: if first { "moments first" } else { "moments exact-uv" } })
}

fn moments_averaged(p: &Params, ctx: &PrecisionContext) -> Result<Outcome> {
    let big_k = p.big_k.ok_or_else(|| Error::Config("--K is required".into()))?;
    let h = TestWeight::default();
    let mut t = Table::new(&[
        "l",
        "K",
        "weights",
        "A1_direct",
        "A1_predicted",
        "A2_direct",
        "A2_predicted",
        "A2_predicted_printed",
        "A2_error_shape",
    ]);
    for l in ells(p)? {
        let a = averaged_moments(l, big_k, &h, ctx)?;
        t.push(vec![
            l.to_string(),
            big_k.to_string(),
            a.weights.iter().map(u32::to_string).collect::<Vec<_>>().join(" "),
            dec(&a.a1_direct),
            dec(&a.a1_predicted),
            dec(&a.a2_direct),
            dec(&a.a2_predicted),
            dec(&a.a2_predicted_printed),
            dec_f64(a.a2_error_shape),
        ]);
    }
    Ok(Outcome { table: t, violation: false, name: "moments averaged" })
}

fn moments_bounds(p: &Params, ctx: &PrecisionContext) -> Result<Outcome> {
    let mut t = Table::new(&["l", "weight", "Phi_observed", "Phi_bound", "phi_observed", "phi_bound"]);
    let mut bad = false;
    for w in weights(p)? {
        for l in ells(p)? {
            let b = error_term_bounds(l, w, ctx)?;
            bad |= b.big_phi_observed > b.big_phi_bound || b.phi_observed > b.phi_bound;
            t.push(vec![
                l.to_string(),
                w.to_string(),
                dec_f64(b.big_phi_observed),
                dec_f64(b.big_phi_bound),
                dec_f64(b.phi_observed),
                dec_f64(b.phi_bound),
            ]);
        }
    }
    Ok(Outcome { table: t, violation: bad, name: "moments bounds" })
}

fn mollify(p: &Params, ctx: &PrecisionContext) -> Result<Outcome> {
    let cfg = MollifierConfig::new(p.delta.unwrap_or(0.2))?;
    let mut t = Table::new(&["weight", "M", "M1", "M1_pred", "M2", "M2_pred", "M1_tilde_bound", "outside_regime"]);
    for w in weights(p)? {
        let m = mollified_moments(w, &cfg, ctx)?;
        t.push(vec![
            w.to_string(),
            m.big_m.to_string(),
            dec(&m.m1),
            dec(&m.m1_pred),
            dec(&m.m2),
            dec(&m.m2_pred),
            dec(&m.m1_tilde_bound),
            m.outside_regime.to_string(),
        ]);
    }
    Ok(Outcome { table: t, violation: false, name: "mollify" })
}

fn nonvanishing(p: &Params, ctx: &PrecisionContext) -> Result<Outcome> {
    let cfg = MollifierConfig::new(p.delta.unwrap_or(0.2))?;
    let mut t = Table::new(&["weight", "threshold", "proportion_observed", "proportion_harmonic", "lower_bound", "best_delta"]);
    let mut bad = false;
    for w in weights(p)? {
        let r = nonvanishing_report(w, &cfg, ctx)?;
        bad |= r.lower_bound > r.proportion_observed;
        t.push(vec![
            w.to_string(),
            dec_f64(r.threshold),
            dec_f64(r.proportion_observed),
            dec_f64(r.proportion_harmonic),
            dec_f64(r.lower_bound),
            r.best_delta.to_string(),
        ]);
    }
    Ok(Outcome { table: t, violation: bad, name: "nonvanishing" })
}

fn acceptance_cmd(all: bool, ids: &Option<String>, ctx: &PrecisionContext) -> Result<Outcome> {
    let chosen: Vec<&acceptance::Criterion> = match (all, ids) {
        (_, Some(s)) => {
            let mut v = Vec::new();
            for id in s.split(',').map(str::trim) {
                v.push(acceptance::find(id).ok_or_else(|| Error::Config(format!("unknown criterion '{id}'")))?);
            }
            v
        }
        (true, None) => acceptance::CRITERIA.iter().collect(),
        (false, None) => return Err(Error::Config("pass --all or --criteria".into())),
    };
    let mut t = Table::new(&["criterion", "title", "passed", "detail", "duration_ms"]);
    let mut bad = false;
    for c in chosen {
        let r = acceptance::run(c, ctx);
        eprintln!("{}", r.line());
        bad |= !r.passed;
        t.push(vec![r.id.into(), r.title.into(), r.passed.to_string(), r.detail.clone(), r.duration_ms.to_string()]);
    }
    Ok(Outcome { table: t, violation: bad, name: "acceptance" })
}

fn dispatch(cli: &Cli, ctx: &PrecisionContext) -> Result<Outcome> {
    match &cli.command {
        Command::Kernels { op } => match op {
            KernelOp::Eval(p) => kernels_eval(p, ctx),
            KernelOp::OdeResidual(p) => kernels_ode(p, ctx),
        },
        Command::Lg { op } => match op {
            LgOp::Transform(p) => lg_transform_cmd(p, ctx),
            LgOp::Constants(p) => lg_constants_cmd(p, ctx),
            LgOp::Compare(p) => lg_compare(p, ctx),
        },
        Command::Oracle { op } => match op {
            OracleOp::Forms(p) => oracle_forms(p, &cli.common, ctx),
            OracleOp::Weights(p) => oracle_weights(p, ctx),
            OracleOp::VerifyPetersson(p) => oracle_verify(p, ctx),
        },
        Command::Moments { op } => match op {
            MomentOp::Exact(p) => moments_exact(p, ctx),
            MomentOp::ExactUv(p) => moments_uv(p, ctx, false),
            MomentOp::First(p) => moments_uv(p, ctx, true),
            MomentOp::Averaged(p) => moments_averaged(p, ctx),
            MomentOp::Bounds(p) => moments_bounds(p, ctx),
        },
        Command::Mollify(p) => mollify(p, ctx),
        Command::Nonvanishing(p) => nonvanishing(p, ctx),
        Command::Acceptance { all, criteria } => acceptance_cmd(*all, criteria, ctx),
    }
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

fn flags_json(cli: &Cli) -> serde_json::Value {
    let params = |p: &Params| serde_json::to_value(p).unwrap_or_default();
    let inner = match &cli.command {
        Command::Kernels { op: KernelOp::Eval(p) | KernelOp::OdeResidual(p) }
        | Command::Lg { op: LgOp::Transform(p) | LgOp::Constants(p) | LgOp::Compare(p) }
        | Command::Oracle { op: OracleOp::Forms(p) | OracleOp::Weights(p) | OracleOp::VerifyPetersson(p) }
        | Command::Moments { op: MomentOp::Exact(p) | MomentOp::ExactUv(p) | MomentOp::First(p) | MomentOp::Averaged(p) | MomentOp::Bounds(p) }
        | Command::Mollify(p)
        | Command::Nonvanishing(p) => params(p),
        Command::Acceptance { all, criteria } => serde_json::json!({ "all": all, "criteria": criteria }),
    };
    serde_json::json!({ "params": inner, "common": serde_json::to_value(&cli.common).unwrap_or_default() })
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let started = chrono::Utc::now();
    let t0 = Instant::now();
    if cli.common.prec_bits < 64 {
        eprintln!("error: --prec-bits must be at least 64");
        return EXIT_CONFIG;
    }
    let ctx = PrecisionContext::new(cli.common.prec_bits);
    if let Some(dir) = fixture_dir(&cli.common) {
        if dir.is_dir() {
            if let Err(e) = load_fixtures(&dir) {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
        }
    }
    let outcome = match dispatch(&cli, &ctx) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                Error::Config(_) | Error::Io(_) => EXIT_CONFIG,
                _ => EXIT_COMPUTATION,
            };
        }
    };
    let manifest = Manifest {
        command: outcome.name.to_string(),
        flags: flags_json(&cli),
        prec_bits: cli.common.prec_bits,
        started_at: started.to_rfc3339(),
        duration_ms: t0.elapsed().as_millis(),
        git_describe: git_describe(),
    };
    let body = outcome.table.render(cli.common.format);
    let manifest_text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    match &cli.common.out {
        Some(dir) => {
            let ext = match cli.common.format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            let res = std::fs::create_dir_all(dir)
                .and_then(|_| std::fs::write(dir.join(format!("report.{ext}")), &body))
                .and_then(|_| std::fs::write(dir.join("manifest.json"), &manifest_text));
            if let Err(e) = res {
                eprintln!("error: {}: {e}", dir.display());
                return EXIT_CONFIG;
            }
        }
        None => {
            print!("{body}");
            eprintln!("{}", serde_json::to_string(&manifest).expect("manifest serializes"));
        }
    }
    if outcome.violation {
        eprintln!("certified bound or acceptance check violated");
        return EXIT_ACCEPTANCE;
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        let z = parse_complex("0.2i", 64).unwrap();
        assert_eq!((z.real().to_f64(), z.imag().to_f64()), (0.0, 0.2));
        let z = parse_complex("0.1-0.3i", 64).unwrap();
        assert_eq!((z.real().to_f64(), z.imag().to_f64()), (0.1, -0.3));
        let z = parse_complex("-1e-3+2e-2i", 64).unwrap();
        assert_eq!((z.real().to_f64(), z.imag().to_f64()), (-1e-3, 2e-2));
        let z = parse_complex("-i", 64).unwrap();
        assert_eq!(z.imag().to_f64(), -1.0);
        assert_eq!(parse_complex("0.75", 64).unwrap().real().to_f64(), 0.75);
        assert!(parse_complex("abc", 64).is_err());
    }

    #[test]
    fn table_rendering() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.to_csv(), "a,b\n1,\"x,y\"\n");
        let j: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(j[0]["b"], "x,y");
    }

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from(["moment-lab", "moments", "exact", "--weight", "12", "--ell", "1", "--format", "json"]).unwrap();
        assert_eq!(cli.common.format, Format::Json);
        assert!(matches!(cli.command, Command::Moments { op: MomentOp::Exact(_) }));
        let cli = Cli::try_parse_from(["moment-lab", "lg", "compare", "--case", "osc", "--k", "20,40,80", "--x", "0.3", "--N", "1"]).unwrap();
        assert!(matches!(cli.command, Command::Lg { op: LgOp::Compare(ref p) } if p.k_list.as_deref() == Some("20,40,80")));
        let cli = Cli::try_parse_from(["moment-lab", "moments", "exact-uv", "--weight", "12", "--u", "0.1", "--v", "-0.2i"]).unwrap();
        assert!(matches!(cli.command, Command::Moments { op: MomentOp::ExactUv(ref p) } if p.v.as_deref() == Some("-0.2i")));
    }
}
