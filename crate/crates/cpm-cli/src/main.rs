//! `cpm`: run the checks and computations of cpm-core from the command line.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 size guard,
//! 4 verification failure.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use cpm_core::combi::{appendix_check, identity_check};
use cpm_core::drinfeld::{
    degree_formula, drinfeld_projection, lambda_counts, reciprocal_sector, root_transforms, solve_roots,
};
use cpm_core::formfactor::{
    build_input, dhat_closed, dhat_det, dhat_sum, order_param_sq, ordered_pair, DetOptions, Method, SectorRoots,
};
use cpm_core::lattice::{diagnostics, LatticeOracle};
use cpm_core::util::{float_to_decimal, parse_float};
use cpm_core::CpmError;
use rug::Float;
use serde::Serialize;
use serde_json::{json, Value};

const SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "cpm", version, about = "Superintegrable chiral Potts order-parameter toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Sum,
    Det,
    Closed,
    All,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Sum => Method::Sum,
            MethodArg::Det => Method::Det,
            MethodArg::Closed => Method::Closed,
            MethodArg::All => Method::All,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args, Debug, Clone)]
struct Common {
    /// Number of spin states N
    #[arg(long = "N")]
    n: u32,
    /// Chain length L
    #[arg(long = "L")]
    l: Option<usize>,
    /// Working precision in bits
    #[arg(long, default_value_t = 128)]
    prec: u32,
    /// Output file (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact check of the 𝒢 table identity for all sectors and indices
    Identity {
        #[command(flatten)]
        common: Common,
        /// Include every (Q, P, ℓ, j) case in the report, not only failures
        #[arg(long)]
        all_cases: bool,
    },
    /// Exact checks of the generating function, 𝓘/𝓘̄ and 𝒰 relations
    Appendix {
        #[command(flatten)]
        common: Common,
        /// Random 𝓘/𝓘̄ pairs of length L on top of the exhaustive short ones
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Drinfeld polynomials, their roots and root transforms
    Drinfeld {
        #[command(flatten)]
        common: Common,
        /// Restrict to one sector
        #[arg(long = "Q")]
        q: Option<u32>,
        /// k' for the root transforms (decimal string)
        #[arg(long)]
        kp: Option<String>,
    },
    /// D̂_PQ by the subset sum, the determinant and the closed product
    Formfactor {
        #[command(flatten)]
        common: Common,
        /// Ket sector (lattice label)
        #[arg(long = "P")]
        p: u32,
        /// Bra sector (lattice label)
        #[arg(long = "Q")]
        q: u32,
        #[arg(long)]
        kp: String,
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
    },
    /// Finite-L order parameter 𝓜_r² and its limit
    Order {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        r: u32,
        #[arg(long)]
        kp: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Det)]
        method: MethodArg,
    },
    /// Lattice overlap products against the form-factor route
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        r: u32,
        #[arg(long)]
        kp: String,
        /// Agreement tolerance
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Pair correlation g_{2ℓ} from the lattice spectra
    Correlate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        r: u32,
        #[arg(long)]
        kp: String,
        /// Separations ℓ (comma separated)
        #[arg(long, value_delimiter = ',', default_values_t = vec![0u32, 1, 2, 4, 8, 16, 32, 64])]
        ell: Vec<u32>,
    },
    /// Order parameter over a list of chain lengths
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        r: u32,
        #[arg(long)]
        kp: String,
        /// Chain lengths (comma separated, ascending); defaults per N
        #[arg(long = "Ls", value_delimiter = ',')]
        ls: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value_t = MethodArg::Det)]
        method: MethodArg,
    },
    /// Commutation, Hermiticity and degeneracy diagnostics of the lattice oracle
    Diagnostics {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kp: String,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<CpmError> for Failure {
    fn from(e: CpmError) -> Self {
        let code = match e {
            CpmError::InvalidInput(_) | CpmError::DomainError(_) | CpmError::CurveMismatch { .. } => 2,
            CpmError::SizeGuard { .. } => 3,
            _ => 4,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: msg.into(),
    }
}

fn verification(msg: impl Into<String>) -> Failure {
    Failure {
        code: 4,
        message: msg.into(),
    }
}

type Outcome = std::result::Result<(), Failure>;

fn require_l(c: &Common) -> std::result::Result<usize, Failure> {
    c.l.ok_or_else(|| invalid("--L is required for this command"))
}

fn check_common(c: &Common) -> Outcome {
    if c.n < 2 {
        return Err(invalid(format!("--N must be ≥ 2, got {}", c.n)));
    }
    if c.prec < 64 {
        return Err(invalid(format!("--prec must be ≥ 64 bits, got {}", c.prec)));
    }
    if c.l == Some(0) {
        return Err(invalid("--L must be ≥ 1"));
    }
    Ok(())
}

/// k' as given: exact decimal string at `prec` bits plus an f64 for the lattice.
fn parse_kp(s: &str, prec: u32) -> std::result::Result<(Float, f64), Failure> {
    let f = parse_float(s, prec).ok_or_else(|| invalid(format!("--kp: cannot parse {s:?} as a decimal number")))?;
    if !(f > 0 && f < 1) {
        return Err(invalid(format!("--kp must lie in (0, 1), got {s}")));
    }
    let x = f.to_f64();
    Ok((f, x))
}

fn check_r(n: u32, r: u32) -> Outcome {
    if r < 1 || r >= n {
        return Err(invalid(format!("--r must lie in 1..{}, got {r}", n - 1)));
    }
    Ok(())
}

fn emit_json(common: &Common, value: Value) -> Outcome {
    let text = serde_json::to_string_pretty(&value).expect("JSON values serialize") + "\n";
    emit_text(common, &text)
}

fn emit_text(common: &Common, text: &str) -> Outcome {
    match &common.out {
        Some(path) => std::fs::write(path, text).map_err(|e| invalid(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| invalid(format!("cannot write to stdout: {e}")))
        }
    }
}

fn emit_csv<T: Serialize>(common: &Common, rows: &[T]) -> Outcome {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| invalid(format!("CSV serialization failed: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| invalid(format!("CSV serialization failed: {e}")))?;
    emit_text(common, &String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn header(command: &str, common: &Common) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("command".into(), json!(command));
    m.insert("N".into(), json!(common.n));
    if let Some(l) = common.l {
        m.insert("L".into(), json!(l));
    }
    m
}

fn run_identity(common: &Common, all_cases: bool) -> Outcome {
    let l = require_l(common)?;
    let rep = identity_check(common.n, l)?;
    let failures: Vec<_> = rep.cases.iter().filter(|c| !c.pass).collect();
    let mut m = header("identity", common);
    m.insert("checked".into(), json!(rep.checked));
    m.insert("failed".into(), json!(rep.failed));
    m.insert("pass".into(), json!(rep.all_pass()));
    m.insert("failures".into(), to_value(&failures));
    if all_cases {
        m.insert("cases".into(), to_value(&rep.cases));
    }
    emit_json(common, Value::Object(m))?;
    if let Some(c) = failures.first() {
        return Err(verification(format!(
            "identity fails at (Q={}, P={}, ℓ={}, j={}): {} ≠ {}",
            c.q, c.p, c.ell, c.j, c.lhs, c.rhs
        )));
    }
    Ok(())
}

fn run_appendix(common: &Common, samples: usize, seed: u64) -> Outcome {
    let l = require_l(common)?;
    let rep = appendix_check(common.n, l, samples, seed)?;
    let uqp_failures: Vec<_> = rep.uqp.cases.iter().filter(|c| !c.pass()).collect();
    let mut m = header("appendix", common);
    m.insert("pass".into(), json!(rep.all_pass()));
    m.insert("gen_function_checked".into(), json!(rep.gen_function_checked));
    m.insert("gen_function_failed".into(), to_value(&rep.gen_function_failed));
    m.insert("conjugation_failed".into(), to_value(&rep.conjugation_failed));
    m.insert("ibi_exhaustive_checked".into(), json!(rep.ibi_exhaustive_checked));
    m.insert("ibi_random_checked".into(), json!(rep.ibi_random_checked));
    m.insert("ibi_seed".into(), json!(seed));
    m.insert("ibi_failed".into(), to_value(&rep.ibi_failed));
    m.insert("uqp_checked".into(), json!(rep.uqp.checked));
    m.insert("uqp_failed".into(), to_value(&uqp_failures));
    emit_json(common, Value::Object(m))?;
    if let Some(n) = rep.gen_function_failed.first() {
        return Err(verification(format!("generating function closed form fails for n = {n:?}")));
    }
    if let Some(n) = rep.conjugation_failed.first() {
        return Err(verification(format!("conjugation relation fails for n = {n:?}")));
    }
    if let Some(r) = rep.ibi_failed.first() {
        return Err(verification(format!("𝓘/𝓘̄ relation fails for μ = {:?}, λ = {:?}", r.mu, r.lam)));
    }
    if let Some(c) = uqp_failures.first() {
        return Err(verification(format!(
            "𝒰 relations fail at (Q={}, P={}, ℓ={}, j={})",
            c.q, c.p, c.ell, c.j
        )));
    }
    Ok(())
}

fn run_drinfeld(common: &Common, q: Option<u32>, kp: Option<&str>) -> Outcome {
    let l = require_l(common)?;
    let n = common.n;
    let sectors: Vec<u32> = match q {
        Some(q) if q >= n => return Err(invalid(format!("--Q must lie in 0..{}", n - 1))),
        Some(q) => vec![q],
        None => (0..n).collect(),
    };
    let kp = kp.map(|s| parse_kp(s, common.prec)).transpose()?;
    let mut records = Vec::new();
    let mut roots_by_q = Vec::new();
    for &s in &sectors {
        let poly = lambda_counts(n, l, s)?;
        let proj = drinfeld_projection(n, l, s)?;
        // projection = N × counting, with nothing beyond the degree
        let expected: Vec<_> = poly.lambda.iter().map(|c| c * n).collect();
        let projection_ok = expected.len() <= proj.len()
            && proj
                .iter()
                .enumerate()
                .all(|(k, v)| *v == expected.get(k).cloned().unwrap_or_default());
        let degree_ok = poly.degree() == degree_formula(n, l, s);
        let roots = solve_roots(&poly, common.prec)?;
        let mut rec = serde_json::Map::new();
        rec.insert("Q".into(), json!(s));
        rec.insert("polynomial".into(), to_value(&poly));
        rec.insert("degree_formula_ok".into(), json!(degree_ok));
        rec.insert("projection_ok".into(), json!(projection_ok));
        rec.insert("reciprocal_sector".into(), json!(reciprocal_sector(n, l, s)));
        rec.insert("roots_w".into(), json!(roots.iter().map(float_to_decimal).collect::<Vec<_>>()));
        if let Some((k, _)) = &kp {
            rec.insert("transforms".into(), to_value(&root_transforms(s, &roots, k)?));
        }
        records.push(Value::Object(rec));
        roots_by_q.push((s, poly, roots));
        if !degree_ok || !projection_ok {
            emit_json(common, json!({"schema": SCHEMA, "command": "drinfeld", "sectors": records}))?;
            return Err(verification(format!(
                "sector Q={s}: degree formula {} / projection {}",
                if degree_ok { "ok" } else { "FAILS" },
                if projection_ok { "ok" } else { "FAILS" }
            )));
        }
    }
    // reciprocal pairing: roots of sector σ(Q) are the reciprocals of those of Q
    let mut pairing = Vec::new();
    if sectors.len() == n as usize {
        for (s, _, roots) in &roots_by_q {
            let t = reciprocal_sector(n, l, *s) as usize;
            let other = &roots_by_q[t].2;
            if other.len() != roots.len() {
                return Err(verification(format!("sectors {s} and {t} differ in degree")));
            }
            let mut worst = Float::new(common.prec);
            for (a, b) in roots.iter().zip(other.iter().rev()) {
                let d = (Float::with_val(common.prec, a * b) - 1u32).abs();
                if d > worst {
                    worst = d;
                }
            }
            pairing.push(json!({"Q": s, "partner": t, "max_residual": float_to_decimal(&worst)}));
            let bound = Float::with_val(common.prec, 1u32) >> (common.prec / 4);
            if worst > bound {
                return Err(verification(format!("reciprocal pairing {s} ↔ {t} off by {}", worst.to_f64())));
            }
        }
    }
    let mut m = header("drinfeld", common);
    m.insert("precision_bits".into(), json!(common.prec));
    if let Some((_, _)) = &kp {
        m.insert("kp".into(), json!(kp_string(kp.as_ref())));
    }
    m.insert("sectors".into(), Value::Array(records));
    m.insert("reciprocal_pairing".into(), Value::Array(pairing));
    emit_json(common, Value::Object(m))
}

fn kp_string(kp: Option<&(Float, f64)>) -> Option<String> {
    kp.map(|(f, _)| float_to_decimal(f))
}

fn rel_diff(a: &Float, b: &Float) -> f64 {
    let prec = a.prec();
    let d = Float::with_val(prec, a - b).abs();
    let s = Float::with_val(prec, a.abs_ref()).max(&Float::with_val(prec, b.abs_ref()));
    if s.is_zero() {
        0.0
    } else {
        (d / s).to_f64()
    }
}

fn run_formfactor(common: &Common, p: u32, q: u32, kp_s: &str, method: MethodArg) -> Outcome {
    let l = require_l(common)?;
    let n = common.n;
    if p >= n || q >= n {
        return Err(invalid(format!("--P and --Q must lie in 0..{}", n - 1)));
    }
    let (kp, _) = parse_kp(kp_s, 2 * common.prec)?;
    let input = build_input(n, l, p, q, &kp, common.prec)?;
    let det = dhat_det(&input, &DetOptions::default())?;
    let want_sum = matches!(method, MethodArg::Sum | MethodArg::All);
    let want_closed = matches!(method, MethodArg::Closed | MethodArg::All);
    let sum = if want_sum { Some(dhat_sum(&input)?) } else { None };
    let closed = if want_closed { dhat_closed(&input) } else { None };
    let chosen = match method {
        MethodArg::Sum => sum.clone().expect("computed"),
        MethodArg::Closed => closed
            .clone()
            .ok_or_else(|| invalid(format!("no closed form for m = {}, m' = {}", input.m(), input.mp())))?,
        _ => det.value.clone(),
    };
    let value = Float::with_val(input.prec, chosen.square_ref()) * &input.cc_product;
    let mut m = header("formfactor", common);
    m.insert("P".into(), json!(p));
    m.insert("Q".into(), json!(q));
    m.insert("kp".into(), json!(kp_s));
    m.insert("precision_bits".into(), json!(input.prec));
    m.insert("m".into(), json!(input.m()));
    m.insert("m_prime".into(), json!(input.mp()));
    m.insert("dhat_det".into(), json!(float_to_decimal(&det.value)));
    m.insert("dhat_sum".into(), json!(sum.as_ref().map(float_to_decimal)));
    m.insert("dhat_closed".into(), json!(closed.as_ref().map(float_to_decimal)));
    m.insert("cc_product".into(), json!(float_to_decimal(&input.cc_product)));
    m.insert("value".into(), json!(float_to_decimal(&value)));
    m.insert("orthogonality_residual".into(), json!(det.orthogonality_residual));
    m.insert("imag_residual".into(), json!(det.imag_residual));
    let mut problems = Vec::new();
    if let Some(s) = &sum {
        let d = rel_diff(s, &det.value);
        m.insert("sum_det_rel_diff".into(), json!(d));
        if !(d < 1e-10) {
            problems.push(format!("sum vs det differ by {d:e}"));
        }
    }
    if let Some(c) = &closed {
        let d = rel_diff(c, &det.value);
        m.insert("closed_det_rel_diff".into(), json!(d));
        if !(d < 1e-10) {
            problems.push(format!("closed vs det differ by {d:e}"));
        }
    }
    emit_json(common, Value::Object(m))?;
    if !problems.is_empty() {
        return Err(verification(format!("(N={n}, L={l}, P={p}, Q={q}, k'={kp_s}): {}", problems.join("; "))));
    }
    Ok(())
}

fn order_value(rep: &cpm_core::formfactor::OrderReport, kp_s: &str) -> Value {
    let mut v = to_value(&rep.to_json());
    if let Value::Object(m) = &mut v {
        m.insert("schema".into(), json!(SCHEMA));
        m.insert("command".into(), json!("order"));
        m.insert("kp".into(), json!(kp_s));
    }
    v
}

fn run_order(common: &Common, r: u32, kp_s: &str, method: MethodArg) -> Outcome {
    let l = require_l(common)?;
    check_r(common.n, r)?;
    let (kp, _) = parse_kp(kp_s, 2 * common.prec)?;
    let rep = order_param_sq(common.n, r, &kp, l, common.prec, method.into())?;
    if method == MethodArg::All {
        for t in &rep.terms {
            for (name, alt) in [("sum", &t.dhat_sum), ("closed", &t.dhat_closed)] {
                if let Some(a) = alt {
                    let d = rel_diff(a, &t.dhat_det);
                    if !(d < 1e-10) {
                        emit_json(common, order_value(&rep, kp_s))?;
                        return Err(verification(format!(
                            "(N={}, L={l}, Q={}, P={}): {name} vs det differ by {d:e}",
                            common.n, t.bra, t.ket
                        )));
                    }
                }
            }
        }
    }
    emit_json(common, order_value(&rep, kp_s))
}

#[derive(Serialize)]
struct OracleRow {
    #[serde(rename = "Q")]
    q: u32,
    #[serde(rename = "P")]
    p: u32,
    lattice: f64,
    formfactor: String,
    abs_diff: f64,
}

fn run_oracle(common: &Common, r: u32, kp_s: &str, tol: f64) -> Outcome {
    let l = require_l(common)?;
    let n = common.n;
    check_r(n, r)?;
    let (kp, kpf) = parse_kp(kp_s, 2 * common.prec)?;
    let oracle = LatticeOracle::new(n, l, kpf)?;
    if common.format == Format::Csv {
        return emit_csv(common, &oracle.spectral_rows(r));
    }
    let roots = SectorRoots::new(n, l, &kp, common.prec)?;
    let mut rows = Vec::new();
    for q in 0..n {
        let p = (q + n - r) % n;
        let (ket, bra) = ordered_pair(n, l, p, q);
        let input = roots.input(n, l, ket, bra, &kp)?;
        let det = dhat_det(&input, &DetOptions::default())?;
        let ff = Float::with_val(input.prec, det.value.square_ref()) * &input.cc_product;
        let lat = oracle.overlap_product(q, p)?;
        rows.push(OracleRow {
            q,
            p,
            lattice: lat,
            formfactor: float_to_decimal(&ff),
            abs_diff: (lat - ff.to_f64()).abs(),
        });
    }
    let worst = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    let mut m = header("oracle", common);
    m.insert("r".into(), json!(r));
    m.insert("kp".into(), json!(kp_s));
    m.insert("precision_bits".into(), json!(2 * common.prec));
    m.insert("tolerance".into(), json!(tol));
    m.insert("max_abs_diff".into(), json!(worst));
    m.insert("ground_state_defect".into(), json!(oracle.ground_state_defect));
    m.insert("rows".into(), to_value(&rows));
    emit_json(common, Value::Object(m))?;
    if let Some(bad) = rows.iter().find(|row| !(row.abs_diff < tol)) {
        return Err(verification(format!(
            "(N={n}, L={l}, Q={}, P={}, k'={kp_s}): lattice {} vs form factor {} (diff {:e})",
            bad.q, bad.p, bad.lattice, bad.formfactor, bad.abs_diff
        )));
    }
    Ok(())
}

fn run_correlate(common: &Common, r: u32, kp_s: &str, ells: &[u32]) -> Outcome {
    let l = require_l(common)?;
    check_r(common.n, r)?;
    let (_, kpf) = parse_kp(kp_s, common.prec)?;
    let oracle = LatticeOracle::new(common.n, l, kpf)?;
    let mean = oracle.mean_overlap(r)?;
    let mut rows = Vec::new();
    for &ell in ells {
        let (g, gi) = oracle.pair_correlation(r, ell)?;
        rows.push(json!({"ell": ell, "g": g, "imag": gi, "minus_limit": g - mean}));
    }
    let mut m = header("correlate", common);
    m.insert("r".into(), json!(r));
    m.insert("kp".into(), json!(kp_s));
    m.insert("mean_overlap".into(), json!(mean));
    m.insert("rows".into(), Value::Array(rows));
    emit_json(common, Value::Object(m))?;
    if let Some(&0) = ells.first() {
        let (g0, _) = oracle.pair_correlation(r, 0)?;
        if !((g0 - 1.0).abs() < 1e-10) {
            return Err(verification(format!("g at ℓ = 0 is {g0}, not 1")));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    #[serde(rename = "L")]
    l: usize,
    m: usize,
    m_prime: usize,
    finite_l: String,
    limit: String,
    abs_error: String,
    q_spread: String,
    runtime_ms: u128,
}

fn default_lengths(n: u32) -> Vec<usize> {
    if n == 2 {
        vec![8, 16, 30, 60]
    } else {
        vec![9, 18, 30, 60]
    }
}

fn run_sweep(common: &Common, r: u32, kp_s: &str, ls: Option<&[usize]>, method: MethodArg) -> Outcome {
    check_r(common.n, r)?;
    let ls: Vec<usize> = ls.map(|v| v.to_vec()).unwrap_or_else(|| default_lengths(common.n));
    if ls.is_empty() || ls.windows(2).any(|w| w[0] >= w[1]) || ls[0] == 0 {
        return Err(invalid("--Ls must be a nonempty ascending list of positive lengths"));
    }
    let (kp, _) = parse_kp(kp_s, 2 * common.prec)?;
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for &l in &ls {
        let start = Instant::now();
        let rep = order_param_sq(common.n, r, &kp, l, common.prec, method.into())?;
        let t0 = &rep.terms[0];
        errors.push(rep.abs_error());
        rows.push(SweepRow {
            l,
            m: t0.m,
            m_prime: t0.mp,
            finite_l: float_to_decimal(&rep.finite_l),
            limit: float_to_decimal(&rep.limit),
            abs_error: float_to_decimal(&rep.abs_error()),
            q_spread: float_to_decimal(&rep.spread),
            runtime_ms: start.elapsed().as_millis(),
        });
    }
    match common.format {
        Format::Csv => emit_csv(common, &rows)?,
        Format::Json => {
            let mut m = header("sweep", common);
            m.insert("r".into(), json!(r));
            m.insert("kp".into(), json!(kp_s));
            m.insert("precision_bits".into(), json!(2 * common.prec));
            m.insert("rows".into(), to_value(&rows));
            emit_json(common, Value::Object(m))?;
        }
    }
    if let Some(i) = (1..errors.len()).find(|&i| errors[i] > errors[i - 1]) {
        return Err(verification(format!(
            "error increases from L={} to L={} ({:e} → {:e})",
            ls[i - 1],
            ls[i],
            errors[i - 1].to_f64(),
            errors[i].to_f64()
        )));
    }
    Ok(())
}

fn run_diagnostics(common: &Common, kp_s: &str) -> Outcome {
    let l = require_l(common)?;
    let (_, kpf) = parse_kp(kp_s, common.prec)?;
    let rep = diagnostics(common.n, l, kpf)?;
    let mut m = header("diagnostics", common);
    m.insert("kp".into(), json!(kp_s));
    m.insert("report".into(), to_value(&rep));
    emit_json(common, Value::Object(m))?;
    for s in &rep.sectors {
        if !(s.commutator_rapidities < 1e-10 && s.commutator_hamiltonian < 1e-10 && s.hermiticity < 1e-10) {
            return Err(verification(format!("sector Q={} fails the commutation/Hermiticity checks: {s:?}", s.q)));
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Identity { common, all_cases } => {
            check_common(common)?;
            run_identity(common, *all_cases)
        }
        Command::Appendix { common, samples, seed } => {
            check_common(common)?;
            run_appendix(common, *samples, *seed)
        }
        Command::Drinfeld { common, q, kp } => {
            check_common(common)?;
            run_drinfeld(common, *q, kp.as_deref())
        }
        Command::Formfactor { common, p, q, kp, method } => {
            check_common(common)?;
            run_formfactor(common, *p, *q, kp, *method)
        }
        Command::Order { common, r, kp, method } => {
            check_common(common)?;
            run_order(common, *r, kp, *method)
        }
        Command::Oracle { common, r, kp, tol } => {
            check_common(common)?;
            run_oracle(common, *r, kp, *tol)
        }
        Command::Correlate { common, r, kp, ell } => {
            check_common(common)?;
            run_correlate(common, *r, kp, ell)
        }
        Command::Sweep { common, r, kp, ls, method } => {
            check_common(common)?;
            run_sweep(common, *r, kp, ls.as_deref(), *method)
        }
        Command::Diagnostics { common, kp } => {
            check_common(common)?;
            run_diagnostics(common, kp)
        }
    }
}

fn main() -> ExitCode {
    if let Ok(t) = std::env::var("THREADS") {
        match t.parse::<usize>() {
            Ok(n) if n > 0 => {
                // ignore the error if a pool already exists
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: THREADS must be a positive integer, got {t:?}");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
