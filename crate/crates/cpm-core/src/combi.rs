//! The combinatorial layer: K/K̄ coefficients, their generating functions,
//! the 𝒢 table, and exhaustive checks of the Appendix identities.
//!
//! Everything here is exact. Sums that would be astronomically large as
//! literal enumerations are organized as dynamic programs over lattice
//! sites; the literal enumerations are kept (and used by the tests) as the
//! independent route.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::cyclo::{pochhammer, CycNum, CycPoly, CycRing};
use crate::drinfeld::{composition_counts, lambda_counts, DrinfeldPoly};
use crate::error::{CpmError, Result};

/// Default cap on enumerated configurations.
pub const CONFIG_GUARD: u128 = 10_000_000;

/// An edge configuration (n_1,…,n_L), 0 ≤ n_j ≤ N−1, with its partial sums.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EdgeConfig {
    pub big_n: u32,
    pub n: Vec<u32>,
    /// N_j = Σ_{ℓ<j} n_ℓ
    pub prefix: Vec<u32>,
    /// N̄_j = Σ_{ℓ>j} n_ℓ
    pub suffix: Vec<u32>,
}

impl EdgeConfig {
    pub fn new(big_n: u32, n: Vec<u32>) -> Result<EdgeConfig> {
        if big_n < 2 {
            return Err(CpmError::InvalidInput(format!("N must be ≥ 2, got {big_n}")));
        }
        if let Some(bad) = n.iter().find(|&&v| v >= big_n) {
            return Err(CpmError::InvalidInput(format!(
                "edge variable {bad} outside 0..{}",
                big_n - 1
            )));
        }
        let total: u32 = n.iter().sum();
        let mut prefix = Vec::with_capacity(n.len());
        let mut acc = 0;
        for &v in &n {
            prefix.push(acc);
            acc += v;
        }
        let suffix = prefix
            .iter()
            .zip(&n)
            .map(|(&p, &v)| total - p - v)
            .collect();
        Ok(EdgeConfig {
            big_n,
            n,
            prefix,
            suffix,
        })
    }

    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }

    pub fn total(&self) -> u32 {
        self.n.iter().sum()
    }
}

/// All compositions of `total` into `l` parts in 0..N−1, lexicographic.
pub fn compositions(big_n: u32, l: usize, total: u32) -> Vec<Vec<u32>> {
    fn rec(big_n: u32, left: usize, rem: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            if rem == 0 {
                out.push(cur.clone());
            }
            return;
        }
        // prune: the remaining sites can absorb at most (N−1)·left
        if rem > (big_n - 1) * left as u32 {
            return;
        }
        for v in 0..big_n.min(rem + 1) {
            cur.push(v);
            rec(big_n, left - 1, rem - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(big_n, l, total, &mut Vec::with_capacity(l), &mut out);
    out
}

fn composition_count(big_n: u32, l: usize, total: u32) -> u128 {
    let c = composition_counts(big_n, l);
    c.get(total as usize)
        .map(|v| v.to_string().parse::<u128>().unwrap_or(u128::MAX))
        .unwrap_or(0)
}

/// Configurations with Σ n_j = total, guarded against runaway enumeration.
pub fn edge_configs(big_n: u32, l: usize, total: u32) -> Result<Vec<EdgeConfig>> {
    let count = composition_count(big_n, l, total);
    if count > CONFIG_GUARD {
        return Err(CpmError::guard(
            format!("enumeration of configurations with N={big_n}, L={l}, Σn={total}"),
            count,
            CONFIG_GUARD,
        ));
    }
    compositions(big_n, l, total)
        .into_iter()
        .map(|n| EdgeConfig::new(big_n, n))
        .collect()
}

fn ring_for(big_n: u32) -> Result<Arc<CycRing>> {
    CycRing::new(big_n)
}

/// Highest index with a possibly nonzero K_ℓ: (N−1)L − Σ n_j.
pub fn k_max_degree(config: &EdgeConfig) -> usize {
    ((config.big_n - 1) as usize * config.len()).saturating_sub(config.total() as usize)
}

/// Per-site factor Σ_{n'} [n_j+n', n']_ω ω^{n' e} t^{n'} of the K generating function.
fn site_factor(ring: &Arc<CycRing>, table: &[Vec<CycNum>], nj: u32, e: u32) -> CycPoly {
    let big_n = ring.n();
    let coeffs = (0..big_n)
        .map(|np| table[(nj + np) as usize][np as usize].mul_omega_pow((np * e) as i64))
        .collect();
    CycPoly::new(ring, coeffs)
}

/// (K_0..K_max, K̄_0..K̄_max) for a configuration, computed exactly.
///
/// The constrained sum over {n'_j} factorizes over sites, so the definition
/// is evaluated as a product of per-site polynomials (this is still the
/// defining sum, just distributed).
pub fn k_coeffs(config: &EdgeConfig, max_degree: usize) -> Result<(Vec<CycNum>, Vec<CycNum>)> {
    let top = k_max_degree(config);
    if max_degree > top {
        return Err(CpmError::InvalidInput(format!(
            "max_degree {max_degree} exceeds (N−1)L − Σn = {top}"
        )));
    }
    let ring = ring_for(config.big_n)?;
    let table = ring.gauss_table(2 * config.big_n as usize);
    let mut g = CycPoly::one(&ring);
    let mut gbar = CycPoly::one(&ring);
    for j in 0..config.len() {
        g = g.mul_trunc(
            &site_factor(&ring, &table, config.n[j], config.prefix[j]),
            max_degree,
        );
        gbar = gbar.mul_trunc(
            &site_factor(&ring, &table, config.n[j], config.suffix[j]),
            max_degree,
        );
    }
    let k = (0..=max_degree).map(|i| g.coeff(i)).collect();
    let kbar = (0..=max_degree).map(|i| gbar.coeff(i)).collect();
    Ok((k, kbar))
}

/// Literal enumeration of K_ℓ / K̄_ℓ over all {n'_j} with Σ n'_j = ℓ.
pub fn k_coeffs_enumerated(config: &EdgeConfig, max_degree: usize) -> Result<(Vec<CycNum>, Vec<CycNum>)> {
    let ring = ring_for(config.big_n)?;
    let table = ring.gauss_table(2 * config.big_n as usize);
    let mut k = Vec::with_capacity(max_degree + 1);
    let mut kbar = Vec::with_capacity(max_degree + 1);
    for ell in 0..=max_degree {
        let mut s = ring.zero();
        let mut sbar = ring.zero();
        for np in compositions(config.big_n, config.len(), ell as u32) {
            let mut term = ring.one();
            let mut ebar = 0i64;
            let mut e = 0i64;
            for j in 0..config.len() {
                term = &term * &table[(config.n[j] + np[j]) as usize][np[j] as usize];
                e += (np[j] * config.prefix[j]) as i64;
                ebar += (np[j] * config.suffix[j]) as i64;
            }
            s += &term.mul_omega_pow(e);
            sbar += &term.mul_omega_pow(ebar);
        }
        k.push(s);
        kbar.push(sbar);
    }
    Ok((k, kbar))
}

/// Power series of c(t)·Π (1 − a_i t)^{−1}, truncated at `max_deg`.
fn divide_by_linear_factors(num: CycPoly, roots: &[CycNum], max_deg: usize) -> CycPoly {
    let ring = Arc::clone(num.ring());
    let mut acc = num.truncate(max_deg);
    for a in roots {
        // multiply by Σ_k a^k t^k: running recurrence s_k = c_k + a s_{k−1}
        let mut out = Vec::with_capacity(max_deg + 1);
        let mut prev = ring.zero();
        for k in 0..=max_deg {
            let cur = &acc.coeff(k) + &(a * &prev);
            out.push(cur.clone());
            prev = cur;
        }
        acc = CycPoly::new(&ring, out);
    }
    acc
}

/// The K generating function by its definition and by its closed form.
#[derive(Clone, Debug)]
pub struct GenFunctionPair {
    pub definition: CycPoly,
    pub closed: CycPoly,
    /// ḡ from the K̄ definition; must equal the coefficient-wise conjugate of g.
    pub definition_bar: CycPoly,
}

impl GenFunctionPair {
    pub fn agree(&self) -> bool {
        self.definition == self.closed
    }

    pub fn conjugation_holds(&self) -> bool {
        let conj: Vec<CycNum> = self.definition.coeffs().iter().map(CycNum::conj).collect();
        CycPoly::new(self.definition.ring(), conj) == self.definition_bar
    }

    /// K̄_ℓ = ω^{ℓ s} (K_ℓ)^* with s = Σ n_j; reduces to plain conjugation when N | s.
    pub fn twisted_conjugation_holds(&self, total: u32) -> bool {
        let s = total as i64;
        let deg = self.definition.coeffs().len().max(self.definition_bar.coeffs().len());
        (0..deg).all(|ell| self.definition_bar.coeff(ell) == self.definition.coeff(ell).conj().mul_omega_pow(s * ell as i64))
    }
}

/// Closed form of g for an arbitrary configuration with Σ n_j = s:
///
///   g(t) = (1−t^N)^L · Π_{e=0}^{s} (1−ω^e t)^{−1} · Π_{j=2}^{L} (1−ω^{N_j} t)^{−1},
///
/// which for s = kN collapses to (1−t^N)^{L−k} Π_j (1−tω^{N_j})^{−1}; k = 1 is
/// the familiar (1−t^N)^{L−1} Π_j (1−tω^{N_j})^{−1}.
pub fn closed_generating_function(config: &EdgeConfig, max_deg: usize) -> Result<CycPoly> {
    let ring = ring_for(config.big_n)?;
    let big_n = config.big_n as usize;
    let s = config.total();
    let mut one_minus_tn = vec![ring.zero(); big_n + 1];
    one_minus_tn[0] = ring.one();
    one_minus_tn[big_n] = ring.int(-1);
    let base = CycPoly::new(&ring, one_minus_tn);
    let roots: Vec<CycNum>;
    let num;
    if s as usize % big_n == 0 {
        let k = s as usize / big_n;
        if k > config.len() {
            return Err(CpmError::InvalidInput("Σn exceeds (N−1)L".into()));
        }
        num = base.pow((config.len() - k) as u32);
        roots = config.prefix.iter().map(|&e| ring.omega_pow(e as i64)).collect();
    } else {
        num = base.pow(config.len() as u32);
        roots = (0..=s as i64)
            .map(|e| ring.omega_pow(e))
            .chain(config.prefix[1..].iter().map(|&e| ring.omega_pow(e as i64)))
            .collect();
    }
    Ok(divide_by_linear_factors(num, &roots, max_deg))
}

pub fn gen_function_pair(config: &EdgeConfig) -> Result<GenFunctionPair> {
    let ring = ring_for(config.big_n)?;
    let deg = k_max_degree(config);
    let (k, kbar) = k_coeffs(config, deg)?;
    let closed = closed_generating_function(config, deg)?;
    Ok(GenFunctionPair {
        definition: CycPoly::new(&ring, k),
        closed,
        definition_bar: CycPoly::new(&ring, kbar),
    })
}

/// The symmetric integer table 𝒢_{ℓ,k} = Σ_{Σn=N} K̄_ℓ K_k.
#[derive(Clone, Debug, Serialize)]
pub struct GTable {
    pub big_n: u32,
    pub l: usize,
    /// Largest index, (N−1)L − N.
    pub max_index: usize,
    #[serde(serialize_with = "ser_bigint_matrix")]
    pub entries: Vec<Vec<BigInt>>,
}

fn ser_bigint_matrix<S: serde::Serializer>(m: &[Vec<BigInt>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let strings: Vec<Vec<String>> = m
        .iter()
        .map(|row| row.iter().map(|v| v.to_string()).collect())
        .collect();
    strings.serialize(s)
}

impl GTable {
    /// 𝒢_{a,b}, zero outside the table.
    pub fn get(&self, a: i64, b: i64) -> BigInt {
        if a < 0 || b < 0 || a as usize > self.max_index || b as usize > self.max_index {
            BigInt::zero()
        } else {
            self.entries[a as usize][b as usize].clone()
        }
    }
}

fn check_table_size(big_n: u32, l: usize) -> Result<usize> {
    if big_n < 2 || l < 2 {
        return Err(CpmError::InvalidInput(format!("need N ≥ 2 and L ≥ 2, got N={big_n}, L={l}")));
    }
    let d = (big_n as i64 - 1) * l as i64 - big_n as i64;
    if d < 0 {
        return Err(CpmError::InvalidInput(format!("(N−1)L − N < 0 for N={big_n}, L={l}")));
    }
    Ok(d as usize)
}

pub fn calg_table(big_n: u32, l: usize) -> Result<GTable> {
    let d = check_table_size(big_n, l)?;
    let configs = edge_configs(big_n, l, big_n)?;
    let ring = ring_for(big_n)?;
    // partition by n_1; every partial table is exact so the sum is order-independent
    let partials: Vec<Result<Vec<Vec<CycNum>>>> = (0..big_n)
        .into_par_iter()
        .map(|first| {
            let mut acc = vec![vec![ring.zero(); d + 1]; d + 1];
            for cfg in configs.iter().filter(|c| c.n[0] == first) {
                let (k, kbar) = k_coeffs(cfg, d)?;
                for a in 0..=d {
                    if kbar[a].is_zero() {
                        continue;
                    }
                    for b in 0..=d {
                        acc[a][b] += &(&kbar[a] * &k[b]);
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![vec![ring.zero(); d + 1]; d + 1];
    for part in partials {
        let part = part?;
        for a in 0..=d {
            for b in 0..=d {
                total[a][b] += &part[a][b];
            }
        }
    }
    let mut entries = vec![vec![BigInt::zero(); d + 1]; d + 1];
    for a in 0..=d {
        for b in 0..=d {
            entries[a][b] = total[a][b].as_integer().ok_or_else(|| {
                CpmError::Verification(format!(
                    "𝒢[{a}][{b}] = {} is not a rational integer (N={big_n}, L={l})",
                    total[a][b]
                ))
            })?;
        }
    }
    for a in 0..=d {
        for b in 0..a {
            if entries[a][b] != entries[b][a] {
                return Err(CpmError::Verification(format!(
                    "𝒢 not symmetric at ({a},{b}): {} vs {} (N={big_n}, L={l})",
                    entries[a][b], entries[b][a]
                )));
            }
        }
    }
    Ok(GTable {
        big_n,
        l,
        max_index: d,
        entries,
    })
}

/// Λ^Q_n with zero outside 0 ≤ n ≤ m_Q.
struct LambdaSet {
    polys: Vec<DrinfeldPoly>,
}

impl LambdaSet {
    fn new(big_n: u32, l: usize) -> Result<LambdaSet> {
        let polys = (0..big_n)
            .map(|q| lambda_counts(big_n, l, q))
            .collect::<Result<Vec<_>>>()?;
        Ok(LambdaSet { polys })
    }

    fn get(&self, q: u32, n: i64) -> BigInt {
        self.polys[q as usize].coeff(n)
    }
}

/// The sector/index pairs (Q ≤ P, ℓ, j) with ℓN+Q ≤ D and jN+P ≤ D.
fn index_tuples(big_n: u32, d: usize) -> Vec<(u32, u32, usize, usize)> {
    let mut out = Vec::new();
    let nn = big_n as usize;
    for q in 0..big_n {
        for p in q..big_n {
            for ell in 0..=d / nn {
                if ell * nn + q as usize > d {
                    continue;
                }
                for j in 0..=d / nn {
                    if j * nn + p as usize > d {
                        continue;
                    }
                    out.push((q, p, ell, j));
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCase {
    pub q: u32,
    pub p: u32,
    pub ell: usize,
    pub j: usize,
    pub lhs: String,
    pub rhs: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub big_n: u32,
    pub l: usize,
    pub checked: usize,
    pub failed: usize,
    pub cases: Vec<IdentityCase>,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

/// Right-hand side of the 𝒢 identity:
/// Σ_{n=0}^{j} [(j−n+1)Λ^Q_n Λ^P_{ℓ+1+j−n} − (n−ℓ)Λ^Q_{ℓ+1+j−n} Λ^P_n].
fn identity_rhs(lam: &LambdaSet, q: u32, p: u32, ell: usize, j: usize) -> BigInt {
    let (ell, j) = (ell as i64, j as i64);
    let mut s = BigInt::zero();
    for n in 0..=j {
        s += BigInt::from(j - n + 1) * lam.get(q, n) * lam.get(p, ell + 1 + j - n);
        s -= BigInt::from(n - ell) * lam.get(q, ell + 1 + j - n) * lam.get(p, n);
    }
    s
}

pub fn identity_check(big_n: u32, l: usize) -> Result<IdentityReport> {
    let table = calg_table(big_n, l)?;
    let lam = LambdaSet::new(big_n, l)?;
    let nn = big_n as usize;
    let cases: Vec<IdentityCase> = index_tuples(big_n, table.max_index)
        .into_iter()
        .map(|(q, p, ell, j)| {
            let lhs = table.entries[ell * nn + q as usize][j * nn + p as usize].clone();
            let rhs = identity_rhs(&lam, q, p, ell, j);
            IdentityCase {
                q,
                p,
                ell,
                j,
                pass: lhs == rhs,
                lhs: lhs.to_string(),
                rhs: rhs.to_string(),
            }
        })
        .collect();
    let failed = cases.iter().filter(|c| !c.pass).count();
    Ok(IdentityReport {
        big_n,
        l,
        checked: cases.len(),
        failed,
        cases,
    })
}

/// Σ_{Σμ=A, Σλ=B} 𝓘_n(μ;λ) for fixed B and all A ≤ (N−1)L, n ≤ nmax,
/// returned as `out[A][n]`.
///
/// Dynamic program over sites with state (Σμ so far, Σλ so far, Σn so far);
/// the phase ω^{n_i(a_i − N_i + b̄_i)} only needs those prefix sums because
/// b̄_i = B − (Σλ up to and including site i).
pub fn i_sum_table(ring: &Arc<CycRing>, table: &[Vec<CycNum>], l: usize, b_total: usize, nmax: usize) -> Vec<Vec<CycNum>> {
    let big_n = ring.n() as usize;
    let amax = (big_n - 1) * l;
    let idx = |a: usize, b: usize, k: usize| (a * (b_total + 1) + b) * (nmax + 1) + k;
    let size = (amax + 1) * (b_total + 1) * (nmax + 1);
    let mut cur: Vec<Option<CycNum>> = vec![None; size];
    cur[idx(0, 0, 0)] = Some(ring.one());
    // coefficient [μ, n][n+λ, n] for each (μ, λ, n)
    let mut coef = vec![vec![vec![ring.zero(); big_n]; big_n]; big_n];
    for mu in 0..big_n {
        for la in 0..big_n {
            for n in 0..=mu {
                coef[mu][la][n] = &table[mu][n] * &table[n + la][n];
            }
        }
    }
    for site in 0..l {
        let mut next: Vec<Option<CycNum>> = vec![None; size];
        let amax_here = (big_n - 1) * site;
        for a in 0..=amax_here.min(amax) {
            for b in 0..=b_total.min((big_n - 1) * site) {
                for k in 0..=nmax {
                    let Some(val) = &cur[idx(a, b, k)] else { continue };
                    for mu in 0..big_n {
                        for la in 0..big_n {
                            if b + la > b_total {
                                break;
                            }
                            let bbar = (b_total - b - la) as i64;
                            for n in 0..=mu.min(nmax - k) {
                                let c = &coef[mu][la][n];
                                if c.is_zero() {
                                    continue;
                                }
                                let phase = n as i64 * (a as i64 - k as i64 + bbar);
                                let term = (val * c).mul_omega_pow(phase);
                                let slot = &mut next[idx(a + mu, b + la, k + n)];
                                match slot {
                                    Some(s) => *s += &term,
                                    None => *slot = Some(term),
                                }
                            }
                        }
                    }
                }
            }
        }
        cur = next;
    }
    (0..=amax)
        .map(|a| {
            (0..=nmax)
                .map(|k| cur[idx(a, b_total, k)].clone().unwrap_or_else(|| ring.zero()))
                .collect()
        })
        .collect()
}

/// 𝓘_n(μ;λ) for all n ≤ nmax, for given sequences (left-to-right DP over Σn).
pub fn i_n(ring: &Arc<CycRing>, table: &[Vec<CycNum>], mu: &[u32], lam: &[u32], nmax: usize) -> Vec<CycNum> {
    let l = mu.len();
    let lam_total: u32 = lam.iter().sum();
    let mut cur = vec![ring.zero(); nmax + 1];
    cur[0] = ring.one();
    let mut a = 0u32;
    let mut lam_seen = 0u32;
    for i in 0..l {
        lam_seen += lam[i];
        let bbar = lam_total - lam_seen;
        let mut next = vec![ring.zero(); nmax + 1];
        for k in 0..=nmax {
            if cur[k].is_zero() {
                continue;
            }
            for n in 0..=(mu[i] as usize).min(nmax - k) {
                let c = &table[mu[i] as usize][n] * &table[n + lam[i] as usize][n];
                let phase = n as i64 * (a as i64 - k as i64 + bbar as i64);
                next[k + n] += &(&cur[k] * &c).mul_omega_pow(phase);
            }
        }
        a += mu[i];
        cur = next;
    }
    cur
}

/// 𝓘̄_n(λ;μ) for all n ≤ nmax (right-to-left DP over the suffix sum N̄_i).
pub fn ibar_n(ring: &Arc<CycRing>, table: &[Vec<CycNum>], lam: &[u32], mu: &[u32], nmax: usize) -> Vec<CycNum> {
    let l = mu.len();
    let prefix_mu: Vec<u32> = mu
        .iter()
        .scan(0, |s, &v| {
            let p = *s;
            *s += v;
            Some(p)
        })
        .collect();
    let mut cur = vec![ring.zero(); nmax + 1];
    cur[0] = ring.one();
    let mut bbar = 0u32;
    for i in (0..l).rev() {
        let mut next = vec![ring.zero(); nmax + 1];
        for k in 0..=nmax {
            if cur[k].is_zero() {
                continue;
            }
            // k is N̄_i, the sum of n over sites to the right
            for n in 0..=(lam[i] as usize).min(nmax - k) {
                let c = &table[lam[i] as usize][n] * &table[n + mu[i] as usize][n];
                let phase = n as i64 * (bbar as i64 - k as i64 + prefix_mu[i] as i64);
                next[k + n] += &(&cur[k] * &c).mul_omega_pow(phase);
            }
        }
        bbar += lam[i];
        cur = next;
    }
    cur
}

/// Literal enumeration of 𝓘_n (or 𝓘̄_n with `bar`), for cross-checking.
pub fn i_n_enumerated(ring: &Arc<CycRing>, table: &[Vec<CycNum>], mu: &[u32], lam: &[u32], n: u32, bar: bool) -> CycNum {
    let l = mu.len();
    let big_n = ring.n();
    let mut s = ring.zero();
    for ns in compositions(big_n, l, n) {
        let mut term = ring.one();
        let mut phase = 0i64;
        for i in 0..l {
            let a: u32 = mu[..i].iter().sum();
            let bbar: u32 = lam[i + 1..].iter().sum();
            let ni = ns[i] as usize;
            if !bar {
                let nprefix: u32 = ns[..i].iter().sum();
                term = &term * &(&ring_binom(table, mu[i] as usize, ni) * &ring_binom(table, ni + lam[i] as usize, ni));
                phase += ni as i64 * (a as i64 - nprefix as i64 + bbar as i64);
            } else {
                let nsuffix: u32 = ns[i + 1..].iter().sum();
                term = &term * &(&ring_binom(table, lam[i] as usize, ni) * &ring_binom(table, ni + mu[i] as usize, ni));
                phase += ni as i64 * (bbar as i64 - nsuffix as i64 + a as i64);
            }
        }
        s += &term.mul_omega_pow(phase);
    }
    s
}

fn ring_binom(table: &[Vec<CycNum>], a: usize, b: usize) -> CycNum {
    if b > a {
        table[0][0].ring().zero()
    } else {
        table[a][b].clone()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UqpCase {
    pub q: u32,
    pub p: u32,
    pub ell: usize,
    pub j: usize,
    /// 𝒰 from the 𝓘-sum definition
    pub u_sum: String,
    /// Σ_{n≤j} Λ^Q_n Λ^P_{ℓ+1+j−n} − Σ_{n<j} Λ^P_n Λ^Q_{ℓ+1+j−n}
    pub u_lambda: String,
    pub uqp_pass: bool,
    /// 𝒢_{ℓN+Q,jN+P} = (ℓ−j)Λ^Q_{ℓ+1}Λ^P_j + 𝒢_{(ℓ+1)N+Q,(j−1)N+P} + 𝒰
    pub gu_pass: bool,
    /// 𝒢 entry reproduced as Σ 𝓘_N over (μ, λ)
    pub g_from_i_pass: bool,
    /// for P = Q: 𝒰 = Λ^Q_{ℓ+1} Λ^Q_j
    pub uqq_pass: Option<bool>,
}

impl UqpCase {
    pub fn pass(&self) -> bool {
        self.uqp_pass && self.gu_pass && self.g_from_i_pass && self.uqq_pass.unwrap_or(true)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UqpReport {
    pub big_n: u32,
    pub l: usize,
    pub checked: usize,
    pub failed: usize,
    pub cases: Vec<UqpCase>,
}

impl UqpReport {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

pub fn uqp_check(big_n: u32, l: usize) -> Result<UqpReport> {
    let table_g = calg_table(big_n, l)?;
    let lam = LambdaSet::new(big_n, l)?;
    let ring = ring_for(big_n)?;
    let gt = ring.gauss_table(2 * big_n as usize);
    let nn = big_n as usize;
    let d = table_g.max_index;
    let bmax = (nn - 1) * l;
    // one DP per Σλ value, all Σμ and n ≤ N at once
    let i_tables: Vec<Vec<Vec<CycNum>>> = (0..=bmax)
        .into_par_iter()
        .map(|b| i_sum_table(&ring, &gt, l, b, nn))
        .collect();
    let s_of = |a: i64, b: i64, n: usize| -> CycNum {
        if a < 0 || b < 0 || a as usize > bmax || b as usize > bmax {
            ring.zero()
        } else {
            i_tables[b as usize][a as usize][n].clone()
        }
    };
    let mut cases = Vec::new();
    for (q, p, ell, j) in index_tuples(big_n, d) {
        let (qi, pi, elli, ji) = (q as i64, p as i64, ell as i64, j as i64);
        let ni = nn as i64;
        let mut u = ring.zero();
        for k in 0..=qi {
            let binom = ring.gauss_binom((nn as i64 - pi + qi) as usize, qi - k);
            let c = binom.mul_omega_pow(k * k - k * pi);
            let s = s_of((elli + 1) * ni + qi + pi - k, ji * ni + k, (pi - k) as usize);
            u += &(&c * &s);
        }
        let mut u_lambda = BigInt::zero();
        for n in 0..=ji {
            u_lambda += lam.get(q, n) * lam.get(p, elli + 1 + ji - n);
        }
        for n in 0..ji {
            u_lambda -= lam.get(p, n) * lam.get(q, elli + 1 + ji - n);
        }
        let u_int = u.as_integer();
        let uqp_pass = u_int.as_ref() == Some(&u_lambda);
        let g_here = table_g.get(elli * ni + qi, ji * ni + pi);
        let gu_pass = match &u_int {
            Some(uv) => {
                let rhs = BigInt::from(elli - ji) * lam.get(q, elli + 1) * lam.get(p, ji)
                    + table_g.get((elli + 1) * ni + qi, (ji - 1) * ni + pi)
                    + uv;
                rhs == g_here
            }
            None => false,
        };
        let g_from_i = s_of((elli + 1) * ni + qi, ji * ni + pi, nn);
        let g_from_i_pass = g_from_i.as_integer().as_ref() == Some(&g_here);
        let uqq_pass = (p == q).then(|| u_int.as_ref() == Some(&(lam.get(q, elli + 1) * lam.get(q, ji))));
        cases.push(UqpCase {
            q,
            p,
            ell,
            j,
            u_sum: u_int.map(|v| v.to_string()).unwrap_or_else(|| format!("{u}")),
            u_lambda: u_lambda.to_string(),
            uqp_pass,
            gu_pass,
            g_from_i_pass,
            uqq_pass,
        });
    }
    let failed = cases.iter().filter(|c| !c.pass()).count();
    Ok(UqpReport {
        big_n,
        l,
        checked: cases.len(),
        failed,
        cases,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct IbiReport {
    pub big_n: u32,
    pub mu: Vec<u32>,
    pub lam: Vec<u32>,
    pub q: u32,
    pub p: u32,
    pub ell: i64,
    pub j: i64,
    pub lhs_degree: Option<usize>,
    pub rhs_degree: Option<usize>,
    pub pass: bool,
}

/// Both sides of the 𝓘 ↔ 𝓘̄ generating-function relation as exact polynomials.
pub fn ibi_sides(big_n: u32, mu: &[u32], lam: &[u32]) -> Result<(CycPoly, CycPoly, IbiReport)> {
    if mu.len() != lam.len() || mu.is_empty() {
        return Err(CpmError::InvalidInput("μ and λ must be nonempty and of equal length".into()));
    }
    if mu.iter().chain(lam).any(|&v| v >= big_n) {
        return Err(CpmError::InvalidInput(format!("entries must lie in 0..{}", big_n - 1)));
    }
    let ring = ring_for(big_n)?;
    let gt = ring.gauss_table(2 * big_n as usize);
    let a_tot: u32 = mu.iter().sum();
    let b_tot: u32 = lam.iter().sum();
    let (q, ell) = (a_tot % big_n, (a_tot / big_n) as i64 - 1);
    let (p, j) = (b_tot % big_n, (b_tot / big_n) as i64);
    let signed_series = |vals: Vec<CycNum>| {
        let coeffs = vals
            .into_iter()
            .enumerate()
            .map(|(n, v)| {
                // (−1)^n ω^{n²/2} = ζ^{n² + nN}
                let e = (n * n + n * big_n as usize) as i64;
                v.mul_zeta_pow(e)
            })
            .collect();
        CycPoly::new(&ring, coeffs)
    };
    let mut lhs = signed_series(i_n(&ring, &gt, mu, lam, a_tot as usize));
    let ibar = signed_series(ibar_n(&ring, &gt, lam, mu, b_tot as usize));
    let count = (big_n as i64 - p as i64 + q as i64) as usize;
    let mut rhs = pochhammer(&ring, 1 + 2 * p as i64, count).mul(&ibar);
    let mut one_plus = vec![ring.zero(); big_n as usize + 1];
    one_plus[0] = ring.one();
    one_plus[big_n as usize] = ring.one();
    let one_plus = CycPoly::new(&ring, one_plus);
    let e = ell - j;
    if e >= 0 {
        rhs = rhs.mul(&one_plus.pow(e as u32));
    } else {
        lhs = lhs.mul(&one_plus.pow((-e) as u32));
    }
    let report = IbiReport {
        big_n,
        mu: mu.to_vec(),
        lam: lam.to_vec(),
        q,
        p,
        ell,
        j,
        lhs_degree: lhs.degree(),
        rhs_degree: rhs.degree(),
        pass: lhs == rhs,
    };
    Ok((lhs, rhs, report))
}

pub fn ibi_check(big_n: u32, mu: &[u32], lam: &[u32]) -> Result<IbiReport> {
    ibi_sides(big_n, mu, lam).map(|(_, _, r)| r)
}

/// Summary of the Appendix checks at one (N, L).
#[derive(Clone, Debug, Serialize)]
pub struct AppendixReport {
    pub big_n: u32,
    pub l: usize,
    /// configurations of every length ≤ L and every total checked against the closed form
    pub gen_function_checked: usize,
    pub gen_function_failed: Vec<Vec<u32>>,
    pub conjugation_failed: Vec<Vec<u32>>,
    pub ibi_exhaustive_checked: usize,
    pub ibi_random_checked: usize,
    pub ibi_failed: Vec<IbiReport>,
    pub uqp: UqpReport,
}

impl AppendixReport {
    pub fn all_pass(&self) -> bool {
        self.gen_function_failed.is_empty()
            && self.conjugation_failed.is_empty()
            && self.ibi_failed.is_empty()
            && self.uqp.all_pass()
    }
}

/// Length bound for the exhaustive 𝓘/𝓘̄ pairs; longer sequences are sampled.
pub const IBI_EXHAUSTIVE_LEN: usize = 3;

/// Generating-function closed form and conjugation for every configuration of
/// length ≤ L, the 𝓘/𝓘̄ identity exhaustively for short sequences and on
/// `ibi_samples` seeded random pairs of length L, and the 𝒰 relations.
pub fn appendix_check(big_n: u32, l: usize, ibi_samples: usize, seed: u64) -> Result<AppendixReport> {
    use rand::{Rng, SeedableRng};
    if big_n < 2 || l < 2 {
        return Err(CpmError::InvalidInput(format!("need N ≥ 2 and L ≥ 2, got N={big_n}, L={l}")));
    }
    let mut configs = Vec::new();
    for len in 1..=l {
        for total in 0..=(big_n - 1) * len as u32 {
            configs.extend(edge_configs(big_n, len, total)?);
        }
    }
    let gen: Vec<Result<(Vec<u32>, bool, bool)>> = configs
        .par_iter()
        .map(|c| {
            let pair = gen_function_pair(c)?;
            Ok((c.n.clone(), pair.agree(), pair.twisted_conjugation_holds(c.total())))
        })
        .collect();
    let mut gen_function_failed = Vec::new();
    let mut conjugation_failed = Vec::new();
    for r in gen {
        let (n, agree, conj) = r?;
        if !agree {
            gen_function_failed.push(n.clone());
        }
        if !conj {
            conjugation_failed.push(n);
        }
    }

    let mut pairs: Vec<(Vec<u32>, Vec<u32>)> = Vec::new();
    for len in 1..=l.min(IBI_EXHAUSTIVE_LEN) {
        let all = compositions_any(big_n, len);
        for mu in &all {
            for lam in &all {
                pairs.push((mu.clone(), lam.clone()));
            }
        }
    }
    let exhaustive = pairs.len();
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    for _ in 0..ibi_samples {
        let mu = (0..l).map(|_| rng.gen_range(0..big_n)).collect();
        let lam = (0..l).map(|_| rng.gen_range(0..big_n)).collect();
        pairs.push((mu, lam));
    }
    let ibi: Vec<Result<IbiReport>> = pairs.par_iter().map(|(mu, lam)| ibi_check(big_n, mu, lam)).collect();
    let mut ibi_failed = Vec::new();
    for r in ibi {
        let r = r?;
        if !r.pass {
            ibi_failed.push(r);
        }
    }
    Ok(AppendixReport {
        big_n,
        l,
        gen_function_checked: configs.len(),
        gen_function_failed,
        conjugation_failed,
        ibi_exhaustive_checked: exhaustive,
        ibi_random_checked: ibi_samples,
        ibi_failed,
        uqp: uqp_check(big_n, l)?,
    })
}

/// All sequences in {0..N−1}^len.
fn compositions_any(big_n: u32, len: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..big_n).map(move |d| {
                    let mut w = v.clone();
                    w.push(d);
                    w
                })
            })
            .collect();
    }
    out
}
