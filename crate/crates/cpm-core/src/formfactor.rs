//! Form factors: couplings, the closed ψ_n products, the n = 1 brute-force
//! check, the D̂_PQ subset sum, its Cauchy-determinant form, the closed
//! products, and the order parameter.
//!
//! Sector labels here are lattice labels: sector X carries the root set
//! z = 1/w over the roots w of P_X, the "ket" sector is called P and the
//! "bra" sector Q. The m ≤ m' ordering is the caller's choice (see
//! [`ordered_pair`]).

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Complex, Float, Integer};
use serde::Serialize;

use crate::combi::{calg_table, edge_configs, k_coeffs, GTable};
use crate::drinfeld::{lambda_counts, root_transforms, solve_roots, DrinfeldPoly, RootData};
use crate::error::{CpmError, Result};
use crate::util::{bigint_to_rug, float_to_decimal};

/// Cap on m for the literal subset sum (it has Σ_n C(m,n)C(m',n) terms).
pub const SUM_GUARD_M: usize = 12;

fn new_f(prec: u32, v: i64) -> Float {
    Float::with_val(prec, v)
}

/// Root and coupling data for one (P, Q) pair.
#[derive(Clone, Debug)]
pub struct FormFactorInput {
    pub big_n: u32,
    pub l: usize,
    pub p: u32,
    pub q: u32,
    pub kp: Float,
    pub prec: u32,
    pub z: Vec<Float>,
    pub zp: Vec<Float>,
    pub lambda: Vec<Float>,
    pub lambdap: Vec<Float>,
    pub u: Vec<Float>,
    pub up: Vec<Float>,
    pub uhat: Vec<Float>,
    pub uphat: Vec<Float>,
    pub cc_product: Float,
    pub poly_p: DrinfeldPoly,
    pub poly_q: DrinfeldPoly,
}

impl FormFactorInput {
    pub fn m(&self) -> usize {
        self.z.len()
    }

    pub fn mp(&self) -> usize {
        self.zp.len()
    }
}

/// Per-root factor s_11 s_22 = ((λ+1)² − k'²)/(4λ).
pub fn cc_factor(lambda: &Float, kp: &Float) -> Float {
    let prec = lambda.prec();
    let num = Float::with_val(prec, lambda + 1u32).square() - Float::with_val(prec, kp.square_ref());
    num / Float::with_val(prec, lambda * 4u32)
}

/// u = (λ−1+k')/(λ+1+k')
pub fn u_of(lambda: &Float, kp: &Float) -> Float {
    let prec = lambda.prec();
    (Float::with_val(prec, lambda - 1u32) + kp) / (Float::with_val(prec, lambda + 1u32) + kp)
}

/// u' = −(λ'−1−k')/(λ'+1−k')
pub fn up_of(lambda: &Float, kp: &Float) -> Float {
    let prec = lambda.prec();
    -(Float::with_val(prec, lambda - 1u32) - kp) / (Float::with_val(prec, lambda + 1u32) - kp)
}

/// Assemble couplings from the root data of the ket sector P and bra sector Q.
pub fn couplings(p: u32, q: u32, kp: &Float, roots_p: &RootData, roots_q: &RootData) -> Result<FormFactorInput> {
    if roots_p.kp != roots_q.kp {
        return Err(CpmError::InvalidInput("root data prepared at different k'".into()));
    }
    let prec = roots_p.kp.prec().max(kp.prec());
    let kp = Float::with_val(prec, kp);
    let one = new_f(prec, 1);
    let lo = Float::with_val(prec, &one - &kp);
    let hi = Float::with_val(prec, &one + &kp);
    let check = |lam: &Float| -> Result<()> {
        if *lam > lo && *lam < hi {
            Ok(())
        } else {
            Err(CpmError::DomainError(format!(
                "λ = {:e} outside (1−k', 1+k') = ({:e}, {:e})",
                lam.to_f64(),
                lo.to_f64(),
                hi.to_f64()
            )))
        }
    };
    let z = roots_p.z();
    let zp = roots_q.z();
    let lambda = roots_p.lambdas();
    let lambdap = roots_q.lambdas();
    let mut u = Vec::new();
    let mut uhat = Vec::new();
    for (lam, zi) in lambda.iter().zip(&z) {
        check(lam)?;
        let ui = u_of(lam, &kp);
        if !(ui > 0 && ui < 1) {
            return Err(CpmError::DomainError(format!("u = {:e} outside (0,1)", ui.to_f64())));
        }
        uhat.push(-Float::with_val(prec, zi * &ui));
        u.push(ui);
    }
    let mut up = Vec::new();
    let mut uphat = Vec::new();
    for (lam, zi) in lambdap.iter().zip(&zp) {
        check(lam)?;
        let ui = up_of(lam, &kp);
        if !(ui > 0) {
            return Err(CpmError::DomainError(format!("u' = {:e} not positive", ui.to_f64())));
        }
        uphat.push(-Float::with_val(prec, &ui / zi));
        up.push(ui);
    }
    let mut cc = new_f(prec, 1);
    for lam in lambda.iter().chain(&lambdap) {
        cc *= cc_factor(lam, &kp);
    }
    Ok(FormFactorInput {
        big_n: 0,
        l: 0,
        p,
        q,
        kp,
        prec,
        z,
        zp,
        lambda,
        lambdap,
        u,
        up,
        uhat,
        uphat,
        cc_product: cc,
        poly_p: DrinfeldPoly {
            big_n: 0,
            l: 0,
            q: p,
            lambda: Vec::new(),
        },
        poly_q: DrinfeldPoly {
            big_n: 0,
            l: 0,
            q,
            lambda: Vec::new(),
        },
    })
}

/// Solve both sectors and build the input at working precision 2·prec.
pub fn build_input(big_n: u32, l: usize, p: u32, q: u32, kp: &Float, prec: u32) -> Result<FormFactorInput> {
    let wp = 2 * prec;
    let poly_p = lambda_counts(big_n, l, p)?;
    let poly_q = lambda_counts(big_n, l, q)?;
    let rp = root_transforms(p, &solve_roots(&poly_p, wp)?, &Float::with_val(wp, kp))?;
    let rq = root_transforms(q, &solve_roots(&poly_q, wp)?, &Float::with_val(wp, kp))?;
    build_from_roots(big_n, l, p, q, kp, wp, poly_p, poly_q, &rp, &rq)
}

#[allow(clippy::too_many_arguments)]
fn build_from_roots(
    big_n: u32,
    l: usize,
    p: u32,
    q: u32,
    kp: &Float,
    wp: u32,
    poly_p: DrinfeldPoly,
    poly_q: DrinfeldPoly,
    rp: &RootData,
    rq: &RootData,
) -> Result<FormFactorInput> {
    let mut input = couplings(p, q, &Float::with_val(wp, kp), rp, rq)?;
    input.big_n = big_n;
    input.l = l;
    input.poly_p = poly_p;
    input.poly_q = poly_q;
    Ok(input)
}

/// Which of two lattice sectors plays the ket role: σ(X) = (−L−X) mod N
/// must be larger for the ket. This guarantees m ≤ m'.
pub fn ordered_pair(big_n: u32, l: usize, a: u32, b: u32) -> (u32, u32) {
    let sigma = |x: u32| crate::drinfeld::reciprocal_sector(big_n, l, x);
    if sigma(a) > sigma(b) {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PsiVariant {
    Plain,
    Hatted,
}

fn check_subsets(w: &[usize], m: usize) -> Result<()> {
    let mut seen = vec![false; m];
    for &i in w {
        if i >= m {
            return Err(CpmError::InvalidInput(format!("index {i} out of range 0..{m}")));
        }
        if seen[i] {
            return Err(CpmError::InvalidInput(format!(
                "repeated index {i}: a nilpotent operator appears twice, the product vanishes identically"
            )));
        }
        seen[i] = true;
    }
    Ok(())
}

/// ψ_n(W, W') from the closed product (ĀB̄)/(C̄D̄), times Π_W z_i^{−1} Π_{W'} z'_j
/// for the hatted variant.
pub fn psi_closed(w: &[usize], wp_: &[usize], z: &[Float], zp: &[Float], variant: PsiVariant) -> Result<Float> {
    if w.len() != wp_.len() {
        return Err(CpmError::InvalidInput(format!(
            "|W| = {} ≠ |W'| = {}",
            w.len(),
            wp_.len()
        )));
    }
    check_subsets(w, z.len())?;
    check_subsets(wp_, zp.len())?;
    let prec = z.iter().chain(zp).map(|x| x.prec()).max().unwrap_or(64);
    let in_w: Vec<bool> = (0..z.len()).map(|i| w.contains(&i)).collect();
    let in_wp: Vec<bool> = (0..zp.len()).map(|i| wp_.contains(&i)).collect();
    let mut num = new_f(prec, 1);
    let mut den = new_f(prec, 1);
    for &i in w {
        for j in (0..zp.len()).filter(|&j| !in_wp[j]) {
            num *= Float::with_val(prec, &z[i] - &zp[j]);
        }
        for j in (0..z.len()).filter(|&j| !in_w[j]) {
            den *= Float::with_val(prec, &z[i] - &z[j]);
        }
    }
    for &i in wp_ {
        for j in (0..z.len()).filter(|&j| !in_w[j]) {
            num *= Float::with_val(prec, &zp[i] - &z[j]);
        }
        for j in (0..zp.len()).filter(|&j| !in_wp[j]) {
            den *= Float::with_val(prec, &zp[i] - &zp[j]);
        }
    }
    if den.is_zero() {
        return Err(CpmError::SingularConfiguration("coincident roots within a sector".into()));
    }
    let mut v = num / den;
    if variant == PsiVariant::Hatted {
        for &i in w {
            v /= &z[i];
        }
        for &j in wp_ {
            v *= &zp[j];
        }
    }
    Ok(v)
}

/// Combinations of 0..m of size k in revolving-door (minimal change) order.
pub fn revolving_door(m: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if k > m {
        return Vec::new();
    }
    if k == m {
        return vec![(0..m).collect()];
    }
    // R(m,k) = R(m−1,k) followed by reverse(R(m−1,k−1)) with m−1 appended
    let mut out = revolving_door(m - 1, k);
    let mut tail = revolving_door(m - 1, k - 1);
    tail.reverse();
    for mut c in tail {
        c.push(m - 1);
        out.push(c);
    }
    out
}

struct SubsetFactor {
    members: Vec<usize>,
    weight: Float,
}

/// Π_W u_i / Π_{W×V}(z_i − z_j) for every subset of a given cardinality.
fn subset_factors(z: &[Float], u: &[Float], k: usize, prec: u32) -> Result<Vec<SubsetFactor>> {
    revolving_door(z.len(), k)
        .into_iter()
        .map(|members| {
            let mut weight = new_f(prec, 1);
            let mut den = new_f(prec, 1);
            for &i in &members {
                weight *= &u[i];
                for j in (0..z.len()).filter(|j| !members.contains(j)) {
                    den *= Float::with_val(prec, &z[i] - &z[j]);
                }
            }
            if den.is_zero() {
                return Err(CpmError::SingularConfiguration("coincident roots within a sector".into()));
            }
            Ok(SubsetFactor {
                members,
                weight: weight / den,
            })
        })
        .collect()
}

fn dhat_sum_with(z: &[Float], zp: &[Float], u: &[Float], up: &[Float], prec: u32, hatted: bool) -> Result<Float> {
    let (m, mp) = (z.len(), zp.len());
    if m > SUM_GUARD_M {
        return Err(CpmError::SizeGuard {
            what: format!("subset sum with m = {m}"),
            needed: m as u128,
            limit: SUM_GUARD_M as u128,
            hint: "; use the determinant route (--method det)".into(),
        });
    }
    let kmax = m.min(mp);
    let parts: Vec<Result<Float>> = (0..=kmax)
        .into_par_iter()
        .map(|k| {
            let left = subset_factors(z, u, k, prec)?;
            let right = subset_factors(zp, up, k, prec)?;
            let mut acc = new_f(prec, 0);
            for a in &left {
                for b in &right {
                    let mut cross = new_f(prec, 1);
                    for &i in &a.members {
                        for j in (0..mp).filter(|j| !b.members.contains(j)) {
                            cross *= Float::with_val(prec, &z[i] - &zp[j]);
                        }
                    }
                    for &i in &b.members {
                        for j in (0..m).filter(|j| !a.members.contains(j)) {
                            cross *= Float::with_val(prec, &zp[i] - &z[j]);
                        }
                    }
                    let mut term = cross * &a.weight * &b.weight;
                    if hatted {
                        for &i in &a.members {
                            term /= &z[i];
                        }
                        for &j in &b.members {
                            term *= &zp[j];
                        }
                    }
                    acc += term;
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = new_f(prec, 0);
    for p in parts {
        total += p?;
    }
    Ok(total)
}

/// D̂_PQ as the literal sum over equal-cardinality subset pairs.
pub fn dhat_sum(input: &FormFactorInput) -> Result<Float> {
    dhat_sum_with(&input.z, &input.zp, &input.u, &input.up, input.prec, false)
}

/// D̂_QP from the hatted couplings û, û' and the hatted ψ̄.
pub fn dhat_sum_hatted(input: &FormFactorInput) -> Result<Float> {
    dhat_sum_with(&input.z, &input.zp, &input.uhat, &input.uphat, input.prec, true)
}

/// Sign conventions for the determinant route; none of them may matter.
#[derive(Clone, Debug)]
pub struct DetOptions {
    pub epsilon: i32,
    pub flip_f: Vec<bool>,
    pub flip_fp: Vec<bool>,
}

impl Default for DetOptions {
    fn default() -> Self {
        DetOptions {
            epsilon: -1,
            flip_f: Vec::new(),
            flip_fp: Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DetResult {
    pub value: Float,
    /// |Im det| / |det|; the determinant of a sign-consistent B is real.
    pub imag_residual: f64,
    /// max |(B Bᵀ − 1)_ij| (or BᵀB when m > m')
    pub orthogonality_residual: f64,
}

fn complex_det(mut a: Vec<Vec<Complex>>, prec: u32) -> Complex {
    let n = a.len();
    let mut det = Complex::with_val(prec, (1, 0));
    for col in 0..n {
        let mut best = col;
        let mut best_norm = Float::with_val(prec, a[col][col].abs_ref());
        for row in col + 1..n {
            let nrm = Float::with_val(prec, a[row][col].abs_ref());
            if nrm > best_norm {
                best = row;
                best_norm = nrm;
            }
        }
        if best_norm.is_zero() {
            return Complex::with_val(prec, (0, 0));
        }
        if best != col {
            a.swap(best, col);
            det = -det;
        }
        let pivot = a[col][col].clone();
        det *= &pivot;
        for row in col + 1..n {
            let factor = Complex::with_val(prec, &a[row][col] / &pivot);
            if factor.is_zero() {
                continue;
            }
            for k in col..n {
                let t = Complex::with_val(prec, &factor * &a[col][k]);
                a[row][k] -= t;
            }
        }
    }
    det
}

/// Π_j (x − y_j) over all j (optionally skipping one index).
fn prod_diff(x: &Float, ys: &[Float], skip: Option<usize>, prec: u32) -> Float {
    let mut p = new_f(prec, 1);
    for (j, y) in ys.iter().enumerate() {
        if Some(j) != skip {
            p *= Float::with_val(prec, x - y);
        }
    }
    p
}

/// D̂_PQ = det(1_m + Y B Y' Bᵀ) with B_ij = f_i f'_j/(z_i − z'_j).
pub fn dhat_det(input: &FormFactorInput, opts: &DetOptions) -> Result<DetResult> {
    let (m, mp, prec) = (input.m(), input.mp(), input.prec);
    if m.abs_diff(mp) > 1 {
        return Err(CpmError::InvalidInput(format!("|m − m'| = {} > 1", m.abs_diff(mp))));
    }
    if opts.epsilon != 1 && opts.epsilon != -1 {
        return Err(CpmError::InvalidInput("ε must be ±1".into()));
    }
    if m == 0 {
        return Ok(DetResult {
            value: new_f(prec, 1),
            imag_residual: 0.0,
            orthogonality_residual: 0.0,
        });
    }
    let eps = new_f(prec, opts.epsilon as i64);
    let sqrt_signed = |x: Float, flip: bool| -> Complex {
        let c = Complex::with_val(prec, (x, 0)).sqrt();
        if flip {
            -c
        } else {
            c
        }
    };
    let f: Vec<Complex> = (0..m)
        .map(|i| {
            let a = prod_diff(&input.z[i], &input.zp, None, prec);
            let b = prod_diff(&input.z[i], &input.z, Some(i), prec);
            sqrt_signed(Float::with_val(prec, &eps * &a) / b, opts.flip_f.get(i).copied().unwrap_or(false))
        })
        .collect();
    let fp: Vec<Complex> = (0..mp)
        .map(|i| {
            let a = prod_diff(&input.zp[i], &input.z, None, prec);
            let b = prod_diff(&input.zp[i], &input.zp, Some(i), prec);
            sqrt_signed(-(Float::with_val(prec, &eps * &a) / b), opts.flip_fp.get(i).copied().unwrap_or(false))
        })
        .collect();
    let mut bm = vec![vec![Complex::new(prec); mp]; m];
    for i in 0..m {
        for j in 0..mp {
            let d = Float::with_val(prec, &input.z[i] - &input.zp[j]);
            if d.is_zero() {
                return Err(CpmError::SingularConfiguration(format!(
                    "z_{i} = z'_{j}: the two sectors share a root"
                )));
            }
            bm[i][j] = Complex::with_val(prec, &f[i] * &fp[j]) / d;
        }
    }
    // orthogonality
    let mut orth = 0f64;
    if m <= mp {
        for i in 0..m {
            for k in 0..m {
                let mut s = Complex::new(prec);
                for j in 0..mp {
                    s += Complex::with_val(prec, &bm[i][j] * &bm[k][j]);
                }
                if i == k {
                    s -= 1u32;
                }
                orth = orth.max(Float::with_val(prec, s.abs_ref()).to_f64());
            }
        }
    } else {
        for j in 0..mp {
            for k in 0..mp {
                let mut s = Complex::new(prec);
                for i in 0..m {
                    s += Complex::with_val(prec, &bm[i][j] * &bm[i][k]);
                }
                if j == k {
                    s -= 1u32;
                }
                orth = orth.max(Float::with_val(prec, s.abs_ref()).to_f64());
            }
        }
    }
    let tol = 2f64.powi(-((prec / 4) as i32));
    if !(orth < tol) {
        return Err(CpmError::OrthogonalityViolation {
            residual: orth,
            tolerance: tol,
        });
    }
    // 1 + Y B Y' Bᵀ
    let mut a = vec![vec![Complex::new(prec); m]; m];
    for i in 0..m {
        for k in 0..m {
            let mut s = Complex::new(prec);
            for j in 0..mp {
                let t = Complex::with_val(prec, &bm[i][j] * &bm[k][j]) * &input.up[j];
                s += t;
            }
            s *= &input.u[i];
            if i == k {
                s += 1u32;
            }
            a[i][k] = s;
        }
    }
    let det = complex_det(a, prec);
    let (re, im) = det.into_real_imag();
    let imag_residual = if re.is_zero() {
        im.to_f64().abs()
    } else {
        (Float::with_val(prec, im.abs_ref()) / Float::with_val(prec, re.abs_ref())).to_f64()
    };
    Ok(DetResult {
        value: re,
        imag_residual,
        orthogonality_residual: orth,
    })
}

/// Δ_{m,m'}(c, c') = Π_{i<j}(c_i − c_j) Π_{i<j}(c'_j − c'_i) / Π_{i,j}(c_i − c'_j)
pub fn delta(c: &[Float], cp: &[Float], prec: u32) -> Float {
    let mut num = new_f(prec, 1);
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            num *= Float::with_val(prec, &c[i] - &c[j]);
        }
    }
    for i in 0..cp.len() {
        for j in i + 1..cp.len() {
            num *= Float::with_val(prec, &cp[j] - &cp[i]);
        }
    }
    let mut den = new_f(prec, 1);
    for x in c {
        for y in cp {
            den *= Float::with_val(prec, x - y);
        }
    }
    num / den
}

/// Closed product for D̂_PQ: the m = m' and m' = m + 1 forms.
pub fn dhat_closed(input: &FormFactorInput) -> Option<Float> {
    let (m, mp, prec) = (input.m(), input.mp(), input.prec);
    let kp = &input.kp;
    let sq = |v: &[Float]| -> Vec<Float> { v.iter().map(|x| Float::with_val(prec, x.square_ref())).collect() };
    let ratio = delta(&input.lambda, &input.lambdap, prec) / delta(&sq(&input.lambda), &sq(&input.lambdap), prec);
    if mp == m {
        let mut prod = new_f(prec, 1);
        for i in 0..m {
            let a = Float::with_val(prec, &input.lambda[i] + 1u32) + kp;
            let b = Float::with_val(prec, &input.lambdap[i] + 1u32) - kp;
            prod *= Float::with_val(prec, 2u32) / (a * b);
        }
        Some(ratio * prod)
    } else if mp == m + 1 {
        let mut prod = new_f(prec, 1);
        for i in 0..m {
            let a = Float::with_val(prec, &input.lambda[i] + 1u32).square() - Float::with_val(prec, kp.square_ref());
            prod *= Float::with_val(prec, 2u32) / a;
        }
        Some(ratio * prod)
    } else {
        None
    }
}

/// R(x) = Π_i (x+λ_i)/2 / Π_j (x+λ'_j)/2
pub fn r_function(input: &FormFactorInput, x: &Float) -> Float {
    let prec = input.prec;
    let mut v = new_f(prec, 1);
    for l in &input.lambda {
        v *= Float::with_val(prec, x + l) / 2u32;
    }
    for l in &input.lambdap {
        v /= Float::with_val(prec, x + l) / 2u32;
    }
    v
}

/// 𝓒𝓒̂D̂² through the R-function products (the m = m' and m' = m+1 forms).
pub fn r_product_form(input: &FormFactorInput) -> Option<Float> {
    let prec = input.prec;
    let one = new_f(prec, 1);
    let r_lo = r_function(input, &Float::with_val(prec, &one - &input.kp));
    let r_hi = r_function(input, &Float::with_val(prec, &one + &input.kp));
    let mut prod = new_f(prec, 1);
    for l in &input.lambdap {
        prod *= r_function(input, l);
    }
    for l in &input.lambda {
        prod /= r_function(input, l);
    }
    if input.mp() == input.m() {
        Some(r_lo / r_hi * prod)
    } else if input.mp() == input.m() + 1 {
        Some(prod / (r_lo * r_hi))
    } else {
        None
    }
}

/// Large-L values of R(1−k') and R(1+k'):
/// (1−k')^{m−m'+(P−Q)/N} and (1+k')^{(Q−P)/N}.
pub fn r_limits(input: &FormFactorInput) -> (Float, Float) {
    let prec = input.prec;
    let n = input.big_n as f64;
    let pq = input.p as f64 - input.q as f64;
    let e_lo = Float::with_val(prec, input.m() as f64 - input.mp() as f64 + pq / n);
    let e_hi = Float::with_val(prec, -pq / n);
    let one = new_f(prec, 1);
    let lo = Float::with_val(prec, &one - &input.kp).pow(e_lo);
    let hi = Float::with_val(prec, &one + &input.kp).pow(e_hi);
    (lo, hi)
}

/// Baxter's summand AB/(CD) in c variables for one subset pair.
pub fn baxter_summand(c: &[Float], cp: &[Float], w: &[usize], wp_: &[usize], prec: u32) -> Float {
    let in_w = |i: usize| w.contains(&i);
    let in_wp = |i: usize| wp_.contains(&i);
    let mut v = new_f(prec, 1);
    for i in 0..c.len() {
        for j in 0..cp.len() {
            if in_w(i) && !in_wp(j) {
                v *= Float::with_val(prec, &c[i] - &cp[j]);
            }
            if !in_w(i) && in_wp(j) {
                v *= Float::with_val(prec, &c[i] - &cp[j]);
            }
        }
    }
    for i in (0..c.len()).filter(|&i| in_w(i)) {
        for j in (0..c.len()).filter(|&j| !in_w(j)) {
            v /= Float::with_val(prec, &c[j] - &c[i]);
        }
    }
    for i in (0..cp.len()).filter(|&i| !in_wp(i)) {
        for j in (0..cp.len()).filter(|&j| in_wp(j)) {
            v /= Float::with_val(prec, &cp[j] - &cp[i]);
        }
    }
    v
}

/// c = (z+1)/(z−1)
pub fn c_of(z: &Float) -> Float {
    let prec = z.prec();
    Float::with_val(prec, z + 1u32) / Float::with_val(prec, z - 1u32)
}

/// The expected ratio Π_{W'}(c'_i−1)^{m'−m} / Π_W(c_i−1)^{m'−m}.
pub fn baxter_ratio(c: &[Float], cp: &[Float], w: &[usize], wp_: &[usize], prec: u32) -> Float {
    let e = cp.len() as i32 - c.len() as i32;
    let mut v = new_f(prec, 1);
    for &i in wp_ {
        v *= Float::with_val(prec, &cp[i] - 1u32).pow(e);
    }
    for &i in w {
        v /= Float::with_val(prec, &c[i] - 1u32).pow(e);
    }
    v
}

/// Order-parameter data for one (Q, P = Q−r) term.
#[derive(Clone, Debug)]
pub struct OrderTerm {
    /// lattice sector Q of the pair (P = Q − r mod N)
    pub q_lattice: u32,
    pub ket: u32,
    pub bra: u32,
    pub m: usize,
    pub mp: usize,
    pub dhat_det: Float,
    pub dhat_sum: Option<Float>,
    pub dhat_closed: Option<Float>,
    pub cc_product: Float,
    pub value: Float,
    pub orthogonality_residual: f64,
    pub imag_residual: f64,
}

#[derive(Clone, Debug)]
pub struct OrderReport {
    pub big_n: u32,
    pub l: usize,
    pub r: u32,
    pub kp: Float,
    pub prec: u32,
    pub terms: Vec<OrderTerm>,
    /// (1/N) Σ_Q 𝓒𝓒̂D̂²
    pub finite_l: Float,
    /// max − min over the N terms
    pub spread: Float,
    pub limit: Float,
}

impl OrderReport {
    pub fn abs_error(&self) -> Float {
        Float::with_val(self.prec, &self.finite_l - &self.limit).abs()
    }
}

/// (1−k'²)^{r(N−r)/N²}
pub fn order_limit(big_n: u32, r: u32, kp: &Float) -> Float {
    let prec = kp.prec();
    let base = Float::with_val(prec, 1u32) - Float::with_val(prec, kp.square_ref());
    let e = Float::with_val(prec, r * (big_n - r)) / Float::with_val(prec, big_n * big_n);
    base.pow(e)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Sum,
    Det,
    Closed,
    All,
}

/// Roots for every sector of an (N, L) chain, shared by all N terms.
pub struct SectorRoots {
    pub polys: Vec<DrinfeldPoly>,
    pub roots: Vec<RootData>,
    pub wp: u32,
}

impl SectorRoots {
    pub fn new(big_n: u32, l: usize, kp: &Float, prec: u32) -> Result<SectorRoots> {
        let wp = 2 * prec;
        let kpw = Float::with_val(wp, kp);
        let polys: Vec<DrinfeldPoly> = (0..big_n).map(|q| lambda_counts(big_n, l, q)).collect::<Result<_>>()?;
        let roots: Vec<RootData> = polys
            .par_iter()
            .map(|p| root_transforms(p.q, &solve_roots(p, wp)?, &kpw))
            .collect::<Result<_>>()?;
        Ok(SectorRoots { polys, roots, wp })
    }

    pub fn input(&self, big_n: u32, l: usize, p: u32, q: u32, kp: &Float) -> Result<FormFactorInput> {
        build_from_roots(
            big_n,
            l,
            p,
            q,
            kp,
            self.wp,
            self.polys[p as usize].clone(),
            self.polys[q as usize].clone(),
            &self.roots[p as usize],
            &self.roots[q as usize],
        )
    }
}

fn check_order_args(big_n: u32, r: u32, kp: &Float, l: usize) -> Result<()> {
    if big_n < 2 {
        return Err(CpmError::InvalidInput(format!("N must be ≥ 2, got {big_n}")));
    }
    if r < 1 || r >= big_n {
        return Err(CpmError::InvalidInput(format!("r must lie in 1..{}, got {r}", big_n - 1)));
    }
    if !(*kp > 0 && *kp < 1) {
        return Err(CpmError::InvalidInput(format!("k' must lie in (0,1), got {}", kp.to_f64())));
    }
    if l < 1 {
        return Err(CpmError::InvalidInput("L must be ≥ 1".into()));
    }
    Ok(())
}

/// 𝓜_r² at finite L: every Q with P = Q−r, each 𝓒𝓒̂D̂², their mean and spread.
pub fn order_param_sq(big_n: u32, r: u32, kp: &Float, l: usize, prec: u32, method: Method) -> Result<OrderReport> {
    check_order_args(big_n, r, kp, l)?;
    if matches!(method, Method::Sum | Method::All) {
        let m_max = (0..big_n).map(|q| crate::drinfeld::degree_formula(big_n, l, q)).max().unwrap_or(0);
        if m_max > SUM_GUARD_M {
            return Err(CpmError::SizeGuard {
                what: format!("subset sum at N={big_n}, L={l} (m = {m_max})"),
                needed: m_max as u128,
                limit: SUM_GUARD_M as u128,
                hint: "; use --method det".into(),
            });
        }
    }
    let roots = SectorRoots::new(big_n, l, kp, prec)?;
    let wp = roots.wp;
    let kpw = Float::with_val(wp, kp);
    let mut terms = Vec::with_capacity(big_n as usize);
    for q in 0..big_n {
        let p = (q + big_n - r) % big_n;
        let (ket, bra) = ordered_pair(big_n, l, p, q);
        let input = roots.input(big_n, l, ket, bra, &kpw)?;
        let det = dhat_det(&input, &DetOptions::default())?;
        let sum = if matches!(method, Method::Sum | Method::All) { Some(dhat_sum(&input)?) } else { None };
        let closed = if matches!(method, Method::Closed | Method::All) { dhat_closed(&input) } else { None };
        let dhat = match method {
            Method::Sum => sum.clone().expect("computed above"),
            Method::Closed => closed.clone().ok_or_else(|| {
                CpmError::InvalidInput(format!("no closed form for m = {}, m' = {}", input.m(), input.mp()))
            })?,
            _ => det.value.clone(),
        };
        let value = Float::with_val(wp, dhat.square_ref()) * &input.cc_product;
        terms.push(OrderTerm {
            q_lattice: q,
            ket,
            bra,
            m: input.m(),
            mp: input.mp(),
            dhat_det: det.value,
            dhat_sum: sum,
            dhat_closed: closed,
            cc_product: input.cc_product.clone(),
            value,
            orthogonality_residual: det.orthogonality_residual,
            imag_residual: det.imag_residual,
        });
    }
    let mut mean = Float::new(wp);
    let mut lo = terms[0].value.clone();
    let mut hi = terms[0].value.clone();
    for t in &terms {
        mean += &t.value;
        if t.value < lo {
            lo = t.value.clone();
        }
        if t.value > hi {
            hi = t.value.clone();
        }
    }
    mean /= big_n;
    Ok(OrderReport {
        big_n,
        l,
        r,
        kp: kpw.clone(),
        prec: wp,
        terms,
        finite_l: mean,
        spread: hi - lo,
        limit: order_limit(big_n, r, &kpw),
    })
}

#[derive(Serialize)]
struct OrderTermJson {
    q: u32,
    ket: u32,
    bra: u32,
    m: usize,
    m_prime: usize,
    dhat_det: String,
    dhat_sum: Option<String>,
    dhat_closed: Option<String>,
    cc_product: String,
    value: String,
    orthogonality_residual: f64,
    imag_residual: f64,
}

#[derive(Serialize)]
pub struct OrderReportJson {
    #[serde(rename = "N")]
    n: u32,
    #[serde(rename = "L")]
    l: usize,
    r: u32,
    precision_bits: u32,
    finite_l: String,
    limit: String,
    abs_error: String,
    q_spread: String,
    terms: Vec<OrderTermJson>,
}

impl OrderReport {
    pub fn to_json(&self) -> OrderReportJson {
        OrderReportJson {
            n: self.big_n,
            l: self.l,
            r: self.r,
            precision_bits: self.prec,
            finite_l: float_to_decimal(&self.finite_l),
            limit: float_to_decimal(&self.limit),
            abs_error: float_to_decimal(&self.abs_error()),
            q_spread: float_to_decimal(&self.spread),
            terms: self
                .terms
                .iter()
                .map(|t| OrderTermJson {
                    q: t.q_lattice,
                    ket: t.ket,
                    bra: t.bra,
                    m: t.m,
                    m_prime: t.mp,
                    dhat_det: float_to_decimal(&t.dhat_det),
                    dhat_sum: t.dhat_sum.as_ref().map(float_to_decimal),
                    dhat_closed: t.dhat_closed.as_ref().map(float_to_decimal),
                    cc_product: float_to_decimal(&t.cc_product),
                    value: float_to_decimal(&t.value),
                    orthogonality_residual: t.orthogonality_residual,
                    imag_residual: t.imag_residual,
                })
                .collect(),
        }
    }
}

/// Outcome of the n = 1 brute-force evaluation.
#[derive(Clone, Debug)]
pub struct Psi1Report {
    /// −β'β z_ℓ 𝔥/(Λ'_0 Λ_0) with 𝔥 from the configuration sum
    pub brute: Float,
    /// the closed product with W = {ℓ}, W' = {j}
    pub closed: Float,
    pub h_configs: Float,
    pub h_table: Float,
    pub h_closed: Float,
    pub z: Float,
    pub zp: Float,
}

impl Psi1Report {
    pub fn rel(a: &Float, b: &Float) -> f64 {
        let prec = a.prec();
        let d = Float::with_val(prec, a - b).abs();
        let s = Float::with_val(prec, a.abs_ref()).max(&Float::with_val(prec, b.abs_ref()));
        if s.is_zero() {
            0.0
        } else {
            (d / s).to_f64()
        }
    }
}

fn eval_poly(coeffs: &[rug::Integer], x: &Float, prec: u32) -> Float {
    let mut v = Float::new(prec);
    for c in coeffs.iter().rev() {
        v = v * x + c;
    }
    v
}

fn eval_deriv(coeffs: &[rug::Integer], x: &Float, prec: u32) -> Float {
    let mut v = Float::new(prec);
    for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
        v = v * x + Float::with_val(prec, Integer::from(c * k as u32));
    }
    v
}

/// 𝔥^{Q,P}(z', z) in closed form, valid at roots z' of P_Q and z of P_P.
///
/// For Q ≤ P: z' P_P(z) P'_Q(z')/(z'−z) + z' P_Q(z) P_P(z')/(z'−z)².
/// At z = z' within one sector the 0/0 limit −z' P'(z')² is returned.
/// For Q > P the table symmetry 𝔥^{Q,P}(z', z) = 𝔥^{P,Q}(z, z') swaps roles.
pub fn h_closed(poly_q: &DrinfeldPoly, poly_p: &DrinfeldPoly, zp: &Float, z: &Float, prec: u32) -> Float {
    if poly_q.q > poly_p.q {
        return h_closed(poly_p, poly_q, z, zp, prec);
    }
    let cq: Vec<_> = poly_q.lambda.iter().map(bigint_to_rug).collect();
    let cp: Vec<_> = poly_p.lambda.iter().map(bigint_to_rug).collect();
    let d = Float::with_val(prec, zp - z);
    let scale = Float::with_val(prec, zp.abs_ref()) >> (prec / 2);
    if poly_q.q == poly_p.q && Float::with_val(prec, d.abs_ref()) < scale {
        // same root of the same polynomial: the first term tends to −z' P'(z')²
        return -(Float::with_val(prec, zp * eval_deriv(&cq, zp, prec).square()));
    }
    let t1 = Float::with_val(prec, zp * eval_poly(&cp, z, prec)) * eval_deriv(&cq, zp, prec) / &d;
    let t2 = Float::with_val(prec, zp * eval_poly(&cq, z, prec)) * eval_poly(&cp, zp, prec)
        / Float::with_val(prec, d.square_ref());
    t1 + t2
}

/// 𝔥^{Q,P}(z', z) = Σ_{a<m'} Σ_{b<m} z'^a z^b 𝒢_{aN+Q, bN+P}
pub fn h_from_table(table: &GTable, q: u32, p: u32, mq: usize, mp: usize, zp: &Float, z: &Float, prec: u32) -> Float {
    let n = table.big_n as i64;
    let mut v = Float::new(prec);
    let mut zpa = new_f(prec, 1);
    for a in 0..mq {
        let mut zb = new_f(prec, 1);
        for b in 0..mp {
            let g = table.get(a as i64 * n + q as i64, b as i64 * n + p as i64);
            v += Float::with_val(prec, &zpa * &zb) * bigint_to_rug(&g);
            zb *= z;
        }
        zpa *= zp;
    }
    v
}

/// Σ_{Σn=N} Ḡ_Q({n}, z') G_P({n}, z), with G built from the exact K
/// coefficients embedded as complex numbers.
pub fn h_from_configs(big_n: u32, l: usize, q: u32, p: u32, mq: usize, mp: usize, zp: &Float, z: &Float, prec: u32) -> Result<Complex> {
    let configs = edge_configs(big_n, l, big_n)?;
    let d = (big_n as usize - 1) * l - big_n as usize;
    let nn = big_n as usize;
    let mut total = Complex::new(prec);
    for cfg in &configs {
        let (k, kbar) = k_coeffs(cfg, d)?;
        let mut gbar = Complex::new(prec);
        let mut pw = Complex::with_val(prec, (1, 0));
        for a in 0..mq {
            let idx = a * nn + q as usize;
            if idx <= d {
                gbar += Complex::with_val(prec, &pw * kbar[idx].embed_complex(prec));
            }
            pw *= zp;
        }
        let mut g = Complex::new(prec);
        let mut pw = Complex::with_val(prec, (1, 0));
        for b in 0..mp {
            let idx = b * nn + p as usize;
            if idx <= d {
                g += Complex::with_val(prec, &pw * k[idx].embed_complex(prec));
            }
            pw *= z;
        }
        total += gbar * g;
    }
    Ok(total)
}

/// β_{ℓ,0} = −Λ_0/(Λ_m z_ℓ) Π_{k≠ℓ} 1/(z_ℓ − z_k)
fn beta(poly: &DrinfeldPoly, roots: &[Float], ell: usize, prec: u32) -> Float {
    let l0 = bigint_to_rug(&poly.lambda[0]);
    let lm = bigint_to_rug(poly.lambda.last().expect("nonempty"));
    let mut v = -(Float::with_val(prec, &l0) / Float::with_val(prec, &lm)) / &roots[ell];
    for (k, zk) in roots.iter().enumerate() {
        if k != ell {
            v /= Float::with_val(prec, &roots[ell] - zk);
        }
    }
    v
}

/// ⟨Ω|E⁻_{j,Q} E⁺_{ℓ,P}|Ω⟩ from the configuration sum, in Drinfeld labels:
/// z runs over the roots of P_P, z' over those of P_Q.
pub fn psi1_brute(big_n: u32, l: usize, p: u32, q: u32, j: usize, ell: usize, prec: u32) -> Result<Psi1Report> {
    let poly_p = lambda_counts(big_n, l, p)?;
    let poly_q = lambda_counts(big_n, l, q)?;
    let (mp, mq) = (poly_p.degree(), poly_q.degree());
    if ell >= mp || j >= mq {
        return Err(CpmError::InvalidInput(format!(
            "root indices out of range: ℓ={ell} (m={mp}), j={j} (m'={mq})"
        )));
    }
    let wp = 2 * prec;
    let z = solve_roots(&poly_p, wp)?;
    let zq = solve_roots(&poly_q, wp)?;
    let table = calg_table(big_n, l)?;
    let h_table = h_from_table(&table, q, p, mq, mp, &zq[j], &z[ell], wp);
    let h_cfg = h_from_configs(big_n, l, q, p, mq, mp, &zq[j], &z[ell], wp)?;
    let (h_cfg_re, h_cfg_im) = h_cfg.into_real_imag();
    // 𝔥 vanishes between distinct roots of one sector; there only round-off remains
    let floor = Float::with_val(wp, Float::i_exp(1, -((wp * 3 / 4) as i32)));
    let scale = Float::with_val(wp, h_cfg_re.abs_ref()) * Float::with_val(wp, 1e-20);
    if Float::with_val(wp, h_cfg_im.abs_ref()) > scale.max(&floor) {
        return Err(CpmError::Verification(format!(
            "configuration sum for 𝔥 has imaginary part {:e}",
            h_cfg_im.to_f64()
        )));
    }
    let h_cl = h_closed(&poly_q, &poly_p, &zq[j], &z[ell], wp);
    let b = beta(&poly_p, &z, ell, wp);
    let bq = beta(&poly_q, &zq, j, wp);
    let l0p = Float::with_val(wp, bigint_to_rug(&poly_p.lambda[0]));
    let l0q = Float::with_val(wp, bigint_to_rug(&poly_q.lambda[0]));
    let brute = -(bq * b * &z[ell] * &h_cfg_re) / (l0q * l0p);
    let closed = psi_closed(&[ell], &[j], &z, &zq, PsiVariant::Plain)?;
    Ok(Psi1Report {
        brute,
        closed,
        h_configs: h_cfg_re,
        h_table,
        h_closed: h_cl,
        z: z[ell].clone(),
        zp: zq[j].clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    const PREC: u32 = 128;

    fn kp(v: f64) -> Float {
        Float::with_val(2 * PREC, v)
    }

    fn rel(a: &Float, b: &Float) -> f64 {
        Psi1Report::rel(a, b)
    }

    /// relative agreement, or both below an absolute floor of 1e-50
    fn close(a: &Float, b: &Float, tol: f64) -> bool {
        rel(a, b) < tol || Float::with_val(a.prec(), a - b).abs().to_f64() < 1e-50
    }

    #[test]
    fn coupling_examples() {
        let k = kp(0.5);
        let lam = Float::with_val(2 * PREC, 1.25).sqrt();
        // ((1+√1.25)² − 0.25)/(4√1.25) evaluated in f64
        let lf = 1.25f64.sqrt();
        let expected = ((lf + 1.0).powi(2) - 0.25) / (4.0 * lf);
        assert!((cc_factor(&lam, &k).to_f64() - expected).abs() < 1e-14);
        assert!((expected - 0.947_213_595_5).abs() < 1e-10);
        let edge = Float::with_val(2 * PREC, 1.5);
        assert!((u_of(&edge, &k).to_f64() - 0.5 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn coupling_routes_agree() {
        let k = kp(0.3);
        let input = build_input(3, 6, 1, 0, &Float::with_val(PREC, 0.3), PREC).unwrap();
        let one = Float::with_val(input.prec, 1);
        for i in 0..input.m() {
            // u = (1−k')/(e^{2θ} − k'), e^{2θ} = (λ+1−k')/(λ−1+k')
            let lam = &input.lambda[i];
            let e2t = (Float::with_val(input.prec, lam + 1u32) - &k) / (Float::with_val(input.prec, lam - 1u32) + &k);
            let u2 = Float::with_val(input.prec, &one - &k) / (e2t - &k);
            assert!(rel(&u2, &input.u[i]) < 1e-60);
            // û = −(λ−1−k')/(λ+1−k')
            let uh = -(Float::with_val(input.prec, lam - 1u32) - &k) / (Float::with_val(input.prec, lam + 1u32) - &k);
            assert!(rel(&uh, &input.uhat[i]) < 1e-60);
        }
        for i in 0..input.mp() {
            let lam = &input.lambdap[i];
            let uph = (Float::with_val(input.prec, lam - 1u32) + &k) / (Float::with_val(input.prec, lam + 1u32) + &k);
            assert!(rel(&uph, &input.uphat[i]) < 1e-60);
        }
    }

    #[test]
    fn psi_base_cases() {
        let z = vec![Float::with_val(PREC, -2)];
        let zp = vec![Float::with_val(PREC, -0.5)];
        assert_eq!(psi_closed(&[], &[], &z, &zp, PsiVariant::Plain).unwrap(), 1);
        assert_eq!(psi_closed(&[0], &[0], &z, &zp, PsiVariant::Plain).unwrap(), 1);
        assert!(psi_closed(&[0, 0], &[0, 0], &z, &zp, PsiVariant::Plain).is_err());
        assert!(psi_closed(&[0], &[], &z, &zp, PsiVariant::Plain).is_err());
    }

    #[test]
    fn psi_reduction_matches_prefactor() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let input = build_input(3, 12, 1, 0, &Float::with_val(PREC, 0.5), PREC).unwrap();
        let (z, zp, prec) = (&input.z, &input.zp, input.prec);
        for variant in [PsiVariant::Plain, PsiVariant::Hatted] {
            for _ in 0..20 {
                let n = rng.gen_range(0..input.m().min(input.mp()));
                let mut idx: Vec<usize> = (0..input.m()).collect();
                let mut idxp: Vec<usize> = (0..input.mp()).collect();
                for i in (1..idx.len()).rev() {
                    idx.swap(i, rng.gen_range(0..=i));
                }
                for i in (1..idxp.len()).rev() {
                    idxp.swap(i, rng.gen_range(0..=i));
                }
                let w = &idx[..n];
                let wp_ = &idxp[..n];
                let (k, el) = (idx[n], idxp[n]);
                let mut w1 = w.to_vec();
                w1.push(k);
                let mut wp1 = wp_.to_vec();
                wp1.push(el);
                let big = psi_closed(&w1, &wp1, z, zp, variant).unwrap();
                let small = psi_closed(w, wp_, z, zp, variant).unwrap();
                let mut pre = Float::with_val(prec, 1);
                for &jj in wp_ {
                    pre *= Float::with_val(prec, &zp[el] - &zp[jj]) / Float::with_val(prec, &z[k] - &zp[jj]);
                }
                for &jj in w {
                    pre *= Float::with_val(prec, &z[k] - &z[jj]) / Float::with_val(prec, &zp[el] - &z[jj]);
                }
                for jj in (0..z.len()).filter(|x| !w1.contains(x)) {
                    pre *= Float::with_val(prec, &zp[el] - &z[jj]) / Float::with_val(prec, &z[k] - &z[jj]);
                }
                for jj in (0..zp.len()).filter(|x| !wp1.contains(x)) {
                    pre *= Float::with_val(prec, &z[k] - &zp[jj]) / Float::with_val(prec, &zp[el] - &zp[jj]);
                }
                if variant == PsiVariant::Hatted {
                    pre = pre / &z[k] * &zp[el];
                }
                assert!(rel(&big, &(pre * small)) < 1e-50);
            }
        }
    }

    #[test]
    fn revolving_door_is_complete_and_minimal_change() {
        for m in 0..8 {
            for k in 0..=m {
                let combos = revolving_door(m, k);
                let expected = (0..k).fold(1usize, |acc, i| acc * (m - i) / (i + 1));
                assert_eq!(combos.len(), expected);
                let mut sorted: Vec<Vec<usize>> = combos
                    .iter()
                    .map(|c| {
                        let mut c = c.clone();
                        c.sort();
                        c
                    })
                    .collect();
                sorted.sort();
                sorted.dedup();
                assert_eq!(sorted.len(), expected);
                for pair in combos.windows(2) {
                    let diff = pair[0].iter().filter(|x| !pair[1].contains(x)).count();
                    assert!(diff <= 1);
                }
            }
        }
    }

    #[test]
    fn empty_sectors_give_one() {
        // N=2, L=2: sector 1 has no roots, sector 0 has one
        let input = build_input(2, 2, 1, 1, &Float::with_val(PREC, 0.5), PREC).unwrap();
        assert_eq!(dhat_sum(&input).unwrap(), 1);
        assert_eq!(dhat_det(&input, &DetOptions::default()).unwrap().value, 1);
    }

    #[test]
    fn three_routes_agree_small() {
        for (l, kpv) in [(6usize, 0.2), (7, 0.5), (9, 0.8)] {
            for a in 0..3u32 {
                for b in 0..3u32 {
                    if a == b {
                        continue;
                    }
                    let (p, q) = ordered_pair(3, l, a, b);
                    let input = build_input(3, l, p, q, &Float::with_val(PREC, kpv), PREC).unwrap();
                    let s = dhat_sum(&input).unwrap();
                    let d = dhat_det(&input, &DetOptions::default()).unwrap();
                    assert!(rel(&s, &d.value) < 1e-30, "L={l} P={p} Q={q}: {} vs {}", s.to_f64(), d.value.to_f64());
                    if let Some(c) = dhat_closed(&input) {
                        assert!(rel(&s, &c) < 1e-30, "closed L={l} P={p} Q={q}");
                    }
                    let h = dhat_sum_hatted(&input).unwrap();
                    assert!(rel(&s, &h) < 1e-30);
                }
            }
        }
    }

    #[test]
    fn determinant_sign_invariance() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let input = build_input(3, 9, 1, 0, &Float::with_val(PREC, 0.5), PREC).unwrap();
        let base = dhat_det(&input, &DetOptions::default()).unwrap().value;
        for _ in 0..10 {
            let opts = DetOptions {
                epsilon: if rng.gen_bool(0.5) { 1 } else { -1 },
                flip_f: (0..input.m()).map(|_| rng.gen_bool(0.5)).collect(),
                flip_fp: (0..input.mp()).map(|_| rng.gen_bool(0.5)).collect(),
            };
            let v = dhat_det(&input, &opts).unwrap();
            assert!(rel(&base, &v.value) < 1e-40);
            assert!(v.imag_residual < 1e-40);
        }
    }

    #[test]
    fn baxter_summand_ratio() {
        let input = build_input(3, 8, 0, 1, &Float::with_val(PREC, 0.4), PREC).unwrap();
        let prec = input.prec;
        let c: Vec<Float> = input.z.iter().map(c_of).collect();
        let cp: Vec<Float> = input.zp.iter().map(c_of).collect();
        for n in 0..=input.m().min(input.mp()) {
            for w in revolving_door(input.m(), n) {
                for wp_ in revolving_door(input.mp(), n) {
                    let ours = psi_closed(&w, &wp_, &input.z, &input.zp, PsiVariant::Plain).unwrap();
                    let theirs = baxter_summand(&c, &cp, &w, &wp_, prec);
                    let ratio = baxter_ratio(&c, &cp, &w, &wp_, prec);
                    assert!(rel(&ours, &(theirs * ratio)) < 1e-50);
                }
            }
        }
    }

    #[test]
    fn sum_guard() {
        let input = build_input(3, 40, 0, 1, &Float::with_val(PREC, 0.5), PREC).unwrap();
        assert!(matches!(dhat_sum(&input), Err(CpmError::SizeGuard { .. })));
    }

    #[test]
    fn h_symmetry_and_closed_form() {
        let table = calg_table(3, 5).unwrap();
        for (q, p) in [(0u32, 1u32), (1, 2), (0, 0), (2, 1)] {
            let pq = lambda_counts(3, 5, q).unwrap();
            let pp = lambda_counts(3, 5, p).unwrap();
            let zq = solve_roots(&pq, 256).unwrap();
            let zp_ = solve_roots(&pp, 256).unwrap();
            for x in &zq {
                for y in &zp_ {
                    let h1 = h_from_table(&table, q, p, pq.degree(), pp.degree(), x, y, 256);
                    let h2 = h_from_table(&table, p, q, pp.degree(), pq.degree(), y, x, 256);
                    assert!(close(&h1, &h2, 1e-60));
                    let hc = h_closed(&pq, &pp, x, y, 256);
                    assert!(close(&h1, &hc, 1e-50), "Q={q} P={p}");
                }
            }
        }
    }

    #[test]
    fn psi1_n3_l4() {
        for p in 0..3u32 {
            for q in 0..3u32 {
                let mp = lambda_counts(3, 4, p).unwrap().degree();
                let mq = lambda_counts(3, 4, q).unwrap().degree();
                for ell in 0..mp {
                    for j in 0..mq {
                        let r = psi1_brute(3, 4, p, q, j, ell, PREC).unwrap();
                        assert!(close(&r.h_configs, &r.h_table, 1e-40));
                        assert!(close(&r.h_table, &r.h_closed, 1e-40));
                        let expected = if p >= q { r.closed.clone() } else { r.closed.clone() * &r.z / &r.zp };
                        assert!(close(&r.brute, &expected, 1e-30), "P={p} Q={q}");
                    }
                }
            }
        }
    }

    #[test]
    fn limit_values() {
        let k = kp(0.5);
        let v = order_limit(3, 1, &k).to_f64();
        assert!((v - 0.75f64.powf(2.0 / 9.0)).abs() < 1e-15);
        let v = order_limit(2, 1, &k).to_f64();
        assert!((v - 0.75f64.powf(0.25)).abs() < 1e-15);
    }

    #[test]
    fn r_product_form_matches() {
        for l in [6usize, 9] {
            for a in 0..3u32 {
                let b = (a + 2) % 3;
                let (p, q) = ordered_pair(3, l, a, b);
                let input = build_input(3, l, p, q, &Float::with_val(PREC, 0.5), PREC).unwrap();
                let d = dhat_det(&input, &DetOptions::default()).unwrap().value;
                let v = Float::with_val(input.prec, d.square_ref()) * &input.cc_product;
                if let Some(rp) = r_product_form(&input) {
                    assert!(rel(&v, &rp) < 1e-30, "L={l} P={p} Q={q}");
                }
            }
        }
    }
}
