//! Brute-force oracle: superintegrable transfer matrices and the spin-chain
//! Hamiltonian in the edge basis, dense diagonalization at small L, overlap
//! products and the finite-separation pair correlation.
//!
//! Everything here is double precision; it is meant to be independent of the
//! exact/multiprecision machinery it checks.

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat, Side};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{CpmError, Result};

/// Default cap on the sector dimension N^{L−1}.
pub const SECTOR_GUARD: usize = 4096;

/// Relative tolerance below which the two largest moduli count as degenerate.
const DEGENERACY_TOL: f64 = 1e-9;

/// A point on the chiral Potts curve,
/// k x^N = 1 − k'/μ^N, k y^N = 1 − k' μ^N.
#[derive(Clone, Copy, Debug)]
pub struct RapidityPoint {
    pub big_n: u32,
    pub x: c64,
    pub y: c64,
    pub mu: c64,
    pub k: f64,
    pub kp: f64,
}

impl RapidityPoint {
    pub fn curve_residual(&self) -> f64 {
        let n = self.big_n as i32;
        let mun = self.mu.powi(n);
        let r1 = self.x.powi(n) * self.k - (c64::new(1.0, 0.0) - c64::new(self.kp, 0.0) / mun);
        let r2 = self.y.powi(n) * self.k - (c64::new(1.0, 0.0) - mun * self.kp);
        r1.norm().max(r2.norm())
    }
}

fn check_kp(kp: f64) -> Result<f64> {
    if !(kp > 0.0 && kp < 1.0) {
        return Err(CpmError::InvalidInput(format!("k' must lie in (0,1), got {kp}")));
    }
    Ok((1.0 - kp * kp).sqrt())
}

fn check_n(big_n: u32) -> Result<()> {
    if big_n < 2 {
        return Err(CpmError::InvalidInput(format!("N must be ≥ 2, got {big_n}")));
    }
    Ok(())
}

/// The vertical superintegrable point: μ_p = 1, x_p = y_p = ((1−k')/k)^{1/N}.
pub fn superintegrable_point(big_n: u32, kp: f64) -> Result<RapidityPoint> {
    check_n(big_n)?;
    let k = check_kp(kp)?;
    let x = ((1.0 - kp) / k).powf(1.0 / big_n as f64);
    Ok(RapidityPoint {
        big_n,
        x: c64::new(x, 0.0),
        y: c64::new(x, 0.0),
        mu: c64::new(1.0, 0.0),
        k,
        kp,
    })
}

/// The point with μ^N = t (principal N-th roots throughout).
pub fn rapidity_point(big_n: u32, kp: f64, t: f64) -> Result<RapidityPoint> {
    check_n(big_n)?;
    let k = check_kp(kp)?;
    if !(t > 0.0) {
        return Err(CpmError::InvalidInput(format!("μ^N must be positive, got {t}")));
    }
    let inv_n = 1.0 / big_n as f64;
    let root = |v: f64| c64::new(v, 0.0).powf(inv_n);
    Ok(RapidityPoint {
        big_n,
        x: root((1.0 - kp / t) / k),
        y: root((1.0 - kp * t) / k),
        mu: c64::new(t.powf(inv_n), 0.0),
        k,
        kp,
    })
}

/// The two horizontal rapidities used by the oracle: μ^N = k'^{−1/2} and k'^{−1/3}.
/// Both give real positive x, y.
pub fn default_rapidities(big_n: u32, kp: f64) -> Result<(RapidityPoint, RapidityPoint)> {
    Ok((
        rapidity_point(big_n, kp, kp.powf(-0.5))?,
        rapidity_point(big_n, kp, kp.powf(-1.0 / 3.0))?,
    ))
}

fn omega(big_n: u32, e: i64) -> c64 {
    let a = 2.0 * PI * (e.rem_euclid(big_n as i64) as f64) / big_n as f64;
    c64::new(a.cos(), a.sin())
}

/// Boltzmann weights W_pq(n), W̄_pq(n), n = 0..N, normalized to W(0) = W̄(0) = 1.
pub fn boltzmann_weights(p: &RapidityPoint, q: &RapidityPoint) -> Result<(Vec<c64>, Vec<c64>)> {
    if (p.k - q.k).abs() > 1e-12 || p.big_n != q.big_n {
        return Err(CpmError::CurveMismatch { k_p: p.k, k_q: q.k });
    }
    let (w, wb) = weights_through(p, q, p.big_n as usize - 1);
    Ok((w, wb))
}

fn weights_through(p: &RapidityPoint, q: &RapidityPoint, nmax: usize) -> (Vec<c64>, Vec<c64>) {
    let big_n = p.big_n;
    let mut w = vec![c64::new(1.0, 0.0)];
    let mut wb = vec![c64::new(1.0, 0.0)];
    for j in 1..=nmax {
        let oj = omega(big_n, j as i64);
        let o1 = omega(big_n, 1);
        let prev = w[j - 1];
        w.push(prev * (p.mu / q.mu) * (q.y - p.x * oj) / (p.y - q.x * oj));
        let prevb = wb[j - 1];
        wb.push(prevb * (p.mu * q.mu) * (o1 * p.x - q.x * oj) / (q.y - p.y * oj));
    }
    (w, wb)
}

/// |W(N) − W(0)| + |W̄(N) − W̄(0)| from continuing the products one full period.
pub fn weight_periodicity_residual(p: &RapidityPoint, q: &RapidityPoint) -> f64 {
    let n = p.big_n as usize;
    let (w, wb) = weights_through(p, q, n);
    (w[n] - w[0]).norm() + (wb[n] - wb[0]).norm()
}

/// Edge configurations with Σ n_j ≡ 0 mod N, lexicographic in (n_1..n_{L−1}).
pub fn edge_basis(big_n: u32, l: usize) -> Result<Vec<Vec<u32>>> {
    check_n(big_n)?;
    if l < 1 {
        return Err(CpmError::InvalidInput("L must be ≥ 1".into()));
    }
    let dim = (big_n as u128).checked_pow(l as u32 - 1).unwrap_or(u128::MAX);
    if dim > SECTOR_GUARD as u128 {
        return Err(CpmError::SizeGuard {
            what: format!("sector dimension N^(L−1) at N={big_n}, L={l}"),
            needed: dim,
            limit: SECTOR_GUARD as u128,
            hint: String::new(),
        });
    }
    let dim = dim as usize;
    let mut out = Vec::with_capacity(dim);
    let mut digits = vec![0u32; l - 1];
    for _ in 0..dim {
        let s: u32 = digits.iter().sum();
        let mut cfg = digits.clone();
        cfg.push((big_n - s % big_n) % big_n);
        out.push(cfg);
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < big_n {
                break;
            }
            *d = 0;
        }
    }
    Ok(out)
}

/// Spins from the first spin and the edges: σ_{j+1} = σ_j − n_j.
pub fn spin_of(s1: u32, edges: &[u32], big_n: u32) -> Vec<u32> {
    let mut s = Vec::with_capacity(edges.len());
    s.push(s1 % big_n);
    for j in 0..edges.len() - 1 {
        let prev = s[j];
        s.push((prev + big_n - edges[j] % big_n) % big_n);
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SpinMatrixKind {
    T,
    THat,
    Hamiltonian,
}

/// Spin-basis matrix elements of one of the row operators.
#[derive(Clone, Debug)]
pub struct SpinOperator {
    pub big_n: u32,
    pub kind: SpinMatrixKind,
    w: Vec<c64>,
    wb: Vec<c64>,
    alpha: Vec<c64>,
    kp: f64,
}

impl SpinOperator {
    pub fn transfer(p: &RapidityPoint, q: &RapidityPoint, hat: bool) -> Result<Self> {
        let (w, wb) = boltzmann_weights(p, q)?;
        Ok(SpinOperator {
            big_n: p.big_n,
            kind: if hat { SpinMatrixKind::THat } else { SpinMatrixKind::T },
            w,
            wb,
            alpha: Vec::new(),
            kp: p.kp,
        })
    }

    pub fn hamiltonian(big_n: u32, kp: f64) -> Result<Self> {
        check_n(big_n)?;
        check_kp(kp)?;
        let alpha = (0..big_n)
            .map(|n| {
                if n == 0 {
                    c64::new(0.0, 0.0)
                } else {
                    c64::new(2.0, 0.0) / (c64::new(1.0, 0.0) - omega(big_n, -(n as i64)))
                }
            })
            .collect();
        Ok(SpinOperator {
            big_n,
            kind: SpinMatrixKind::Hamiltonian,
            w: Vec::new(),
            wb: Vec::new(),
            alpha,
            kp,
        })
    }

    /// ⟨σ|M|σ'⟩
    pub fn element(&self, s: &[u32], sp: &[u32]) -> c64 {
        let n = self.big_n;
        let l = s.len();
        let d = |a: u32, b: u32| ((a + n - b) % n) as usize;
        match self.kind {
            SpinMatrixKind::T => {
                let mut v = c64::new(1.0, 0.0);
                for j in 0..l {
                    v *= self.w[d(s[j], sp[j])] * self.wb[d(s[(j + 1) % l], sp[j])];
                }
                v
            }
            SpinMatrixKind::THat => {
                let mut v = c64::new(1.0, 0.0);
                for j in 0..l {
                    v *= self.wb[d(s[j], sp[j])] * self.w[d(s[j], sp[(j + 1) % l])];
                }
                v
            }
            SpinMatrixKind::Hamiltonian => {
                // H = −Σ_j Σ_n α_n (Z_j^n Z_{j+1}^{−n} + k' X_j^n)
                let diffs: Vec<usize> = (0..l).filter(|&j| s[j] != sp[j]).collect();
                match diffs.len() {
                    0 => {
                        let mut v = c64::new(0.0, 0.0);
                        for j in 0..l {
                            let e = s[j] as i64 - s[(j + 1) % l] as i64;
                            for m in 1..n {
                                v -= self.alpha[m as usize] * omega(n, m as i64 * e);
                            }
                        }
                        v
                    }
                    1 => {
                        let j = diffs[0];
                        -self.alpha[d(s[j], sp[j])] * self.kp
                    }
                    _ => c64::new(0.0, 0.0),
                }
            }
        }
    }
}

/// A spin-shift sector block in the edge basis.
#[derive(Clone, Debug)]
pub struct SectorMatrix {
    pub big_n: u32,
    pub l: usize,
    pub q: u32,
    pub mat: Mat<c64>,
}

/// ⟨Q; n'|M|Q; n⟩ = (1/N) Σ_{s', s} ω^{Q(s'−s)} ⟨s', n'|M|s, n⟩.
///
/// With `shift_invariant` the double sum collapses to Σ_d ω^{Qd} ⟨d, n'|M|0, n⟩.
pub fn sector_block(op: &SpinOperator, l: usize, q: u32, edges: &[Vec<u32>], shift_invariant: bool) -> SectorMatrix {
    let n = op.big_n;
    let dim = edges.len();
    let rows: Vec<Vec<c64>> = (0..dim)
        .into_par_iter()
        .map(|a| {
            (0..dim)
                .map(|b| {
                    if shift_invariant {
                        let sb = spin_of(0, &edges[b], n);
                        (0..n)
                            .map(|d| omega(n, q as i64 * d as i64) * op.element(&spin_of(d, &edges[a], n), &sb))
                            .sum()
                    } else {
                        let mut v = c64::new(0.0, 0.0);
                        for s1p in 0..n {
                            for s1 in 0..n {
                                v += omega(n, q as i64 * (s1p as i64 - s1 as i64))
                                    * op.element(&spin_of(s1p, &edges[a], n), &spin_of(s1, &edges[b], n));
                            }
                        }
                        v / n as f64
                    }
                })
                .collect()
        })
        .collect();
    SectorMatrix {
        big_n: n,
        l,
        q,
        mat: Mat::from_fn(dim, dim, |i, j| rows[i][j]),
    }
}

/// Full spin-basis matrix, states in lexicographic order of (σ_1..σ_L).
pub fn spin_matrix(op: &SpinOperator, l: usize) -> Result<Mat<c64>> {
    let n = op.big_n;
    let dim = (n as u128).pow(l as u32);
    if dim > SECTOR_GUARD as u128 {
        return Err(CpmError::guard(format!("spin-basis dimension N^L at N={n}, L={l}"), dim, SECTOR_GUARD as u128));
    }
    let states = spin_states(n, l);
    Ok(Mat::from_fn(states.len(), states.len(), |i, j| op.element(&states[i], &states[j])))
}

pub fn spin_states(big_n: u32, l: usize) -> Vec<Vec<u32>> {
    let dim = (big_n as usize).pow(l as u32);
    (0..dim)
        .map(|mut i| {
            let mut s = vec![0u32; l];
            for j in (0..l).rev() {
                s[j] = (i % big_n as usize) as u32;
                i /= big_n as usize;
            }
            s
        })
        .collect()
}

/// Edges of a spin state: n_j = σ_j − σ_{j+1} (periodic).
pub fn edges_of(s: &[u32], big_n: u32) -> Vec<u32> {
    let l = s.len();
    (0..l).map(|j| (s[j] + big_n - s[(j + 1) % l]) % big_n).collect()
}

/// Reassemble the spin-basis matrix from all N sector blocks:
/// ⟨a, n'|M|b, n⟩ = (1/N) Σ_Q ω^{−Q(a−b)} ⟨Q; n'|M|Q; n⟩.
pub fn reassemble(blocks: &[SectorMatrix], edges: &[Vec<u32>]) -> Mat<c64> {
    let n = blocks[0].big_n;
    let l = blocks[0].l;
    let states = spin_states(n, l);
    let index: std::collections::HashMap<&Vec<u32>, usize> = edges.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let loc: Vec<(u32, usize)> = states.iter().map(|s| (s[0], index[&edges_of(s, n)])).collect();
    Mat::from_fn(states.len(), states.len(), |i, j| {
        let (a, ea) = loc[i];
        let (b, eb) = loc[j];
        let mut v = c64::new(0.0, 0.0);
        for blk in blocks {
            v += omega(n, -(blk.q as i64) * (a as i64 - b as i64)) * blk.mat[(ea, eb)];
        }
        v / n as f64
    })
}

/// Sector transfer matrices T_Q(q) and T̂_Q(q) with p at the superintegrable point.
pub fn build_sector_transfer(big_n: u32, l: usize, q: u32, rap: &RapidityPoint, kp: f64) -> Result<(SectorMatrix, SectorMatrix)> {
    if q >= big_n {
        return Err(CpmError::InvalidInput(format!("sector Q={q} outside 0..{big_n}")));
    }
    let p = superintegrable_point(big_n, kp)?;
    let edges = edge_basis(big_n, l)?;
    let t = SpinOperator::transfer(&p, rap, false)?;
    let th = SpinOperator::transfer(&p, rap, true)?;
    Ok((sector_block(&t, l, q, &edges, true), sector_block(&th, l, q, &edges, true)))
}

/// The sector block of the superintegrable chain Hamiltonian.
pub fn build_hamiltonian(big_n: u32, l: usize, q: u32, kp: f64) -> Result<SectorMatrix> {
    if q >= big_n {
        return Err(CpmError::InvalidInput(format!("sector Q={q} outside 0..{big_n}")));
    }
    let edges = edge_basis(big_n, l)?;
    let h = SpinOperator::hamiltonian(big_n, kp)?;
    Ok(sector_block(&h, l, q, &edges, true))
}

/// Frobenius norm.
pub fn fnorm(m: &Mat<c64>) -> f64 {
    m.norm_l2()
}

/// ‖AB − BA‖ / (‖A‖‖B‖)
pub fn relative_commutator(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    let c = a * b - b * a;
    fnorm(&c) / (fnorm(a) * fnorm(b))
}

/// ‖H − H†‖ / ‖H‖
pub fn hermiticity_residual(h: &Mat<c64>) -> f64 {
    let d = h - h.adjoint();
    fnorm(&d) / fnorm(h).max(f64::MIN_POSITIVE)
}

/// Full spectrum of a sector matrix with a biorthonormal left system.
#[derive(Clone, Debug)]
pub struct SectorSpectrum {
    pub q: u32,
    /// sorted by modulus, descending
    pub eigenvalues: Vec<c64>,
    /// right eigenvectors as columns
    pub right: Mat<c64>,
    /// left eigenvectors as rows, ⟨left_i|right_j⟩ = δ_ij
    pub left: Mat<c64>,
    pub biorthonormality_residual: f64,
    pub reconstruction_residual: f64,
}

impl SectorSpectrum {
    pub fn max_eigenvalue(&self) -> c64 {
        self.eigenvalues[0]
    }
}

/// Diagonalize M (or the product M·pair) and order by decreasing modulus.
pub fn sector_spectrum(m: &SectorMatrix, pair: Option<&SectorMatrix>) -> Result<SectorSpectrum> {
    let a = match pair {
        Some(b) => {
            if b.mat.nrows() != m.mat.nrows() || b.q != m.q {
                return Err(CpmError::InvalidInput("paired sector matrices differ in shape or sector".into()));
            }
            &m.mat * &b.mat
        }
        None => m.mat.clone(),
    };
    let dim = a.nrows();
    let evd = a.eigen().map_err(|e| CpmError::Linalg(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| s[j].norm().partial_cmp(&s[i].norm()).expect("finite eigenvalues"));
    let eigenvalues: Vec<c64> = order.iter().map(|&i| s[i]).collect();
    let right = Mat::from_fn(dim, dim, |i, j| u[(i, order[j])]);
    if dim >= 2 {
        let (a0, a1) = (eigenvalues[0].norm(), eigenvalues[1].norm());
        if (a0 - a1).abs() <= DEGENERACY_TOL * a0 {
            return Err(CpmError::DegenerateMaxEigenvalue {
                q: m.q,
                first: a0,
                second: a1,
            });
        }
    }
    let left = right.partial_piv_lu().inverse();
    let ident = Mat::<c64>::identity(dim, dim);
    let bio = fnorm(&(&left * &right - &ident));
    let diag = Mat::from_fn(dim, dim, |i, j| if i == j { eigenvalues[i] } else { c64::new(0.0, 0.0) });
    let recon = fnorm(&(&right * &diag * &left - &a)) / fnorm(&a).max(f64::MIN_POSITIVE);
    Ok(SectorSpectrum {
        q: m.q,
        eigenvalues,
        right,
        left,
        biorthonormality_residual: bio,
        reconstruction_residual: recon,
    })
}

/// 1 − |⟨g|r⟩|²/(‖g‖²‖r‖²) for two vectors (Hermitian inner product).
pub fn angle_defect(g: &[c64], r: &[c64]) -> f64 {
    let dot: c64 = g.iter().zip(r).map(|(a, b)| a.conj() * b).sum();
    let ng: f64 = g.iter().map(|a| a.norm_sqr()).sum();
    let nr: f64 = r.iter().map(|a| a.norm_sqr()).sum();
    (1.0 - dot.norm_sqr() / (ng * nr)).max(0.0)
}

fn column(m: &Mat<c64>, j: usize) -> Vec<c64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

/// Per-sector data shared by the overlap, pair-correlation and dump queries.
#[derive(Clone, Debug)]
pub struct LatticeOracle {
    pub big_n: u32,
    pub l: usize,
    pub kp: f64,
    pub spectra: Vec<SectorSpectrum>,
    /// 1 − cos² between the T T̂ max eigenvector and the H ground state, per Q
    pub ground_state_defect: Vec<f64>,
}

/// Tolerance for the max-eigenvector / ground-state identification.
pub const GROUND_STATE_TOL: f64 = 1e-8;

impl LatticeOracle {
    pub fn new(big_n: u32, l: usize, kp: f64) -> Result<Self> {
        let (rap, _) = default_rapidities(big_n, kp)?;
        let per_q: Vec<Result<(SectorSpectrum, f64)>> = (0..big_n)
            .into_par_iter()
            .map(|q| {
                let (t, th) = build_sector_transfer(big_n, l, q, &rap, kp)?;
                let spec = sector_spectrum(&t, Some(&th))?;
                let h = build_hamiltonian(big_n, l, q, kp)?;
                let evd = h
                    .mat
                    .self_adjoint_eigen(Side::Lower)
                    .map_err(|e| CpmError::Linalg(format!("Hermitian eigensolve failed: {e:?}")))?;
                let g = column(&evd.U().to_owned(), 0);
                let defect = angle_defect(&g, &column(&spec.right, 0));
                if defect > GROUND_STATE_TOL {
                    return Err(CpmError::Verification(format!(
                        "sector {q}: max transfer eigenvector is not the Hamiltonian ground state (1−cos² = {defect:e})"
                    )));
                }
                Ok((spec, defect))
            })
            .collect();
        let mut spectra = Vec::new();
        let mut ground_state_defect = Vec::new();
        for r in per_q {
            let (s, d) = r?;
            spectra.push(s);
            ground_state_defect.push(d);
        }
        Ok(LatticeOracle {
            big_n,
            l,
            kp,
            spectra,
            ground_state_defect,
        })
    }

    /// ⟨l_i^A | r_j^B⟩
    fn bracket(&self, a: u32, i: usize, b: u32, j: usize) -> c64 {
        let la = &self.spectra[a as usize].left;
        let rb = &self.spectra[b as usize].right;
        (0..la.ncols()).map(|k| la[(i, k)] * rb[(k, j)]).sum()
    }

    /// ⟨𝒴^Q_max|𝒴^P_max⟩⟨𝒴^P_max|𝒴^Q_max⟩ with ⟨l|r⟩ = 1 in each sector.
    pub fn overlap_product(&self, q: u32, p: u32) -> Result<f64> {
        if q >= self.big_n || p >= self.big_n {
            return Err(CpmError::InvalidInput(format!("sectors ({q}, {p}) outside 0..{}", self.big_n)));
        }
        let v = self.bracket(q, 0, p, 0) * self.bracket(p, 0, q, 0);
        Ok(v.re)
    }

    /// (1/N) Σ_Q overlap_product(Q, Q−r)
    pub fn mean_overlap(&self, r: u32) -> Result<f64> {
        let n = self.big_n;
        let mut s = 0.0;
        for q in 0..n {
            s += self.overlap_product(q, (q + n - r % n) % n)?;
        }
        Ok(s / n as f64)
    }

    /// g^{(r)}_{2ℓ} = (1/N) Σ_Q Σ_j (Δ^P_j/Δ^P_max)^{2ℓ} ⟨𝒴^Q_max|𝒴^P_j⟩⟨𝒴^P_j|𝒴^Q_max⟩,
    /// P = Q − r. Eigenvalues are scaled by their own sector maximum so that
    /// the ℓ → ∞ limit is the mean overlap product at any finite L.
    pub fn pair_correlation(&self, r: u32, ell: u32) -> Result<(f64, f64)> {
        let n = self.big_n;
        let mut total = c64::new(0.0, 0.0);
        for q in 0..n {
            let p = (q + n - r % n) % n;
            let sp = &self.spectra[p as usize];
            let top = sp.eigenvalues[0];
            for (j, lam) in sp.eigenvalues.iter().enumerate() {
                let w = (lam / top).powi(ell as i32);
                total += w * self.bracket(q, 0, p, j) * self.bracket(p, j, q, 0);
            }
        }
        total /= n as f64;
        Ok((total.re, total.im))
    }

    /// Spectral dump rows for sector P = Q − r against the max state of Q.
    pub fn spectral_rows(&self, r: u32) -> Vec<SpectralRow> {
        let n = self.big_n;
        let mut rows = Vec::new();
        for q in 0..n {
            let p = (q + n - r % n) % n;
            let sp = &self.spectra[p as usize];
            for (j, lam) in sp.eigenvalues.iter().enumerate() {
                let ov = self.bracket(q, 0, p, j) * self.bracket(p, j, q, 0);
                rows.push(SpectralRow {
                    q,
                    p,
                    j,
                    eigenvalue_modulus: lam.norm(),
                    overlap_with_max_q: ov.re,
                });
            }
        }
        rows
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralRow {
    #[serde(rename = "Q")]
    pub q: u32,
    #[serde(rename = "P")]
    pub p: u32,
    pub j: usize,
    pub eigenvalue_modulus: f64,
    pub overlap_with_max_q: f64,
}

/// overlap_product from a fresh oracle.
pub fn overlap_product(big_n: u32, l: usize, kp: f64, q: u32, p: u32) -> Result<f64> {
    LatticeOracle::new(big_n, l, kp)?.overlap_product(q, p)
}

/// pair_correlation from a fresh oracle; returns the real part.
pub fn pair_correlation(big_n: u32, l: usize, kp: f64, r: u32, ell: u32) -> Result<f64> {
    Ok(LatticeOracle::new(big_n, l, kp)?.pair_correlation(r, ell)?.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct SectorDiagnostics {
    #[serde(rename = "Q")]
    pub q: u32,
    /// 1 − Δ^Q_max/Δ^0_max with Δ² the top eigenvalue of T_Q T̂_Q
    pub gap: f64,
    /// ‖[T_Q T̂_Q(q), T_Q T̂_Q(q̃)]‖ relative
    pub commutator_rapidities: f64,
    /// ‖[T_Q T̂_Q, H_Q]‖ relative
    pub commutator_hamiltonian: f64,
    /// ‖[T_Q(q), T_Q(q̃)]‖ relative (single-row operators)
    pub commutator_single_row: f64,
    pub hermiticity: f64,
    /// 1 − cos² between the max eigenvectors at the two rapidities
    pub eigenvector_q_dependence: f64,
    pub ground_state_defect: f64,
    pub biorthonormality_residual: f64,
    pub reconstruction_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsReport {
    #[serde(rename = "N")]
    pub big_n: u32,
    #[serde(rename = "L")]
    pub l: usize,
    pub kp: f64,
    pub sectors: Vec<SectorDiagnostics>,
    /// (M, Z/(Δ^0_max)^{2M}) with Z = Σ_Q (Δ^Q_max)^{2M}
    pub z_ratio: Vec<(u32, f64)>,
}

/// Commutation, Hermiticity, degeneracy-gap and partition-function checks.
pub fn diagnostics(big_n: u32, l: usize, kp: f64) -> Result<DiagnosticsReport> {
    let (r1, r2) = default_rapidities(big_n, kp)?;
    let per_q: Vec<Result<(SectorDiagnostics, c64)>> = (0..big_n)
        .into_par_iter()
        .map(|q| {
            let (t1, th1) = build_sector_transfer(big_n, l, q, &r1, kp)?;
            let (t2, th2) = build_sector_transfer(big_n, l, q, &r2, kp)?;
            let h = build_hamiltonian(big_n, l, q, kp)?;
            let a1 = &t1.mat * &th1.mat;
            let a2 = &t2.mat * &th2.mat;
            let s1 = sector_spectrum(&t1, Some(&th1))?;
            let s2 = sector_spectrum(&t2, Some(&th2))?;
            let evd = h
                .mat
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| CpmError::Linalg(format!("Hermitian eigensolve failed: {e:?}")))?;
            let g = column(&evd.U().to_owned(), 0);
            Ok((
                SectorDiagnostics {
                    q,
                    gap: 0.0,
                    commutator_rapidities: relative_commutator(&a1, &a2),
                    commutator_hamiltonian: relative_commutator(&a1, &h.mat),
                    commutator_single_row: relative_commutator(&t1.mat, &t2.mat),
                    hermiticity: hermiticity_residual(&h.mat),
                    eigenvector_q_dependence: angle_defect(&column(&s1.right, 0), &column(&s2.right, 0)),
                    ground_state_defect: angle_defect(&g, &column(&s1.right, 0)),
                    biorthonormality_residual: s1.biorthonormality_residual,
                    reconstruction_residual: s1.reconstruction_residual,
                },
                s1.max_eigenvalue(),
            ))
        })
        .collect();
    let mut sectors = Vec::new();
    let mut tops = Vec::new();
    for r in per_q {
        let (d, top) = r?;
        sectors.push(d);
        tops.push(top.norm());
    }
    for (d, top) in sectors.iter_mut().zip(&tops) {
        d.gap = 1.0 - (top / tops[0]).sqrt();
    }
    let z_ratio = [1u32, 4, 16, 64]
        .iter()
        .map(|&m| (m, tops.iter().map(|t| (t / tops[0]).powi(m as i32)).sum()))
        .collect();
    Ok(DiagnosticsReport {
        big_n,
        l,
        kp,
        sectors,
        z_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &Mat<c64>) -> f64 {
        let mut v: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                v = v.max(m[(i, j)].norm());
            }
        }
        v
    }

    #[test]
    fn superintegrable_point_values() {
        let p = superintegrable_point(2, 0.6).unwrap();
        assert!((p.k - 0.8).abs() < 1e-15);
        assert!((p.x.re - 0.5f64.sqrt()).abs() < 1e-15);
        for n in [2u32, 3] {
            for kp in [0.2, 0.5, 0.8] {
                assert!(superintegrable_point(n, kp).unwrap().curve_residual() < 1e-15);
                let (a, b) = default_rapidities(n, kp).unwrap();
                assert!(a.curve_residual() < 1e-14 && b.curve_residual() < 1e-14);
                assert!(a.x.im == 0.0 && a.y.im == 0.0 && a.x.re > 0.0 && a.y.re > 0.0);
            }
        }
        // x_p → 0 as k' → 1
        let xs: Vec<f64> = [0.9, 1.0 - 1e-6, 1.0 - 1e-12]
            .iter()
            .map(|&kp| superintegrable_point(3, kp).unwrap().x.re)
            .collect();
        assert!(xs[0] > xs[1] && xs[1] > xs[2] && xs[2] < 1e-2);
        assert!(superintegrable_point(3, 1.5).is_err());
    }

    #[test]
    fn weights_basic() {
        for n in [2u32, 3, 4] {
            let p = superintegrable_point(n, 0.5).unwrap();
            let (w, wb) = boltzmann_weights(&p, &p).unwrap();
            assert!(w.iter().all(|x| (x - c64::new(1.0, 0.0)).norm() < 1e-14));
            assert!((wb[0] - c64::new(1.0, 0.0)).norm() < 1e-14);
            assert!(wb[1..].iter().all(|x| x.norm() < 1e-14));
            let (q, _) = default_rapidities(n, 0.5).unwrap();
            assert!(weight_periodicity_residual(&p, &q) < 1e-12);
        }
        let p = superintegrable_point(2, 0.5).unwrap();
        let (q, _) = default_rapidities(2, 0.5).unwrap();
        let (w, wb) = boltzmann_weights(&p, &q).unwrap();
        assert!(w[1].im.abs() < 1e-14 && wb[1].im.abs() < 1e-14);
        let other = superintegrable_point(2, 0.3).unwrap();
        assert!(matches!(boltzmann_weights(&p, &other), Err(CpmError::CurveMismatch { .. })));
    }

    #[test]
    fn edge_basis_shape() {
        let e = edge_basis(3, 4).unwrap();
        assert_eq!(e.len(), 27);
        assert!(e.iter().all(|c| c.iter().sum::<u32>() % 3 == 0));
        assert!(matches!(edge_basis(3, 9), Err(CpmError::SizeGuard { .. })));
        // spins → edges → spins
        for s in spin_states(3, 4) {
            assert_eq!(spin_of(s[0], &edges_of(&s, 3), 3), s);
        }
    }

    #[test]
    fn shift_invariant_block_matches_double_sum() {
        let p = superintegrable_point(3, 0.5).unwrap();
        let (q, _) = default_rapidities(3, 0.5).unwrap();
        let op = SpinOperator::transfer(&p, &q, false).unwrap();
        let edges = edge_basis(3, 3).unwrap();
        for sec in 0..3 {
            let a = sector_block(&op, 3, sec, &edges, true);
            let b = sector_block(&op, 3, sec, &edges, false);
            assert!(max_abs(&(&a.mat - &b.mat)) < 1e-12 * max_abs(&a.mat));
        }
    }

    #[test]
    fn n2_l2_hand_block() {
        // edges (0,0) and (1,1); spins (s, s) and (s, s+1)
        let kp = 0.5;
        let p = superintegrable_point(2, kp).unwrap();
        let (q, _) = default_rapidities(2, kp).unwrap();
        let (w, wb) = boltzmann_weights(&p, &q).unwrap();
        let (t0, _) = build_sector_transfer(2, 2, 0, &q, kp).unwrap();
        // ⟨0;(0,0)|T|0;(0,0)⟩ = Σ_d T((d,d),(0,0)) = W(0)²W̄(0)² + W(1)²W̄(1)²
        let expected = w[0] * w[0] * wb[0] * wb[0] + w[1] * w[1] * wb[1] * wb[1];
        assert!((t0.mat[(0, 0)] - expected).norm() < 1e-13);
        // ⟨0;(0,0)|T|0;(1,1)⟩: spins (d,d) vs (0,1)
        let expected = w[0] * w[1] * wb[0] * wb[1] + w[1] * w[0] * wb[1] * wb[0];
        assert!((t0.mat[(0, 1)] - expected).norm() < 1e-13);
    }

    #[test]
    fn round_trip_and_products() {
        let (n, l, kp) = (3u32, 3usize, 0.5);
        let p = superintegrable_point(n, kp).unwrap();
        let (q, _) = default_rapidities(n, kp).unwrap();
        let edges = edge_basis(n, l).unwrap();
        let t = SpinOperator::transfer(&p, &q, false).unwrap();
        let th = SpinOperator::transfer(&p, &q, true).unwrap();
        let tb: Vec<SectorMatrix> = (0..n).map(|s| sector_block(&t, l, s, &edges, true)).collect();
        let thb: Vec<SectorMatrix> = (0..n).map(|s| sector_block(&th, l, s, &edges, true)).collect();
        let ts = spin_matrix(&t, l).unwrap();
        let ths = spin_matrix(&th, l).unwrap();
        let scale = max_abs(&ts);
        assert!(max_abs(&(&reassemble(&tb, &edges) - &ts)) < 1e-12 * scale);
        // products in the sector basis
        let prod: Vec<SectorMatrix> = (0..n)
            .map(|s| SectorMatrix {
                big_n: n,
                l,
                q: s,
                mat: &tb[s as usize].mat * &thb[s as usize].mat,
            })
            .collect();
        let full = &ts * &ths;
        assert!(max_abs(&(&reassemble(&prod, &edges) - &full)) < 1e-12 * max_abs(&full));
        // spin shift 𝒳 commutes with T
        let states = spin_states(n, l);
        let dim = states.len();
        let shift = Mat::from_fn(dim, dim, |i, j| {
            let moved: Vec<u32> = states[j].iter().map(|s| (s + 1) % n).collect();
            if moved == states[i] {
                c64::new(1.0, 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        assert!(relative_commutator(&ts, &shift) < 1e-12);
    }

    #[test]
    fn hamiltonian_ising_and_hermitian() {
        let h = SpinOperator::hamiltonian(2, 0.3).unwrap();
        assert!((h.alpha[1] - c64::new(1.0, 0.0)).norm() < 1e-15);
        for n in [2u32, 3, 4] {
            for q in 0..n {
                let hq = build_hamiltonian(n, 3, q, 0.5).unwrap();
                assert!(hermiticity_residual(&hq.mat) < 1e-12);
            }
        }
    }

    #[test]
    fn spectrum_contract() {
        let (r, _) = default_rapidities(3, 0.5).unwrap();
        for q in 0..3 {
            let (t, th) = build_sector_transfer(3, 4, q, &r, 0.5).unwrap();
            let s = sector_spectrum(&t, Some(&th)).unwrap();
            assert!(s.biorthonormality_residual < 1e-10);
            assert!(s.reconstruction_residual < 1e-10);
            for w in s.eigenvalues.windows(2) {
                assert!(w[0].norm() >= w[1].norm());
            }
        }
    }

    #[test]
    fn overlap_normalization_and_correlation() {
        let o = LatticeOracle::new(3, 4, 0.5).unwrap();
        for q in 0..3 {
            assert!((o.overlap_product(q, q).unwrap() - 1.0).abs() < 1e-12);
            assert!(o.ground_state_defect[q as usize] < GROUND_STATE_TOL);
        }
        for r in 1..3 {
            let (g0, _) = o.pair_correlation(r, 0).unwrap();
            assert!((g0 - 1.0).abs() < 1e-10);
            let (g, gi) = o.pair_correlation(r, 64).unwrap();
            assert!((g - o.mean_overlap(r).unwrap()).abs() < 1e-8);
            assert!(gi.abs() < 1e-10);
        }
    }

    #[test]
    fn diagnostics_small() {
        let d = diagnostics(3, 4, 0.5).unwrap();
        for s in &d.sectors {
            assert!(s.commutator_rapidities < 1e-10, "{s:?}");
            assert!(s.commutator_hamiltonian < 1e-10, "{s:?}");
            assert!(s.hermiticity < 1e-12);
            assert!(s.eigenvector_q_dependence < 1e-10);
        }
        assert!(d.sectors[0].gap.abs() < 1e-15);
    }
}
