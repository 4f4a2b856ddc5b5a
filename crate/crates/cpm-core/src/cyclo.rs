//! Exact arithmetic in the cyclotomic ring Z[ζ], ζ = e^{iπ/N}.
//!
//! Working with the primitive 2N-th root ζ rather than ω = ζ² lets the
//! half-integer powers ω^{n²/2} that show up in the Appendix generating
//! functions be represented without any square-root bookkeeping.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rug::float::Constant;
use rug::{Complex, Float};

use crate::error::{CpmError, Result};
use crate::util::bigint_to_rug;

/// The ring Z[ζ] for a fixed N, carrying the reduction polynomial Φ_{2N}.
#[derive(Debug, PartialEq, Eq)]
pub struct CycRing {
    n: u32,
    /// Coefficients of the monic Φ_{2N}, lowest degree first.
    phi: Vec<i64>,
}

impl CycRing {
    pub fn new(n: u32) -> Result<Arc<CycRing>> {
        if n < 2 {
            return Err(CpmError::InvalidInput(format!("N must be ≥ 2, got {n}")));
        }
        Ok(Arc::new(CycRing {
            n,
            phi: cyclotomic_polynomial(2 * n as u64),
        }))
    }

    /// N (so that ω = e^{2πi/N}).
    pub fn n(&self) -> u32 {
        self.n
    }

    /// The order 2N of ζ.
    pub fn order(&self) -> u32 {
        2 * self.n
    }

    /// Degree of Φ_{2N}, i.e. the rank of the canonical basis.
    pub fn degree(&self) -> usize {
        self.phi.len() - 1
    }

    pub fn phi(&self) -> &[i64] {
        &self.phi
    }

    /// Reduce a raw coefficient vector over {ζ^0, ζ^1, …} (any length) to
    /// canonical form: fold exponents modulo 2N, then take the remainder
    /// modulo Φ_{2N}.
    pub fn reduce(&self, raw: &[BigInt]) -> Vec<BigInt> {
        let ord = self.order() as usize;
        let mut folded = vec![BigInt::zero(); ord];
        for (k, c) in raw.iter().enumerate() {
            if !c.is_zero() {
                folded[k % ord] += c;
            }
        }
        let d = self.degree();
        for top in (d..folded.len()).rev() {
            if folded[top].is_zero() {
                continue;
            }
            let lead = std::mem::take(&mut folded[top]);
            // subtract lead · x^{top-d} · Φ (Φ monic, so the top term cancels)
            for (i, &p) in self.phi.iter().enumerate().take(d) {
                if p != 0 {
                    folded[top - d + i] -= &lead * p;
                }
            }
        }
        folded.truncate(d);
        folded.resize(d, BigInt::zero());
        folded
    }

    pub fn zero(self: &Arc<Self>) -> CycNum {
        CycNum {
            ring: Arc::clone(self),
            c: vec![BigInt::zero(); self.degree()],
        }
    }

    pub fn one(self: &Arc<Self>) -> CycNum {
        self.int(1)
    }

    pub fn int(self: &Arc<Self>, v: impl Into<BigInt>) -> CycNum {
        let mut x = self.zero();
        x.c[0] = v.into();
        x
    }

    pub fn from_raw(self: &Arc<Self>, raw: &[BigInt]) -> CycNum {
        CycNum {
            ring: Arc::clone(self),
            c: self.reduce(raw),
        }
    }

    /// ζ^k for any integer k.
    pub fn zeta_pow(self: &Arc<Self>, k: i64) -> CycNum {
        let ord = self.order() as i64;
        let e = k.rem_euclid(ord) as usize;
        let mut raw = vec![BigInt::zero(); e + 1];
        raw[e] = BigInt::one();
        self.from_raw(&raw)
    }

    /// ω^k = ζ^{2k}.
    pub fn omega_pow(self: &Arc<Self>, k: i64) -> CycNum {
        self.zeta_pow(2 * k)
    }

    /// Gaussian binomial [a choose b]_ω by the q-Pascal rule
    /// [a,b] = [a−1,b−1] + ω^b [a−1,b]; zero outside 0 ≤ b ≤ a.
    pub fn gauss_binom(self: &Arc<Self>, a: usize, b: i64) -> CycNum {
        if b < 0 || b as usize > a {
            return self.zero();
        }
        let table = self.gauss_table(a);
        table[a][b as usize].clone()
    }

    /// All Gaussian binomials [a choose b]_ω for 0 ≤ b ≤ a ≤ amax.
    pub fn gauss_table(self: &Arc<Self>, amax: usize) -> Vec<Vec<CycNum>> {
        let mut rows: Vec<Vec<CycNum>> = Vec::with_capacity(amax + 1);
        rows.push(vec![self.one()]);
        for a in 1..=amax {
            let prev = &rows[a - 1];
            let mut row = Vec::with_capacity(a + 1);
            for b in 0..=a {
                let left = if b >= 1 { prev[b - 1].clone() } else { self.zero() };
                let right = if b < a {
                    prev[b].mul_zeta_pow(2 * b as i64)
                } else {
                    self.zero()
                };
                row.push(left + right);
            }
            rows.push(row);
        }
        rows
    }
}

/// Φ_n(x) via the Möbius product Π_{d|n} (x^d − 1)^{μ(n/d)}.
fn cyclotomic_polynomial(n: u64) -> Vec<i64> {
    let divisors: Vec<u64> = (1..=n).filter(|d| n % d == 0).collect();
    let mut num: Vec<i64> = vec![1];
    let mut den: Vec<i64> = vec![1];
    for &d in &divisors {
        let f = {
            let mut f = vec![0i64; d as usize + 1];
            f[0] = -1;
            f[d as usize] = 1;
            f
        };
        match mobius(n / d) {
            1 => num = poly_mul_i64(&num, &f),
            -1 => den = poly_mul_i64(&den, &f),
            _ => {}
        }
    }
    poly_exact_div_i64(&num, &den)
}

fn mobius(mut k: u64) -> i32 {
    let mut sign = 1;
    let mut p = 2;
    while p * p <= k {
        if k % p == 0 {
            k /= p;
            if k % p == 0 {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if k > 1 {
        sign = -sign;
    }
    sign
}

fn poly_mul_i64(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Exact division of integer polynomials with a monic (±1 leading) divisor.
fn poly_exact_div_i64(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let lead = den[dd];
    assert!(lead == 1 || lead == -1, "divisor must be monic up to sign");
    let qlen = rem.len() - dd;
    let mut q = vec![0i64; qlen];
    for i in (0..qlen).rev() {
        let c = rem[i + dd] * lead;
        q[i] = c;
        for (j, &dj) in den.iter().enumerate() {
            rem[i + j] -= c * dj;
        }
    }
    debug_assert!(rem.iter().all(|&r| r == 0), "cyclotomic division left a remainder");
    q
}

/// An element of Z[ζ] in canonical form (coefficients of ζ^0 … ζ^{φ(2N)−1}).
#[derive(Clone)]
pub struct CycNum {
    ring: Arc<CycRing>,
    c: Vec<BigInt>,
}

impl CycNum {
    pub fn ring(&self) -> &Arc<CycRing> {
        &self.ring
    }

    /// Canonical coefficients over ζ^0 … ζ^{d−1}, d = deg Φ_{2N}.
    pub fn coeffs(&self) -> &[BigInt] {
        &self.c
    }

    /// Coefficients padded to the full length-2N basis {ζ^0, …, ζ^{2N−1}}.
    pub fn coeffs_full(&self) -> Vec<BigInt> {
        let mut v = self.c.clone();
        v.resize(self.ring.order() as usize, BigInt::zero());
        v
    }

    /// Re-run the canonical reduction (idempotent on canonical input).
    pub fn reduce(&self) -> CycNum {
        self.ring.from_raw(&self.c)
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(Zero::is_zero)
    }

    /// Some(v) if this element is the rational integer v.
    pub fn as_integer(&self) -> Option<BigInt> {
        if self.c[1..].iter().all(Zero::is_zero) {
            Some(self.c[0].clone())
        } else {
            None
        }
    }

    /// Multiply by ζ^k.
    pub fn mul_zeta_pow(&self, k: i64) -> CycNum {
        if self.is_zero() {
            return self.clone();
        }
        let ord = self.ring.order() as i64;
        let shift = k.rem_euclid(ord) as usize;
        let mut raw = vec![BigInt::zero(); shift + self.c.len()];
        for (i, c) in self.c.iter().enumerate() {
            raw[i + shift] = c.clone();
        }
        self.ring.from_raw(&raw)
    }

    /// Multiply by ω^k.
    pub fn mul_omega_pow(&self, k: i64) -> CycNum {
        self.mul_zeta_pow(2 * k)
    }

    pub fn scale(&self, s: &BigInt) -> CycNum {
        CycNum {
            ring: Arc::clone(&self.ring),
            c: self.c.iter().map(|c| c * s).collect(),
        }
    }

    /// Complex conjugate (ζ ↦ ζ^{-1}).
    pub fn conj(&self) -> CycNum {
        let ord = self.ring.order() as usize;
        let mut raw = vec![BigInt::zero(); ord];
        for (i, c) in self.c.iter().enumerate() {
            raw[(ord - i) % ord] += c;
        }
        self.ring.from_raw(&raw)
    }

    /// Evaluate at ζ = exp(iπ/N) with `prec` bits of mantissa.
    pub fn embed_complex(&self, prec: u32) -> Complex {
        let wp = prec + 32;
        let (zr, zi) = zeta_parts(self.ring.n, wp);
        let mut re = Float::with_val(wp, 0);
        let mut im = Float::with_val(wp, 0);
        // Horner in ζ
        for c in self.c.iter().rev() {
            let nre = Float::with_val(wp, &re * &zr) - Float::with_val(wp, &im * &zi);
            let nim = Float::with_val(wp, &re * &zi) + Float::with_val(wp, &im * &zr);
            re = nre + bigint_to_rug(c);
            im = nim;
        }
        Complex::with_val(prec, (re, im))
    }

    /// Double-precision embedding, for tests and diagnostics.
    pub fn to_c64(&self) -> (f64, f64) {
        let z = self.embed_complex(64);
        (z.real().to_f64(), z.imag().to_f64())
    }
}

fn zeta_parts(n: u32, wp: u32) -> (Float, Float) {
    let angle = Float::with_val(wp, Constant::Pi) / n;
    let (s, c) = angle.sin_cos(Float::new(wp));
    (c, s)
}

impl PartialEq for CycNum {
    fn eq(&self, other: &Self) -> bool {
        self.ring.n == other.ring.n && self.c == other.c
    }
}

impl Eq for CycNum {}

impl fmt::Debug for CycNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for CycNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.c.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{mag}")?,
                _ if mag.is_one() => write!(f, "ζ^{k}")?,
                _ => write!(f, "{mag}·ζ^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " (mod Φ_{})", self.ring.order())
    }
}

fn check_same_ring(a: &CycNum, b: &CycNum) {
    assert_eq!(a.ring.n, b.ring.n, "mixing cyclotomic rings of different order");
}

impl Add<&CycNum> for &CycNum {
    type Output = CycNum;
    fn add(self, rhs: &CycNum) -> CycNum {
        check_same_ring(self, rhs);
        CycNum {
            ring: Arc::clone(&self.ring),
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Add for CycNum {
    type Output = CycNum;
    fn add(mut self, rhs: CycNum) -> CycNum {
        self += &rhs;
        self
    }
}

impl AddAssign<&CycNum> for CycNum {
    fn add_assign(&mut self, rhs: &CycNum) {
        check_same_ring(self, rhs);
        for (a, b) in self.c.iter_mut().zip(&rhs.c) {
            *a += b;
        }
    }
}

impl Sub<&CycNum> for &CycNum {
    type Output = CycNum;
    fn sub(self, rhs: &CycNum) -> CycNum {
        check_same_ring(self, rhs);
        CycNum {
            ring: Arc::clone(&self.ring),
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Sub for CycNum {
    type Output = CycNum;
    fn sub(self, rhs: CycNum) -> CycNum {
        &self - &rhs
    }
}

impl Neg for &CycNum {
    type Output = CycNum;
    fn neg(self) -> CycNum {
        CycNum {
            ring: Arc::clone(&self.ring),
            c: self.c.iter().map(|a| -a).collect(),
        }
    }
}

impl Mul<&CycNum> for &CycNum {
    type Output = CycNum;
    fn mul(self, rhs: &CycNum) -> CycNum {
        check_same_ring(self, rhs);
        if self.is_zero() || rhs.is_zero() {
            return self.ring.zero();
        }
        let d = self.c.len();
        let mut raw = vec![BigInt::zero(); 2 * d - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.c.iter().enumerate() {
                if !b.is_zero() {
                    raw[i + j] += a * b;
                }
            }
        }
        self.ring.from_raw(&raw)
    }
}

impl Mul for CycNum {
    type Output = CycNum;
    fn mul(self, rhs: CycNum) -> CycNum {
        &self * &rhs
    }
}

/// Polynomial in a formal variable t with CycNum coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct CycPoly {
    ring: Arc<CycRing>,
    coeffs: Vec<CycNum>,
}

impl CycPoly {
    pub fn new(ring: &Arc<CycRing>, mut coeffs: Vec<CycNum>) -> CycPoly {
        while coeffs.last().is_some_and(CycNum::is_zero) {
            coeffs.pop();
        }
        CycPoly {
            ring: Arc::clone(ring),
            coeffs,
        }
    }

    pub fn zero(ring: &Arc<CycRing>) -> CycPoly {
        CycPoly::new(ring, Vec::new())
    }

    pub fn one(ring: &Arc<CycRing>) -> CycPoly {
        CycPoly::new(ring, vec![ring.one()])
    }

    /// c · t^k
    pub fn monomial(c: CycNum, k: usize) -> CycPoly {
        let ring = Arc::clone(c.ring());
        let mut v = vec![ring.zero(); k];
        v.push(c);
        CycPoly::new(&ring, v)
    }

    /// Integer polynomial lifted into the ring.
    pub fn from_ints(ring: &Arc<CycRing>, ints: &[i64]) -> CycPoly {
        CycPoly::new(ring, ints.iter().map(|&v| ring.int(v)).collect())
    }

    pub fn ring(&self) -> &Arc<CycRing> {
        &self.ring
    }

    pub fn coeffs(&self) -> &[CycNum] {
        &self.coeffs
    }

    /// Coefficient of t^k (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> CycNum {
        self.coeffs.get(k).cloned().unwrap_or_else(|| self.ring.zero())
    }

    /// Degree, or None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &CycPoly) -> CycPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let v = (0..len).map(|k| &self.coeff(k) + &other.coeff(k)).collect();
        CycPoly::new(&self.ring, v)
    }

    pub fn sub(&self, other: &CycPoly) -> CycPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let v = (0..len).map(|k| &self.coeff(k) - &other.coeff(k)).collect();
        CycPoly::new(&self.ring, v)
    }

    pub fn mul(&self, other: &CycPoly) -> CycPoly {
        self.mul_trunc(other, usize::MAX)
    }

    /// Product truncated to degree ≤ max_deg.
    pub fn mul_trunc(&self, other: &CycPoly, max_deg: usize) -> CycPoly {
        if self.is_zero() || other.is_zero() {
            return CycPoly::zero(&self.ring);
        }
        let len = (self.coeffs.len() + other.coeffs.len() - 1).min(max_deg.saturating_add(1));
        let mut v = vec![self.ring.zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if i >= len || a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                if !b.is_zero() {
                    v[i + j] += &(a * b);
                }
            }
        }
        CycPoly::new(&self.ring, v)
    }

    pub fn scale(&self, s: &CycNum) -> CycPoly {
        CycPoly::new(&self.ring, self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn pow(&self, e: u32) -> CycPoly {
        let mut acc = CycPoly::one(&self.ring);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn truncate(&self, max_deg: usize) -> CycPoly {
        let mut v = self.coeffs.clone();
        v.truncate(max_deg.saturating_add(1));
        CycPoly::new(&self.ring, v)
    }
}

impl fmt::Debug for CycPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coeffs.iter()).finish()
    }
}

/// Gaussian binomial [a choose b]_ω with ω = e^{2πi/N}.
pub fn gauss_binom(a: usize, b: i64, n: u32) -> Result<CycNum> {
    Ok(CycRing::new(n)?.gauss_binom(a, b))
}

/// q-Pochhammer Π_{i=0}^{count−1} (1 − ω^{shift+i} t) where the shift is
/// given in half units: `twice_shift` = 2·shift, so ω^{shift} = ζ^{twice_shift}.
pub fn pochhammer(ring: &Arc<CycRing>, twice_shift: i64, count: usize) -> CycPoly {
    let mut acc = CycPoly::one(ring);
    for i in 0..count {
        let root = ring.zeta_pow(twice_shift + 2 * i as i64);
        let factor = CycPoly::new(ring, vec![ring.one(), -&root]);
        acc = acc.mul(&factor);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c64(x: &CycNum) -> (f64, f64) {
        x.to_c64()
    }

    fn q_factorial_binom(a: usize, b: usize, n: u32) -> (f64, f64) {
        // [a]_q! / ([b]_q! [a-b]_q!) as a product of (1 - q^k) ratios
        let w = |k: usize| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            (1.0 - th.cos(), -th.sin())
        };
        let cmul = |x: (f64, f64), y: (f64, f64)| (x.0 * y.0 - x.1 * y.1, x.0 * y.1 + x.1 * y.0);
        let cdiv = |x: (f64, f64), y: (f64, f64)| {
            let d = y.0 * y.0 + y.1 * y.1;
            ((x.0 * y.0 + x.1 * y.1) / d, (x.1 * y.0 - x.0 * y.1) / d)
        };
        // Only valid when no (1 − q^k) factor vanishes, i.e. a < N.
        let mut r = (1.0, 0.0);
        for k in 0..b {
            r = cdiv(cmul(r, w(a - k)), w(k + 1));
        }
        r
    }

    #[test]
    fn phi_small_orders() {
        assert_eq!(cyclotomic_polynomial(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic_polynomial(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_polynomial(8), vec![1, 0, 0, 0, 1]);
        assert_eq!(cyclotomic_polynomial(12), vec![1, 0, -1, 0, 1]);
        // first order with a coefficient outside {−1, 0, 1}
        assert!(cyclotomic_polynomial(210).iter().any(|&c| c.abs() > 1));
    }

    #[test]
    fn gauss_binom_examples() {
        let r = CycRing::new(3).unwrap();
        assert_eq!(r.gauss_binom(5, 0), r.one());
        assert_eq!(r.gauss_binom(2, 1), &r.one() + &r.omega_pow(1));
        assert!(r.gauss_binom(3, -1).is_zero());
        assert!(r.gauss_binom(3, 4).is_zero());
        // [3,1]_ω = 1 + ω + ω² = 0 at a primitive cube root
        assert!(r.gauss_binom(3, 1).is_zero());

        let r2 = CycRing::new(2).unwrap();
        let g = r2.gauss_binom(4, 2);
        let v = g.as_integer().expect("ω = −1 binomial is an integer");
        // (1+q²)(1+q+q²) at q = −1 → 2
        assert_eq!(v, BigInt::from(2));
    }

    #[test]
    fn gauss_binom_against_q_factorial() {
        for n in [3u32, 4, 5, 7] {
            let r = CycRing::new(n).unwrap();
            for a in 0..n as usize {
                for b in 0..=a {
                    let exact = c64(&r.gauss_binom(a, b as i64));
                    let num = q_factorial_binom(a, b, n);
                    assert!((exact.0 - num.0).abs() < 1e-12 && (exact.1 - num.1).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn embedding_examples() {
        let r = CycRing::new(3).unwrap();
        let x = &r.one() + &r.omega_pow(1);
        let z = x.embed_complex(53);
        assert!((z.real().to_f64() - 0.5).abs() < 1e-15);
        assert!((z.imag().to_f64() - 0.75f64.sqrt()).abs() < 1e-15);
        let seven = r.int(7).embed_complex(200);
        assert_eq!(seven.real().to_f64(), 7.0);
        assert_eq!(seven.imag().to_f64(), 0.0);
        for n in 2..8u32 {
            let r = CycRing::new(n).unwrap();
            let mut s = r.zero();
            for k in 0..n as i64 {
                s += &r.omega_pow(k);
            }
            assert!(s.is_zero());
            let (a, b) = s.to_c64();
            assert!(a.abs() < 1e-15 && b.abs() < 1e-15);
        }
    }

    #[test]
    fn pochhammer_examples() {
        let r = CycRing::new(2).unwrap();
        assert_eq!(pochhammer(&r, 5, 0), CycPoly::one(&r));
        assert_eq!(pochhammer(&r, 1, 2), CycPoly::from_ints(&r, &[1, 0, 1]));
        for n in 2..7u32 {
            let r = CycRing::new(n).unwrap();
            let mut expect = vec![0i64; n as usize + 1];
            expect[0] = 1;
            expect[n as usize] = 1;
            for p in 0..n as i64 {
                assert_eq!(
                    pochhammer(&r, 1 + 2 * p, n as usize),
                    CycPoly::from_ints(&r, &expect),
                    "N={n} P={p}"
                );
            }
        }
    }

    #[test]
    fn conj_matches_embedding() {
        let r = CycRing::new(5).unwrap();
        let x = r.from_raw(&[3, -1, 4, 1, -5, 9, 2, -6, 5, 3].map(BigInt::from));
        let (a, b) = x.to_c64();
        let (c, d) = x.conj().to_c64();
        assert!((a - c).abs() < 1e-12 && (b + d).abs() < 1e-12);
    }

    fn raw_strategy() -> impl Strategy<Value = (u32, Vec<i64>, Vec<i64>)> {
        (2u32..9).prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(-20i64..20, 0..(4 * n as usize)),
                prop::collection::vec(-20i64..20, 0..(4 * n as usize)),
            )
        })
    }

    proptest! {
        #[test]
        fn reduce_is_idempotent((n, a, _b) in raw_strategy()) {
            let r = CycRing::new(n).unwrap();
            let x = r.from_raw(&a.iter().map(|&v| BigInt::from(v)).collect::<Vec<_>>());
            prop_assert_eq!(x.reduce(), x.clone());
            prop_assert_eq!(r.reduce(x.coeffs()), x.coeffs().to_vec());
        }

        #[test]
        fn embedding_is_a_ring_homomorphism((n, a, b) in raw_strategy()) {
            let r = CycRing::new(n).unwrap();
            let x = r.from_raw(&a.iter().map(|&v| BigInt::from(v)).collect::<Vec<_>>());
            let y = r.from_raw(&b.iter().map(|&v| BigInt::from(v)).collect::<Vec<_>>());
            let ex = x.embed_complex(128);
            let ey = y.embed_complex(128);
            let prod = Complex::with_val(128, &ex * &ey);
            let sum = Complex::with_val(128, &ex + &ey);
            let exy = (&x * &y).embed_complex(128);
            let esum = (&x + &y).embed_complex(128);
            let scale = 1.0 + prod.clone().abs().real().to_f64();
            let d1 = Complex::with_val(128, &exy - &prod).abs().real().to_f64();
            let d2 = Complex::with_val(128, &esum - &sum).abs().real().to_f64();
            prop_assert!(d1 < 1e-12 * scale);
            prop_assert!(d2 < 1e-12 * scale);
        }

        #[test]
        fn q_pascal_recursion(n in 2u32..8, a in 1usize..14, b in -1i64..15) {
            let r = CycRing::new(n).unwrap();
            let lhs = r.gauss_binom(a, b);
            let rhs = &r.gauss_binom(a - 1, b - 1) + &r.gauss_binom(a - 1, b).mul_omega_pow(b);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn rational_integers_live_on_zeta0(n in 2u32..9, v in -1000i64..1000) {
            let r = CycRing::new(n).unwrap();
            let x = r.int(v);
            prop_assert_eq!(x.as_integer(), Some(BigInt::from(v)));
            let prod = &r.zeta_pow(3) * &r.zeta_pow(-3);
            prop_assert_eq!(prod, r.one());
        }
    }
}
