//! Drinfeld polynomials P_Q(w) = Σ_n Λ^Q_n w^n, their roots, and the
//! root transforms (z, c, λ, θ) used by the form factors.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rug::{float::Round, Float, Integer};
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::cyclo::{CycPoly, CycRing};
use crate::error::{CpmError, Result};
use crate::util::{bigint_to_rug, float_to_decimal};

/// Coefficients c_m of (1 + x + … + x^{N−1})^L, i.e. the number of
/// (λ_1,…,λ_L) in 0..N−1 with Σλ = m.
pub fn composition_counts(big_n: u32, l: usize) -> Vec<BigInt> {
    let n = big_n as usize;
    let mut poly = vec![BigInt::one()];
    for _ in 0..l {
        let mut next = vec![BigInt::zero(); poly.len() + n - 1];
        // sliding window sum of width N
        let mut window = BigInt::zero();
        for (i, slot) in next.iter_mut().enumerate() {
            if i < poly.len() {
                window += &poly[i];
            }
            if i >= n {
                window -= &poly[i - n];
            }
            *slot = window.clone();
        }
        poly = next;
    }
    poly
}

/// m_Q = ⌊((N−1)L − Q)/N⌋
pub fn degree_formula(big_n: u32, l: usize, q: u32) -> usize {
    ((big_n as usize - 1) * l - q as usize) / big_n as usize
}

/// The sector whose roots are the reciprocals of sector Q's roots.
///
/// P_Q(w) is the reversed polynomial of P_{(−L−Q) mod N}; when N divides L
/// this is the familiar pairing Q ↔ N−Q.
pub fn reciprocal_sector(big_n: u32, l: usize, q: u32) -> u32 {
    let n = big_n as i64;
    (((-(l as i64) - q as i64) % n + n) % n) as u32
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DrinfeldPoly {
    pub big_n: u32,
    pub l: usize,
    pub q: u32,
    pub lambda: Vec<BigInt>,
}

impl DrinfeldPoly {
    pub fn degree(&self) -> usize {
        self.lambda.len() - 1
    }

    /// Λ^Q_n, zero outside 0..=m_Q.
    pub fn coeff(&self, n: i64) -> BigInt {
        if n < 0 || n as usize >= self.lambda.len() {
            BigInt::zero()
        } else {
            self.lambda[n as usize].clone()
        }
    }
}

impl Serialize for DrinfeldPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("DrinfeldPoly", 5)?;
        st.serialize_field("N", &self.big_n)?;
        st.serialize_field("L", &self.l)?;
        st.serialize_field("Q", &self.q)?;
        st.serialize_field("m", &self.degree())?;
        let coeffs: Vec<String> = self.lambda.iter().map(|c| c.to_string()).collect();
        st.serialize_field("lambda", &coeffs)?;
        st.end()
    }
}

fn check_nlq(big_n: u32, l: usize, q: u32) -> Result<()> {
    if big_n < 2 {
        return Err(CpmError::InvalidInput(format!("N must be ≥ 2, got {big_n}")));
    }
    if l < 1 {
        return Err(CpmError::InvalidInput("L must be ≥ 1".into()));
    }
    if q >= big_n {
        return Err(CpmError::InvalidInput(format!("Q must lie in 0..{}, got {q}", big_n - 1)));
    }
    if (big_n as usize - 1) * l < q as usize {
        return Err(CpmError::InvalidInput(format!("sector Q={q} is empty for N={big_n}, L={l}")));
    }
    Ok(())
}

/// Λ^Q_n = c_{nN+Q} for n = 0..=m_Q.
pub fn lambda_counts(big_n: u32, l: usize, q: u32) -> Result<DrinfeldPoly> {
    check_nlq(big_n, l, q)?;
    let c = composition_counts(big_n, l);
    let lambda: Vec<BigInt> = c
        .iter()
        .skip(q as usize)
        .step_by(big_n as usize)
        .cloned()
        .collect();
    debug_assert_eq!(lambda.len() - 1, degree_formula(big_n, l, q));
    Ok(DrinfeldPoly { big_n, l, q, lambda })
}

/// t^{−Q} Σ_{n=0}^{N−1} ω^{−nQ} [(1−t^N)/(1−tω^n)]^L expanded exactly and
/// read as a polynomial in w = t^N. Equals N·P_Q(w).
pub fn drinfeld_projection(big_n: u32, l: usize, q: u32) -> Result<Vec<BigInt>> {
    check_nlq(big_n, l, q)?;
    let ring = CycRing::new(big_n)?;
    let nn = big_n as usize;
    let mut total = CycPoly::zero(&ring);
    for n in 0..big_n as i64 {
        // (1−t^N)/(1−tω^n) = Σ_{k<N} ω^{nk} t^k
        let factor = CycPoly::new(&ring, (0..nn as i64).map(|k| ring.omega_pow(n * k)).collect());
        let term = factor.pow(l as u32).scale(&ring.omega_pow(-n * q as i64));
        total = total.add(&term);
    }
    let deg = total.degree().unwrap_or(0);
    let mut out = Vec::new();
    for (power, c) in total.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        if power < q as usize || (power - q as usize) % nn != 0 {
            return Err(CpmError::Verification(format!(
                "projection for N={big_n}, L={l}, Q={q} has a surviving t^{power} term {c}"
            )));
        }
    }
    let mut power = q as usize;
    while power <= deg {
        let c = total.coeff(power);
        out.push(c.as_integer().ok_or_else(|| {
            CpmError::Verification(format!("projection coefficient of t^{power} is not an integer: {c}"))
        })?);
        power += nn;
    }
    while out.len() > 1 && out.last().is_some_and(|c| c.is_zero()) {
        out.pop();
    }
    Ok(out)
}

/// Horner evaluation of p, p', p'' at x.
fn eval_derivs(coeffs: &[Float], x: &Float, prec: u32) -> (Float, Float, Float) {
    let n = coeffs.len() - 1;
    let mut p = Float::with_val(prec, &coeffs[n]);
    let mut dp = Float::new(prec);
    let mut d2p = Float::new(prec);
    for k in (0..n).rev() {
        d2p = d2p * x + &dp;
        dp = dp * x + &p;
        p = p * x + &coeffs[k];
    }
    (p, dp, d2p * 2u32)
}

fn eval(coeffs: &[Float], x: &Float, prec: u32) -> Float {
    let mut p = Float::new(prec);
    for c in coeffs.iter().rev() {
        p = p * x + c;
    }
    p
}

/// Exact sign of Σ a_k x^k at the dyadic rational x.
fn exact_sign(coeffs: &[Integer], x: &Float) -> std::cmp::Ordering {
    let m = coeffs.len() - 1;
    if x.is_zero() {
        return coeffs[0].cmp0();
    }
    let (mant, exp) = x.to_integer_exp().expect("probe must be finite");
    if exp >= 0 {
        let xi = mant << exp as u32;
        let mut acc = Integer::new();
        for c in coeffs.iter().rev() {
            acc = acc * &xi + c;
        }
        return acc.cmp0();
    }
    let s = (-exp) as u32;
    let mut acc = coeffs[m].clone();
    for k in (0..m).rev() {
        acc *= &mant;
        acc += Integer::from(&coeffs[k] << (s * (m - k) as u32));
    }
    acc.cmp0()
}

fn is_negligible(step: &Float, x: &Float, bits: u32) -> bool {
    if step.is_zero() {
        return true;
    }
    let scale = if x.is_zero() { Float::with_val(53, 1) } else { Float::with_val(53, x.abs_ref()) };
    let ratio = Float::with_val(53, step.abs_ref()) / scale;
    ratio.is_zero() || ratio.get_exp().unwrap_or(i32::MIN) < -(bits as i32)
}

/// All roots of P_Q(w), ascending, each real, negative and simple.
///
/// Roots are located by Laguerre's method with forward deflation on
/// q(x) = P_Q(−x) (smallest first), then *proved* to be real and isolated:
/// q is evaluated exactly, in integers, at dyadic probes interleaving the
/// approximations, and must alternate in sign. Each root is finally polished
/// by safeguarded Newton inside its certified bracket.
pub fn solve_roots(poly: &DrinfeldPoly, prec: u32) -> Result<Vec<Float>> {
    if prec < 64 {
        return Err(CpmError::InvalidInput(format!("precision {prec} too small (need ≥ 64 bits)")));
    }
    let m = poly.degree();
    if m == 0 {
        return Ok(Vec::new());
    }
    let label = format!("P_{} (N={}, L={}, m={m})", poly.q, poly.big_n, poly.l);
    // q(x) = Σ (−1)^k Λ_k x^k
    let exact: Vec<Integer> = poly
        .lambda
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let v = bigint_to_rug(c);
            if k % 2 == 1 {
                -v
            } else {
                v
            }
        })
        .collect();
    let max_bits = exact.iter().map(|c| c.significant_bits()).max().unwrap_or(1);
    let wp = prec + 64 + max_bits;
    let coeffs: Vec<Float> = exact.iter().map(|c| Float::with_val(wp, c)).collect();

    let mut approx: Vec<Float> = Vec::with_capacity(m);
    let mut defl = coeffs.clone();
    let mut start = Float::new(wp);
    for _ in 0..m {
        let deg = defl.len() - 1;
        let mut x = start.clone();
        if deg == 1 {
            x = Float::with_val(wp, -&defl[0]) / &defl[1];
        } else {
            let nf = Float::with_val(wp, deg as u32);
            let mut converged = false;
            for _ in 0..1000 {
                let (p, dp, d2p) = eval_derivs(&defl, &x, wp);
                if p.is_zero() {
                    converged = true;
                    break;
                }
                let g = Float::with_val(wp, &dp / &p);
                let h = Float::with_val(wp, g.square_ref()) - Float::with_val(wp, &d2p / &p);
                let mut disc = (Float::with_val(wp, &nf * &h) - Float::with_val(wp, g.square_ref())) * (deg as u32 - 1);
                if disc.is_sign_negative() {
                    let rel = Float::with_val(53, disc.abs_ref()) / Float::with_val(53, g.square_ref()).max(&Float::with_val(53, 1e-300));
                    if rel > 1e-6 {
                        return Err(CpmError::NonRealRoot(format!(
                            "{label}: Laguerre discriminant negative near x = {}",
                            x.to_f64()
                        )));
                    }
                    disc = Float::new(wp);
                }
                let sq = disc.sqrt();
                let denom = if g.is_sign_negative() { g - sq } else { g + sq };
                if denom.is_zero() {
                    return Err(CpmError::NonRealRoot(format!("{label}: Laguerre step undefined")));
                }
                let step = Float::with_val(wp, &nf / &denom);
                x -= &step;
                // the deflated polynomial only needs to separate roots; the
                // bracketed polish below restores full accuracy
                if is_negligible(&step, &x, wp * 3 / 4) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(CpmError::NonRealRoot(format!("{label}: Laguerre iteration did not converge")));
            }
        }
        // forward deflation by (x − root)
        let mut next = vec![Float::new(wp); deg];
        let mut carry = Float::with_val(wp, &defl[deg]);
        for k in (0..deg).rev() {
            next[k] = carry.clone();
            carry = carry * &x + &defl[k];
        }
        defl = next;
        start = x.clone();
        approx.push(x);
    }
    approx.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));

    // probes: 0, midpoints, and a point beyond the largest root
    let mut probes = Vec::with_capacity(m + 1);
    probes.push(Float::new(wp));
    for w in approx.windows(2) {
        probes.push(Float::with_val(wp, &w[0] + &w[1]) / 2u32);
    }
    probes.push(Float::with_val(wp, &approx[m - 1] * 2u32) + 1u32);
    for (i, p) in probes.iter().enumerate() {
        let expected = if i % 2 == 0 { std::cmp::Ordering::Greater } else { std::cmp::Ordering::Less };
        if exact_sign(&exact, p) != expected {
            let tight = approx.windows(2).any(|w| {
                let gap = Float::with_val(wp, &w[1] - &w[0]);
                is_negligible(&gap, &w[1], wp / 2)
            });
            let msg = format!("{label}: sign pattern broken at probe {i} (x ≈ {:e})", p.to_f64());
            return Err(if tight {
                CpmError::RootClusterTooTight(msg)
            } else {
                CpmError::NonRealRoot(msg)
            });
        }
    }

    // polish against the original polynomial inside each certified bracket
    let mut roots = Vec::with_capacity(m);
    for i in 0..m {
        let (mut lo, mut hi) = (probes[i].clone(), probes[i + 1].clone());
        let lo_sign_pos = i % 2 == 0;
        let mut x = approx[i].clone();
        for _ in 0..200 {
            let (p, dp, _) = eval_derivs(&coeffs, &x, wp);
            if p.is_zero() {
                break;
            }
            if p.is_sign_positive() == lo_sign_pos {
                lo = x.clone();
            } else {
                hi = x.clone();
            }
            let mut nx = Float::with_val(wp, &x - Float::with_val(wp, &p / &dp));
            if !(nx > lo && nx < hi) {
                nx = Float::with_val(wp, &lo + &hi) / 2u32;
            }
            let step = Float::with_val(wp, &nx - &x);
            x = nx;
            if is_negligible(&step, &x, wp - 8) {
                break;
            }
        }
        // relative residual |q(x)| / Σ|a_k||x|^k
        let num = eval(&coeffs, &x, wp).abs();
        let absc: Vec<Float> = coeffs.iter().map(|c| Float::with_val(wp, c.abs_ref())).collect();
        let den = eval(&absc, &Float::with_val(wp, x.abs_ref()), wp);
        let rel = Float::with_val(wp, &num / &den);
        if !rel.is_zero() && rel.get_exp().unwrap_or(i32::MIN) > -((prec / 2) as i32) {
            return Err(CpmError::RootClusterTooTight(format!(
                "{label}: root {i} residual {:e} above 2^-{}",
                rel.to_f64(),
                prec / 2
            )));
        }
        roots.push(x);
    }
    // w = −x, ascending
    let mut ws: Vec<Float> = roots
        .into_iter()
        .rev()
        .map(|x| Float::with_val_round(prec, -x, Round::Nearest).0)
        .collect();
    ws.dedup_by(|a, b| a == b);
    if ws.len() != m {
        return Err(CpmError::RootClusterTooTight(format!("{label}: roots coincide at {prec} bits")));
    }
    Ok(ws)
}

/// Per-root transforms at a given k'.
#[derive(Clone, Debug)]
pub struct RootRecord {
    pub w: Float,
    pub z: Float,
    pub c: Float,
    pub lambda: Float,
    pub theta: Float,
}

#[derive(Clone, Debug)]
pub struct RootData {
    pub q: u32,
    pub kp: Float,
    pub roots: Vec<RootRecord>,
    /// max |e^{2θ}+e^{−2θ} − (k'+1/k' − (1−k')² z/k')| over roots
    pub eqet_residual: Float,
}

impl RootData {
    pub fn z(&self) -> Vec<Float> {
        self.roots.iter().map(|r| r.z.clone()).collect()
    }

    pub fn w(&self) -> Vec<Float> {
        self.roots.iter().map(|r| r.w.clone()).collect()
    }

    pub fn lambdas(&self) -> Vec<Float> {
        self.roots.iter().map(|r| r.lambda.clone()).collect()
    }
}

impl Serialize for RootRecord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("RootRecord", 5)?;
        st.serialize_field("w", &float_to_decimal(&self.w))?;
        st.serialize_field("z", &float_to_decimal(&self.z))?;
        st.serialize_field("c", &float_to_decimal(&self.c))?;
        st.serialize_field("lambda", &float_to_decimal(&self.lambda))?;
        st.serialize_field("theta", &float_to_decimal(&self.theta))?;
        st.end()
    }
}

impl Serialize for RootData {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("RootData", 5)?;
        st.serialize_field("Q", &self.q)?;
        st.serialize_field("kp", &float_to_decimal(&self.kp))?;
        st.serialize_field("precision_bits", &self.kp.prec())?;
        st.serialize_field("roots", &self.roots)?;
        st.serialize_field("eqet_residual", &self.eqet_residual.to_f64())?;
        st.end()
    }
}

/// λ(z) = √(1+k'²+2k'(1+z)/(1−z)); errors when the radicand is not positive.
pub fn lambda_of_z(z: &Float, kp: &Float) -> Result<Float> {
    let prec = z.prec().max(kp.prec());
    let ratio = Float::with_val(prec, 1 + z) / Float::with_val(prec, 1 - z);
    let arg = Float::with_val(prec, kp.square_ref()) + 1u32 + Float::with_val(prec, kp * &ratio) * 2u32;
    if !arg.is_sign_positive() || arg.is_zero() {
        return Err(CpmError::DomainError(format!(
            "λ² = {:e} ≤ 0 at z = {:e}, k' = {}",
            arg.to_f64(),
            z.to_f64(),
            kp.to_f64()
        )));
    }
    Ok(arg.sqrt())
}

pub fn root_transforms(q: u32, roots: &[Float], kp: &Float) -> Result<RootData> {
    if !(kp.is_sign_positive() && *kp > 0 && *kp < 1) {
        return Err(CpmError::InvalidInput(format!("k' must lie in (0,1), got {}", kp.to_f64())));
    }
    let prec = roots.iter().map(|r| r.prec()).max().unwrap_or(kp.prec()).max(kp.prec());
    let kp = Float::with_val(prec, kp);
    let one = Float::with_val(prec, 1);
    let mut out = Vec::with_capacity(roots.len());
    let mut worst = Float::new(prec);
    for w in roots {
        if !w.is_sign_negative() || w.is_zero() {
            return Err(CpmError::DomainError(format!("root w = {:e} is not negative", w.to_f64())));
        }
        let z = Float::with_val(prec, &one / w);
        let c = -Float::with_val(prec, &one + &z) / Float::with_val(prec, &one - &z);
        let lambda = lambda_of_z(&z, &kp)?;
        let lo = Float::with_val(prec, &one - &kp);
        let hi = Float::with_val(prec, &one + &kp);
        if !(lambda > lo && lambda < hi) {
            return Err(CpmError::DomainError(format!(
                "λ = {:e} outside (1−k', 1+k') at z = {:e}",
                lambda.to_f64(),
                z.to_f64()
            )));
        }
        let e2t = Float::with_val(prec, &lambda + &lo) / Float::with_val(prec, &lambda - &lo);
        let theta = Float::with_val(prec, e2t.ln_ref()) / 2u32;
        // e^{2θ} + e^{−2θ} = k' + 1/k' − (1−k')² z / k'
        let lhs = Float::with_val(prec, &e2t + Float::with_val(prec, e2t.recip_ref()));
        let rhs = Float::with_val(prec, &kp + Float::with_val(prec, kp.recip_ref()))
            - Float::with_val(prec, lo.square_ref()) * &z / &kp;
        let res = Float::with_val(prec, &lhs - &rhs).abs() / Float::with_val(prec, lhs.abs_ref());
        if res > worst {
            worst = res;
        }
        out.push(RootRecord {
            w: Float::with_val(prec, w),
            z,
            c,
            lambda,
            theta,
        });
    }
    Ok(RootData {
        q,
        kp,
        roots: out,
        eqet_residual: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn degree_examples() {
        assert_eq!((0..3).map(|q| degree_formula(3, 3, q)).collect::<Vec<_>>(), vec![2, 1, 1]);
        assert_eq!(lambda_counts(3, 2, 0).unwrap().lambda, ints(&[1, 2]));
        assert_eq!(lambda_counts(2, 2, 1).unwrap().degree(), 0);
    }

    #[test]
    fn counts_sum_and_enumeration() {
        for big_n in 2..=4u32 {
            for l in 1..=6usize {
                for q in 0..big_n {
                    if (big_n as usize - 1) * l < q as usize {
                        continue;
                    }
                    let p = lambda_counts(big_n, l, q).unwrap();
                    let total: BigInt = p.lambda.iter().sum();
                    assert_eq!(total, BigInt::from(big_n).pow(l as u32 - 1));
                    assert!(!p.lambda.last().unwrap().is_zero());
                    assert_eq!(p.degree(), degree_formula(big_n, l, q));
                    for (n, c) in p.lambda.iter().enumerate() {
                        let brute = crate::combi::compositions(big_n, l, n as u32 * big_n + q).len();
                        assert_eq!(*c, BigInt::from(brute));
                    }
                }
            }
        }
    }

    #[test]
    fn projection_examples() {
        assert_eq!(drinfeld_projection(2, 2, 0).unwrap(), ints(&[2, 2]));
        assert_eq!(drinfeld_projection(2, 2, 1).unwrap().len(), 1);
    }

    #[test]
    fn projection_is_n_times_counts() {
        for big_n in 2..=4u32 {
            for l in 1..=6usize {
                for q in 0..big_n {
                    if (big_n as usize - 1) * l < q as usize {
                        continue;
                    }
                    let proj = drinfeld_projection(big_n, l, q).unwrap();
                    let counts = lambda_counts(big_n, l, q).unwrap();
                    let scaled: Vec<BigInt> = counts.lambda.iter().map(|c| c * big_n).collect();
                    assert_eq!(proj, scaled, "N={big_n} L={l} Q={q}");
                }
            }
        }
    }

    #[test]
    fn linear_root() {
        let r = solve_roots(&lambda_counts(2, 2, 0).unwrap(), 128).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0], -1);
        assert!(solve_roots(&lambda_counts(2, 2, 1).unwrap(), 128).unwrap().is_empty());
    }

    #[test]
    fn ising_roots_are_tangents() {
        // Σ_n C(L,2n) w^n has roots −tan²(π(2k+1)/(2L))
        let l = 12usize;
        let roots = solve_roots(&lambda_counts(2, l, 0).unwrap(), 128).unwrap();
        let mut expected: Vec<f64> = (0..l / 2)
            .map(|k| {
                let t = (std::f64::consts::PI * (2 * k + 1) as f64 / (2 * l) as f64).tan();
                -t * t
            })
            .collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (r, e) in roots.iter().zip(&expected) {
            assert!((r.to_f64() - e).abs() < 1e-10 * e.abs().max(1.0), "{} vs {e}", r.to_f64());
        }
    }

    #[test]
    fn n3_l9_roots_converge() {
        let p = lambda_counts(3, 9, 0).unwrap();
        assert_eq!(p.degree(), 6);
        let roots = solve_roots(&p, 128).unwrap();
        assert_eq!(roots.len(), 6);
        for w in roots.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(roots.iter().all(|r| r.is_sign_negative()));
    }

    #[test]
    fn non_real_roots_are_rejected() {
        // 1 + w + w² has complex roots
        let p = DrinfeldPoly {
            big_n: 3,
            l: 0,
            q: 0,
            lambda: ints(&[1, 1, 1]),
        };
        assert!(matches!(solve_roots(&p, 128), Err(CpmError::NonRealRoot(_))));
    }

    #[test]
    fn double_root_is_rejected() {
        let p = DrinfeldPoly {
            big_n: 3,
            l: 0,
            q: 0,
            lambda: ints(&[1, 2, 1]),
        };
        assert!(solve_roots(&p, 128).is_err());
    }

    #[test]
    fn reciprocal_pairing() {
        for (big_n, l) in [(3u32, 9usize), (3, 7), (4, 8), (2, 7)] {
            for q in 0..big_n {
                let partner = reciprocal_sector(big_n, l, q);
                let a = solve_roots(&lambda_counts(big_n, l, q).unwrap(), 128).unwrap();
                let b = solve_roots(&lambda_counts(big_n, l, partner).unwrap(), 128).unwrap();
                assert_eq!(a.len(), b.len());
                let mut inv: Vec<Float> = b.iter().map(|x| Float::with_val(128, x.recip_ref())).collect();
                inv.sort_by(|x, y| x.partial_cmp(y).unwrap());
                for (x, y) in a.iter().zip(&inv) {
                    let d = Float::with_val(128, x - y).abs() / Float::with_val(128, x.abs_ref());
                    assert!(d.to_f64() < 1e-32, "N={big_n} L={l} Q={q}");
                }
            }
        }
        assert_eq!(reciprocal_sector(3, 9, 1), 2);
    }

    #[test]
    fn transforms_at_minus_one() {
        let kp = Float::with_val(128, 0.5);
        let d = root_transforms(0, &[Float::with_val(128, -1)], &kp).unwrap();
        let r = &d.roots[0];
        assert!(r.c.is_zero());
        assert!((r.lambda.to_f64() - 1.118033988749895).abs() < 1e-15);
        assert!(d.eqet_residual.to_f64() < 1e-30);
    }

    #[test]
    fn transforms_reject_bad_input() {
        let kp = Float::with_val(128, 0.5);
        assert!(matches!(root_transforms(0, &[Float::with_val(128, 2)], &kp), Err(CpmError::DomainError(_))));
        assert!(root_transforms(0, &[], &Float::with_val(128, 1.5)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn transforms_stay_in_range(big_n in 2u32..5, l in 2usize..12, q in 0u32..4, kpi in 1u32..10) {
            let q = q % big_n;
            let p = lambda_counts(big_n, l, q).unwrap();
            let roots = solve_roots(&p, 128).unwrap();
            let kp = Float::with_val(128, kpi) / 10u32;
            let d = root_transforms(q, &roots, &kp).unwrap();
            prop_assert!(d.eqet_residual.to_f64() < 1e-30);
            for r in &d.roots {
                prop_assert!(r.c > -1 && r.c < 1);
            }
        }
    }
}
