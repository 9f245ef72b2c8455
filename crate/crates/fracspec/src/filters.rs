//! Trigonometric-polynomial filters, Hadamard-triple certification and the
//! QMF identity.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num::bigint::BigInt;
use num::{One, Zero};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ifs::{DigitSet, ExpansiveIntMatrix};
use crate::rational::{frac_part, rat_to_f64, Rat, RationalVector};

/// Largest exponent denominator for which the cyclotomic exact-zero test is
/// attempted (two-term sums are decided for any denominator).
const CYCLOTOMIC_CAP: u64 = 4096;

/// Finitely supported Fourier coefficients a_k, representing
/// x -> sum a_k e^{2 pi i k.x}. Zero coefficients are pruned.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPolynomial {
    coeffs: BTreeMap<Vec<i64>, Complex64>,
    dim: usize,
}

impl TrigPolynomial {
    pub fn new(coeffs: BTreeMap<Vec<i64>, Complex64>, dim: usize) -> Result<Self> {
        if dim == 0 || coeffs.keys().any(|k| k.len() != dim) {
            return Err(Error::Invalid("frequency dimension mismatch".into()));
        }
        let coeffs = coeffs
            .into_iter()
            .filter(|(_, a)| a.norm_sqr() != 0.0)
            .collect();
        Ok(TrigPolynomial { coeffs, dim })
    }

    /// The digit filter m_B(x) = (1/N) sum_b e^{2 pi i b.x}.
    pub fn from_digits(b: &DigitSet) -> Self {
        let n = b.len() as f64;
        let mut coeffs = BTreeMap::new();
        for p in b.points() {
            *coeffs.entry(p.clone()).or_insert(Complex64::ZERO) += Complex64::new(1.0 / n, 0.0);
        }
        TrigPolynomial { coeffs, dim: b.dim() }
    }

    pub fn constant_one(dim: usize) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(vec![0; dim], Complex64::ONE);
        TrigPolynomial { coeffs, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<i64>, Complex64> {
        &self.coeffs
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for (k, a) in &self.coeffs {
            let phase: f64 = k.iter().zip(x).map(|(&ki, &xi)| ki as f64 * xi).sum();
            acc += a * Complex64::from_polar(1.0, 2.0 * PI * phase);
        }
        acc
    }

    pub fn eval_rat(&self, x: &RationalVector) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for (k, a) in &self.coeffs {
            let q = frac_part(&x.dot_int(k));
            acc += a * Complex64::from_polar(1.0, 2.0 * PI * rat_to_f64(&q));
        }
        acc
    }

    /// Max |k| per axis (sup-norm degree).
    pub fn degree(&self) -> i64 {
        self.coeffs
            .keys()
            .flat_map(|k| k.iter().map(|&ki| ki.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn sum_abs_coeffs(&self) -> f64 {
        self.coeffs.values().map(|a| a.norm()).sum()
    }

    /// Lipschitz constant of x -> m(x): 2 pi sum |a_k| |k|_2.
    pub fn lipschitz(&self) -> f64 {
        2.0 * PI
            * self
                .coeffs
                .iter()
                .map(|(k, a)| {
                    let kn: f64 = k.iter().map(|&ki| (ki as f64).powi(2)).sum::<f64>().sqrt();
                    a.norm() * kn
                })
                .sum::<f64>()
    }

    /// Coefficients of |m|^2: c_j = sum_k a_{k+j} conj(a_k).
    pub fn mod_squared(&self) -> TrigPolynomial {
        let mut coeffs: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
        for (k1, a1) in &self.coeffs {
            for (k2, a2) in &self.coeffs {
                let j: Vec<i64> = k1.iter().zip(k2).map(|(&x, &y)| x - y).collect();
                *coeffs.entry(j).or_insert(Complex64::ZERO) += a1 * a2.conj();
            }
        }
        coeffs.retain(|_, a| a.norm() > 1e-15);
        TrigPolynomial { coeffs, dim: self.dim }
    }

    /// True when all coefficients are (strictly) positive reals; such filters
    /// are averages of unimodular exponentials and admit the exact
    /// |m(x)| = 1 and m(x) = 0 tests below.
    pub fn has_positive_real_coeffs(&self) -> bool {
        self.coeffs
            .values()
            .all(|a| a.im == 0.0 && a.re > 0.0)
    }

    /// Exact extreme-value test at a rational point: |m(x)| = 1 (given
    /// sum a_k = 1, a_k > 0) iff all support frequencies are phase-aligned,
    /// i.e. (k - k0).x is an integer for every k in the support.
    pub fn is_extreme_at(&self, x: &RationalVector) -> Result<bool> {
        if !self.has_positive_real_coeffs() {
            return Err(Error::Invalid(
                "exact extreme test requires positive real coefficients".into(),
            ));
        }
        let mut keys = self.coeffs.keys();
        let k0 = match keys.next() {
            Some(k) => k,
            None => return Ok(false),
        };
        let q0 = x.dot_int(k0);
        for k in keys {
            let diff = x.dot_int(k) - &q0;
            if !frac_part(&diff).is_zero() {
                return Ok(false);
            }
        }
        // a lone phase-aligned support still needs the base phase free; |m|
        // equals sum a_k = |m(0)| regardless of the common phase
        Ok(true)
    }

    /// Exact zero test at a rational point for equal-coefficient filters.
    /// Returns None when undecidable within the cyclotomic cap.
    pub fn exact_zero_at(&self, x: &RationalVector) -> Option<bool> {
        if self.coeffs.is_empty() {
            return Some(false); // empty support never stored; defensive
        }
        let vals: Vec<Complex64> = self.coeffs.values().copied().collect();
        let first = vals[0];
        if first.im != 0.0 || first.re <= 0.0 || vals.iter().any(|v| *v != first) {
            return None;
        }
        let qs: Vec<Rat> = self.coeffs.keys().map(|k| x.dot_int(k)).collect();
        sum_of_unit_roots_is_zero(&qs)
    }
}

/// Decide exactly whether sum_j e^{2 pi i q_j} = 0 for rational q_j.
///
/// One term never vanishes; two terms vanish iff the exponents differ by a
/// half-integer. The general case reduces exponents to a common denominator
/// Q and tests divisibility of the exponent polynomial by the Q-th
/// cyclotomic polynomial; None when Q exceeds the cap.
pub fn sum_of_unit_roots_is_zero(qs: &[Rat]) -> Option<bool> {
    match qs.len() {
        0 => Some(false),
        1 => Some(false),
        2 => {
            let diff = &qs[0] - &qs[1];
            let twice = frac_part(&(diff * Rat::from_integer(BigInt::from(2))));
            let half_apart = twice.is_zero()
                && !frac_part(&(&qs[0] - &qs[1])).is_zero();
            Some(half_apart)
        }
        _ => {
            // common denominator
            let mut den = BigInt::one();
            for q in qs {
                den = num::integer::lcm(den, q.denom().clone());
            }
            let q: u64 = den.clone().try_into().ok()?;
            if q > CYCLOTOMIC_CAP {
                return None;
            }
            let q = q as usize;
            let mut poly = vec![0i64; q];
            for e in qs {
                let n = frac_part(e).numer() * (&den / frac_part(e).denom());
                let idx: u64 = n.try_into().ok()?;
                poly[idx as usize % q] += 1;
            }
            let phi = cyclotomic(q as u64);
            Some(poly_divisible(&poly, &phi))
        }
    }
}

/// Q-th cyclotomic polynomial via Phi_Q = (t^Q - 1) / prod_{d|Q, d<Q} Phi_d.
fn cyclotomic(q: u64) -> Vec<i64> {
    let mut num = vec![0i64; q as usize + 1];
    num[0] = -1;
    num[q as usize] = 1;
    let mut result = num;
    for d in 1..q {
        if q % d == 0 {
            let phi_d = cyclotomic(d);
            result = poly_div_exact(&result, &phi_d);
        }
    }
    result
}

/// Exact division of integer polynomials (remainder known to vanish).
fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let lead = den[dd];
    let mut quot = vec![0i64; rem.len() - dd];
    for i in (dd..rem.len()).rev() {
        let c = rem[i] / lead;
        quot[i - dd] = c;
        if c != 0 {
            for (j, &dj) in den.iter().enumerate() {
                rem[i - dd + j] -= c * dj;
            }
        }
    }
    quot
}

fn poly_divisible(num: &[i64], den: &[i64]) -> bool {
    let dd = den.len() - 1;
    let lead = den[dd];
    let mut rem: Vec<i128> = num.iter().map(|&c| c as i128).collect();
    if rem.len() <= dd {
        return rem.iter().all(|&c| c == 0);
    }
    for i in (dd..rem.len()).rev() {
        if rem[i] % lead as i128 != 0 {
            return false;
        }
        let c = rem[i] / lead as i128;
        if c != 0 {
            for (j, &dj) in den.iter().enumerate() {
                rem[i - dd + j] -= c * dj as i128;
            }
        }
    }
    rem.iter().all(|&c| c == 0)
}

/// Unitarity certificate for the matrix (1/sqrt N)(e^{2 pi i (A^-1 b).l}).
#[derive(Clone, Debug)]
pub struct HadamardCertificate {
    pub n: usize,
    pub matrix_entries: Vec<Vec<Complex64>>,
    pub unitarity_defect: f64,
}

impl HadamardCertificate {
    pub fn is_valid(&self) -> bool {
        self.unitarity_defect <= 1e-12
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "valid": self.is_valid(),
            "defect": self.unitarity_defect,
            "matrix": self.matrix_entries.iter().map(|row| {
                row.iter().map(|e| json!([e.re, e.im])).collect::<Vec<_>>()
            }).collect::<Vec<_>>(),
        })
    }
}

/// Certify the Hadamard-triple property of (A, B, L).
pub fn hadamard_check(
    a: &ExpansiveIntMatrix,
    b: &DigitSet,
    l: &DigitSet,
) -> Result<HadamardCertificate> {
    if b.len() != l.len() {
        return Err(Error::Invalid(format!(
            "|B| = {} and |L| = {} must agree",
            b.len(),
            l.len()
        )));
    }
    if !b.contains_zero() {
        return Err(Error::Invalid("0 must belong to B".into()));
    }
    if !l.contains_zero() {
        return Err(Error::Invalid("0 must belong to L".into()));
    }
    if b.dim() != a.dim() || l.dim() != a.dim() {
        return Err(Error::Invalid("digit dimension must match the matrix".into()));
    }
    let n = b.len();
    let scale = 1.0 / (n as f64).sqrt();
    let inv = a.inverse();
    let mut m = vec![vec![Complex64::ZERO; n]; n];
    for (i, bi) in b.points().iter().enumerate() {
        let b_rat: Vec<Rat> = bi.iter().map(|&x| Rat::from_integer(BigInt::from(x))).collect();
        let a_inv_b = inv.mul_vec(&b_rat);
        for (j, lj) in l.points().iter().enumerate() {
            let mut phase = Rat::zero();
            for (c, &lc) in a_inv_b.iter().zip(lj) {
                phase += c * Rat::from_integer(BigInt::from(lc));
            }
            let phase = rat_to_f64(&frac_part(&phase));
            m[i][j] = scale * Complex64::from_polar(1.0, 2.0 * PI * phase);
        }
    }
    // defect = max |(M* M - I)_{jk}|
    let mut defect: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            let mut acc = Complex64::ZERO;
            for i in 0..n {
                acc += m[i][j].conj() * m[i][k];
            }
            if j == k {
                acc -= Complex64::ONE;
            }
            defect = defect.max(acc.norm());
        }
    }
    Ok(HadamardCertificate {
        n,
        matrix_entries: m,
        unitarity_defect: defect,
    })
}

/// Max over a grid^d lattice of |sum_{l in L} |m((A^T)^-1(x+l))|^2 - 1|.
///
/// Both sides are trigonometric polynomials, so a grid of at least
/// 2 deg + 1 points per axis decides the identity.
pub fn qmf_defect(
    m: &TrigPolynomial,
    a: &ExpansiveIntMatrix,
    l: &DigitSet,
    grid: u32,
) -> Result<f64> {
    if grid == 0 {
        return Err(Error::Invalid("grid must be >= 1".into()));
    }
    let d = a.dim();
    if m.dim() != d || l.dim() != d {
        return Err(Error::Invalid("dimension mismatch in qmf_defect".into()));
    }
    let at_inv = a.transpose_inverse().to_f64();
    let mut worst: f64 = 0.0;
    let total = (grid as u64).pow(d as u32);
    for idx in 0..total {
        let mut x = vec![0.0; d];
        let mut rem = idx;
        for xi in x.iter_mut() {
            *xi = (rem % grid as u64) as f64 / grid as f64;
            rem /= grid as u64;
        }
        let mut sum = 0.0;
        for lp in l.points() {
            let shifted: Vec<f64> = x.iter().zip(lp).map(|(&xi, &li)| xi + li as f64).collect();
            let y: Vec<f64> = (0..d)
                .map(|r| (0..d).map(|c| at_inv[r * d + c] * shifted[c]).sum())
                .collect();
            sum += m.eval(&y).norm_sqr();
        }
        worst = worst.max((sum - 1.0).abs());
    }
    Ok(worst)
}

/// Serialize a filter as the JSON map {"[k1,...,kd]": [re, im]}.
pub fn filter_to_json(m: &TrigPolynomial) -> Value {
    let mut map = serde_json::Map::new();
    for (k, a) in m.coeffs() {
        let key = serde_json::to_string(k).unwrap();
        map.insert(key, json!([a.re, a.im]));
    }
    Value::Object(map)
}

pub fn filter_from_json(v: &Value) -> Result<TrigPolynomial> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Parse("filter JSON must be an object".into()))?;
    let mut coeffs = BTreeMap::new();
    let mut dim = 0;
    for (key, val) in obj {
        let k: Vec<i64> = serde_json::from_str(key)
            .map_err(|e| Error::Parse(format!("bad frequency key {key:?}: {e}")))?;
        if dim == 0 {
            dim = k.len();
        }
        let pair = val
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| Error::Parse(format!("coefficient for {key} must be [re, im]")))?;
        let re = pair[0].as_f64().ok_or_else(|| Error::Parse("re must be a number".into()))?;
        let im = pair[1].as_f64().ok_or_else(|| Error::Parse("im must be a number".into()))?;
        coeffs.insert(k, Complex64::new(re, im));
    }
    if dim == 0 {
        return Err(Error::Parse("filter JSON is empty".into()));
    }
    TrigPolynomial::new(coeffs, dim)
}
