//! Equilibrium-measure sampling on Julia sets by random backward
//! iteration, moment estimation, and the scale-4 lacunary Hardy-space
//! splitting F(z) = F0(z^4) + z F1(z^4).

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Polynomial with complex coefficients, ascending order; degree >= 2.
#[derive(Clone, Debug)]
pub struct ComplexPolynomial {
    coeffs: Vec<Complex64>,
}

impl ComplexPolynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        let mut c = coeffs;
        while c.len() > 1 && c.last().map(|x| x.norm() == 0.0) == Some(true) {
            c.pop();
        }
        if c.len() < 3 {
            return Err(Error::Invalid("polynomial degree must be at least 2".into()));
        }
        Ok(ComplexPolynomial { coeffs: c })
    }

    /// Parse expressions like "z^2 + c" with a numeric c: sums of terms
    /// `[coefficient][z[^power]]`, coefficients real or with an `i` suffix.
    pub fn parse(expr: &str) -> Result<Self> {
        let cleaned: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
        if cleaned.is_empty() {
            return Err(Error::Parse("empty polynomial expression".into()));
        }
        let mut terms: Vec<(f64, String)> = Vec::new();
        let mut sign = 1.0;
        let mut cur = String::new();
        for (i, ch) in cleaned.chars().enumerate() {
            if (ch == '+' || ch == '-') && i > 0 && !matches!(cleaned.as_bytes()[i - 1], b'e' | b'E' | b'^' | b'+' | b'-') {
                if cur.is_empty() {
                    return Err(Error::Parse("empty term in polynomial expression".into()));
                }
                terms.push((sign, std::mem::take(&mut cur)));
                sign = if ch == '+' { 1.0 } else { -1.0 };
            } else if ch == '+' && i == 0 {
            } else if ch == '-' && i == 0 {
                sign = -1.0;
            } else {
                cur.push(ch);
            }
        }
        if cur.is_empty() {
            return Err(Error::Parse("dangling operator in polynomial expression".into()));
        }
        terms.push((sign, cur));

        let mut acc: BTreeMap<usize, Complex64> = BTreeMap::new();
        for (sign, t) in terms {
            let (coeff_str, power) = match t.find('z') {
                Some(pos) => {
                    let tail = &t[pos + 1..];
                    let power = if let Some(p) = tail.strip_prefix('^') {
                        let e = p
                            .parse::<usize>()
                            .map_err(|_| Error::Parse(format!("bad exponent in term '{t}'")))?;
                        if e > 64 {
                            return Err(Error::Parse(format!("exponent {e} exceeds 64")));
                        }
                        e
                    } else if tail.is_empty() {
                        1
                    } else {
                        return Err(Error::Parse(format!("unexpected suffix in term '{t}'")));
                    };
                    (&t[..pos], power)
                }
                None => (&t[..], 0),
            };
            let coeff = if coeff_str.is_empty() {
                Complex64::ONE
            } else if let Some(body) = coeff_str.strip_suffix('i') {
                let v = if body.is_empty() {
                    1.0
                } else {
                    body.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad coefficient in term '{t}'")))?
                };
                Complex64::new(0.0, v)
            } else {
                Complex64::new(
                    coeff_str
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad coefficient in term '{t}'")))?,
                    0.0,
                )
            };
            *acc.entry(power).or_insert(Complex64::ZERO) += sign * coeff;
        }
        let deg = *acc.keys().max().unwrap();
        let mut coeffs = vec![Complex64::ZERO; deg + 1];
        for (p, c) in acc {
            coeffs[p] = c;
        }
        ComplexPolynomial::new(coeffs)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    fn derivative_eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for (k, c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * z + (k as f64) * c;
        }
        acc
    }

    /// |z| > escape_radius guarantees |R(z)| > |z|, so the orbit escapes.
    pub fn escape_radius(&self) -> f64 {
        let d = self.degree();
        let lead = self.coeffs[d].norm();
        let others: f64 = self.coeffs[..d].iter().map(|c| c.norm()).sum();
        ((1.0 + others) / lead).max(1.0)
    }

    /// All solutions of self(w) = z, by companion-matrix eigenvalues with
    /// Newton polishing; residuals above 1e-10 are a hard error.
    pub fn preimages(&self, z: Complex64) -> Result<Vec<Complex64>> {
        let mut shifted = self.coeffs.clone();
        shifted[0] -= z;
        let d = shifted.len() - 1;
        let lead = shifted[d];
        if lead.norm() == 0.0 {
            return Err(Error::Computation("leading coefficient vanished".into()));
        }
        // stable closed form for quadratics; companion matrix above that
        let eig: Vec<Complex64> = if d == 2 {
            let (a, b, c) = (shifted[2], shifted[1], shifted[0]);
            let disc = (b * b - 4.0 * a * c).sqrt();
            // pick the sign that avoids cancellation in -b -+ disc
            let q = if (b + disc).norm() >= (b - disc).norm() {
                -0.5 * (b + disc)
            } else {
                -0.5 * (b - disc)
            };
            if q.norm() > 0.0 {
                vec![q / a, c / q]
            } else {
                vec![Complex64::ZERO, -b / a]
            }
        } else {
            durand_kerner(&shifted)
        };
        let shifted_poly = |w: Complex64| self.eval(w) - z;
        let mut roots = Vec::with_capacity(d);
        for mut w in eig {
            for _ in 0..8 {
                let dv = self.derivative_eval(w);
                if dv.norm() < 1e-14 {
                    break;
                }
                let corr = shifted_poly(w) / dv;
                w -= corr;
                if corr.norm() < 1e-15 {
                    break;
                }
            }
            let scale = 1.0f64.max(w.norm().powi(d as i32));
            let residual = shifted_poly(w).norm() / (lead.norm() * scale);
            if residual > 1e-10 {
                return Err(Error::Computation(format!(
                    "root polishing failed at z = {z}: residual {residual:.3e}"
                )));
            }
            roots.push(w);
        }
        Ok(roots)
    }
}

/// Simultaneous Weierstrass iteration for all roots of a polynomial given
/// in ascending coefficient order; deterministic non-real starting points.
fn durand_kerner(coeffs: &[Complex64]) -> Vec<Complex64> {
    let d = coeffs.len() - 1;
    let lead = coeffs[d];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |w: Complex64| {
        let mut acc = Complex64::ZERO;
        for c in monic.iter().rev() {
            acc = acc * w + c;
        }
        acc
    };
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..d).map(|k| seed.powu(k as u32 + 1)).collect();
    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for i in 0..d {
            let mut denom = Complex64::ONE;
            for j in 0..d {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-300 {
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-14 {
            break;
        }
    }
    roots
}

/// Random backward orbit: repeatedly jump to a uniformly chosen preimage.
/// The empirical distribution converges weakly to the equilibrium measure
/// of the Julia set. Deterministic for a fixed seed.
pub fn brolin_sample(
    r: &ComplexPolynomial,
    n_samples: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = Complex64::new(0.5, 0.3);
    let mut out = Vec::with_capacity(n_samples);
    for step in 0..(burn_in + n_samples) {
        let pre = r.preimages(z)?;
        z = pre[rng.gen_range(0..pre.len())];
        if step >= burn_in {
            out.push(z);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct MomentEstimate {
    pub value: Complex64,
    pub std_error: f64,
}

/// M_n = sample average of z^n for n = 0..=n_max, with Monte-Carlo
/// standard errors.
pub fn moments(samples: &[Complex64], n_max: u32) -> Result<Vec<MomentEstimate>> {
    if samples.is_empty() {
        return Err(Error::Invalid("moment estimation needs samples".into()));
    }
    let n = samples.len() as f64;
    let mut out = Vec::with_capacity(n_max as usize + 1);
    for k in 0..=n_max {
        let powers: Vec<Complex64> = samples.iter().map(|z| z.powu(k)).collect();
        let mean = powers.iter().sum::<Complex64>() / n;
        let var = powers.iter().map(|p| (p - mean).norm_sqr()).sum::<f64>() / n;
        out.push(MomentEstimate { value: mean, std_error: (var / n).sqrt() });
    }
    Ok(out)
}

/// True when every base-4 digit of lambda is 0 or 1, i.e. lambda is in the
/// scale-4 lacunary frequency set.
pub fn in_lacunary_set(lambda: u64) -> bool {
    let mut v = lambda;
    while v > 0 {
        if v % 4 > 1 {
            return false;
        }
        v /= 4;
    }
    true
}

/// Finite expansion sum c_lambda z^lambda over lacunary frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct LacunaryExpansion {
    coeffs: BTreeMap<u64, Complex64>,
}

impl LacunaryExpansion {
    pub fn new(coeffs: BTreeMap<u64, Complex64>) -> Result<Self> {
        for &l in coeffs.keys() {
            if !in_lacunary_set(l) {
                return Err(Error::Invalid(format!(
                    "frequency {l} has a base-4 digit outside {{0,1}}"
                )));
            }
        }
        Ok(LacunaryExpansion { coeffs })
    }

    pub fn empty() -> Self {
        LacunaryExpansion { coeffs: BTreeMap::new() }
    }

    pub fn coeffs(&self) -> &BTreeMap<u64, Complex64> {
        &self.coeffs
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("expected a JSON object of frequency -> [re, im]".into()))?;
        let mut map = BTreeMap::new();
        for (k, val) in obj {
            let l: u64 = k
                .parse()
                .map_err(|_| Error::Parse(format!("bad frequency key '{k}'")))?;
            let pair = val
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| Error::Parse(format!("coefficient for {k} must be [re, im]")))?;
            let re = pair[0]
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("non-numeric coefficient for {k}")))?;
            let im = pair[1]
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("non-numeric coefficient for {k}")))?;
            map.insert(l, Complex64::new(re, im));
        }
        LacunaryExpansion::new(map)
    }

    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::Map::new();
        for (l, c) in &self.coeffs {
            obj.insert(l.to_string(), json!([c.re, c.im]));
        }
        Value::Object(obj)
    }
}

/// Route each frequency by its residue mod 4: residue 0 goes to F0 at
/// lambda/4, residue 1 to F1 at (lambda-1)/4; no other residues occur in
/// the lacunary set. Exact bookkeeping, so the norm identity
/// ||f||^2 = ||F0||^2 + ||F1||^2 is literal.
pub fn k2_split(f: &LacunaryExpansion) -> (LacunaryExpansion, LacunaryExpansion) {
    let mut f0 = BTreeMap::new();
    let mut f1 = BTreeMap::new();
    for (&l, &c) in f.coeffs() {
        if l % 4 == 0 {
            f0.insert(l / 4, c);
        } else {
            f1.insert((l - 1) / 4, c);
        }
    }
    (
        LacunaryExpansion { coeffs: f0 },
        LacunaryExpansion { coeffs: f1 },
    )
}

/// Inverse of the split: f(z) = F0(z^4) + z F1(z^4).
pub fn k2_merge(f0: &LacunaryExpansion, f1: &LacunaryExpansion) -> Result<LacunaryExpansion> {
    let mut map = BTreeMap::new();
    let scale = |l: u64, shift: u64| {
        l.checked_mul(4)
            .and_then(|v| v.checked_add(shift))
            .ok_or_else(|| Error::Invalid(format!("frequency {l} overflows under merge")))
    };
    for (&l, &c) in f0.coeffs() {
        map.insert(scale(l, 0)?, c);
    }
    for (&l, &c) in f1.coeffs() {
        if map.insert(scale(l, 1)?, c).is_some() {
            return Err(Error::Invalid("overlapping frequencies in merge".into()));
        }
    }
    LacunaryExpansion::new(map)
}

/// Schwarz-type bound ||f|| / sqrt(1 - |z|^2) on |F_f(z)|.
pub fn schwarz_bound(f: &LacunaryExpansion, z: Complex64) -> f64 {
    f.norm_sq().sqrt() / (1.0 - z.norm_sqr()).sqrt()
}

/// F_f(z) = sum c_lambda z^lambda for |z| < 1 - 1e-6.
pub fn evaluate_ff(f: &LacunaryExpansion, z: Complex64) -> Result<Complex64> {
    if z.norm() >= 1.0 - 1e-6 {
        return Err(Error::Invalid(format!(
            "|z| = {} too close to the unit circle",
            z.norm()
        )));
    }
    let mut sum = Complex64::ZERO;
    for (&l, &c) in f.coeffs() {
        let p = u32::try_from(l).map_err(|_| Error::Computation("frequency overflow".into()))?;
        sum += c * z.powu(p);
    }
    if sum.norm() > schwarz_bound(f, z) + 1e-9 {
        return Err(Error::Computation(
            "evaluation violated the Schwarz bound; numerical breakdown".into(),
        ));
    }
    Ok(sum)
}
