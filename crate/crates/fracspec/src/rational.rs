//! Exact rational vectors and matrices.
//!
//! Cycle points, inverse matrices and zero certificates all live in exact
//! arithmetic; floating point only enters when a value is handed to the
//! numerical layers.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// A d-dimensional rational vector stored over a common reduced denominator.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalVector {
    numerators: Vec<BigInt>,
    denominator: BigInt,
}

impl RationalVector {
    pub fn new(numerators: Vec<BigInt>, denominator: BigInt) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::Invalid("zero denominator".into()));
        }
        Ok(Self::reduce(numerators, denominator))
    }

    fn reduce(mut numerators: Vec<BigInt>, mut denominator: BigInt) -> Self {
        if denominator.is_negative() {
            denominator = -denominator;
            for n in &mut numerators {
                *n = -n.clone();
            }
        }
        let mut g = denominator.clone();
        for n in &numerators {
            g = num::integer::gcd(g, n.abs());
        }
        if g > BigInt::one() {
            for n in &mut numerators {
                *n = n.clone() / &g;
            }
            denominator /= &g;
        }
        RationalVector {
            numerators,
            denominator,
        }
    }

    pub fn from_rats(rats: &[Rat]) -> Self {
        let mut den = BigInt::one();
        for r in rats {
            den = num::integer::lcm(den, r.denom().clone());
        }
        let nums = rats
            .iter()
            .map(|r| r.numer() * (&den / r.denom()))
            .collect();
        Self::reduce(nums, den)
    }

    pub fn from_ints(v: &[i64]) -> Self {
        RationalVector {
            numerators: v.iter().map(|&n| BigInt::from(n)).collect(),
            denominator: BigInt::one(),
        }
    }

    pub fn dim(&self) -> usize {
        self.numerators.len()
    }

    pub fn numerators(&self) -> &[BigInt] {
        &self.numerators
    }

    pub fn denominator(&self) -> &BigInt {
        &self.denominator
    }

    pub fn component(&self, i: usize) -> Rat {
        Rat::new(self.numerators[i].clone(), self.denominator.clone())
    }

    pub fn to_rats(&self) -> Vec<Rat> {
        (0..self.dim()).map(|i| self.component(i)).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.to_rats()
            .iter()
            .map(|r| rat_to_f64(r))
            .collect()
    }

    pub fn is_integer(&self) -> bool {
        self.denominator.is_one()
    }

    /// Dot product with an integer vector.
    pub fn dot_int(&self, k: &[i64]) -> Rat {
        let mut acc = BigInt::zero();
        for (n, &ki) in self.numerators.iter().zip(k) {
            acc += n * BigInt::from(ki);
        }
        Rat::new(acc, self.denominator.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.numerators.iter().all(|n| n.is_zero())
    }
}

impl std::fmt::Display for RationalVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .to_rats()
            .iter()
            .map(|r| {
                if r.denom().is_one() {
                    format!("{}", r.numer())
                } else {
                    format!("{}/{}", r.numer(), r.denom())
                }
            })
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    // good enough for the magnitudes that occur here (denominators fit in f64)
    let n = bigint_to_f64(r.numer());
    let d = bigint_to_f64(r.denom());
    n / d
}

fn bigint_to_f64(n: &BigInt) -> f64 {
    use num::ToPrimitive;
    n.to_f64().unwrap_or(f64::NAN)
}

/// Dense exact rational matrix with Gaussian-elimination solve and inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct RatMatrix {
    pub n: usize,
    /// row-major
    pub entries: Vec<Rat>,
}

impl RatMatrix {
    pub fn from_int_rows(rows: &[Vec<i64>]) -> Self {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for r in rows {
            for &e in r {
                entries.push(rat_int(e));
            }
        }
        RatMatrix { n, entries }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RatMatrix {
            n,
            entries: vec![Rat::zero(); n * n],
        };
        for i in 0..n {
            m.entries[i * n + i] = Rat::one();
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.entries[i * self.n + j] = v;
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut t = self.clone();
        for i in 0..n {
            for j in 0..n {
                t.entries[j * n + i] = self.entries[i * n + j].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        let n = self.n;
        let mut out = RatMatrix {
            n,
            entries: vec![Rat::zero(); n * n],
        };
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j).clone() + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut acc = Rat::zero();
                for j in 0..n {
                    acc += self.get(i, j) * &v[j];
                }
                acc
            })
            .collect()
    }

    pub fn sub(&self, other: &RatMatrix) -> RatMatrix {
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            *a -= b;
        }
        out
    }

    pub fn pow(&self, p: usize) -> RatMatrix {
        let mut out = RatMatrix::identity(self.n);
        for _ in 0..p {
            out = out.mul(self);
        }
        out
    }

    pub fn determinant(&self) -> Rat {
        let mut m = self.clone();
        let n = m.n;
        let mut det = Rat::one();
        for col in 0..n {
            let pivot = (col..n).find(|&r| !m.get(r, col).is_zero());
            let pivot = match pivot {
                Some(p) => p,
                None => return Rat::zero(),
            };
            if pivot != col {
                for j in 0..n {
                    let a = m.get(col, j).clone();
                    let b = m.get(pivot, j).clone();
                    m.set(col, j, b);
                    m.set(pivot, j, a);
                }
                det = -det;
            }
            let p = m.get(col, col).clone();
            det *= &p;
            for r in col + 1..n {
                let f = m.get(r, col) / &p;
                if f.is_zero() {
                    continue;
                }
                for j in col..n {
                    let v = m.get(r, j).clone() - &f * m.get(col, j);
                    m.set(r, j, v);
                }
            }
        }
        det
    }

    /// Solve self * x = b exactly. Errors on a singular matrix.
    pub fn solve(&self, b: &[Rat]) -> Result<Vec<Rat>> {
        let n = self.n;
        let mut a = self.clone();
        let mut rhs = b.to_vec();
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !a.get(r, col).is_zero())
                .ok_or_else(|| Error::Computation("singular matrix in exact solve".into()))?;
            if pivot != col {
                for j in 0..n {
                    let x = a.get(col, j).clone();
                    let y = a.get(pivot, j).clone();
                    a.set(col, j, y);
                    a.set(pivot, j, x);
                }
                rhs.swap(col, pivot);
            }
            let p = a.get(col, col).clone();
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col) / &p;
                if f.is_zero() {
                    continue;
                }
                for j in col..n {
                    let v = a.get(r, j).clone() - &f * a.get(col, j);
                    a.set(r, j, v);
                }
                let v = rhs[r].clone() - &f * &rhs[col];
                rhs[r] = v;
            }
        }
        for i in 0..n {
            rhs[i] = &rhs[i] / a.get(i, i);
        }
        Ok(rhs)
    }

    pub fn inverse(&self) -> Result<RatMatrix> {
        let n = self.n;
        let mut inv = RatMatrix {
            n,
            entries: vec![Rat::zero(); n * n],
        };
        for col in 0..n {
            let mut e = vec![Rat::zero(); n];
            e[col] = Rat::one();
            let x = self.solve(&e)?;
            for i in 0..n {
                inv.set(i, col, x[i].clone());
            }
        }
        Ok(inv)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(rat_to_f64).collect()
    }
}

/// Fractional part in [0, 1).
pub fn frac_part(r: &Rat) -> Rat {
    let f = r - r.floor();
    f
}
