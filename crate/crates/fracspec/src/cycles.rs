//! Exact enumeration of cycles of a dual IFS and classification of extreme
//! (m-)cycles.
//!
//! For a word (l_1, ..., l_p) the starting point of the unique periodic
//! orbit solves (I - M^p) x = sum_i M^{p-i+1} l_i with M = (A^T)^-1, which
//! is done in rational arithmetic, so every returned cycle satisfies its
//! fixed-point equation exactly.

use std::collections::BTreeSet;

use num::bigint::BigInt;
use num::Zero;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::filters::TrigPolynomial;
use crate::ifs::{check_cap, AffineIfs, Orientation};
use crate::rational::{Rat, RationalVector};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cycle {
    /// periodic points, canonical rotation (lexicographically least first)
    pub points: Vec<RationalVector>,
    /// digit word: sigma_{word[i]}(points[i]) = points[i+1], cyclically
    pub word: Vec<Vec<i64>>,
    pub is_extreme: bool,
}

impl Cycle {
    pub fn period(&self) -> usize {
        self.points.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.points.len() == 1 && self.points[0].is_zero()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "period": self.period(),
            "points": self.points.iter().map(|p| {
                p.to_rats().iter().map(|r| json!({
                    "num": r.numer().to_string(),
                    "den": r.denom().to_string(),
                })).collect::<Vec<_>>()
            }).collect::<Vec<_>>(),
            "word": self.word,
            "extreme": self.is_extreme,
        })
    }
}

/// Enumerate cycles of the dual system up to `max_period`. Returns only the
/// extreme ones unless `include_all` is set.
///
/// With `mod_one` set, points are reduced into [0,1)^d before
/// deduplication. That is the wavelet convention, where cycles are orbits
/// of x -> A^T x mod Z^d and the branch digits form a complete residue
/// system; without it, points are kept as exact fixed points in the
/// attractor of the dual system (the fractal convention, where e.g. {0}
/// and {1} are distinct cycles).
pub fn find_cycles(
    dual: &AffineIfs,
    m: &TrigPolynomial,
    max_period: u32,
    include_all: bool,
    mod_one: bool,
) -> Result<Vec<Cycle>> {
    if max_period == 0 {
        return Err(Error::Invalid("max_period must be >= 1".into()));
    }
    if dual.orientation != Orientation::Dual {
        return Err(Error::Invalid("cycle search expects a dual-orientation IFS".into()));
    }
    let n = dual.n_maps() as u128;
    let mut total: u128 = 0;
    for p in 1..=max_period {
        total += n.pow(p);
    }
    check_cap(total)?;

    let d = dual.dim();
    let m_inv = dual.matrix.transpose_inverse();
    let mut seen: BTreeSet<Vec<RationalVector>> = BTreeSet::new();
    let mut out = Vec::new();

    for p in 1..=max_period as usize {
        // precompute M^p and the offset weights M^{p-i+1}
        let powers: Vec<_> = (0..=p).scan(crate::rational::RatMatrix::identity(d), |acc, _| {
            let cur = acc.clone();
            *acc = acc.mul(m_inv);
            Some(cur)
        })
        .collect();
        let system = crate::rational::RatMatrix::identity(d).sub(&powers[p]);

        // weight[i][digit] = M^{p-i} * M * l_digit, shared by all words
        let weights: Vec<Vec<Vec<Rat>>> = (0..p)
            .map(|i| {
                let w_mat = powers[p - 1 - i].mul(m_inv);
                dual.digits
                    .points()
                    .iter()
                    .map(|l| {
                        let l_rat: Vec<Rat> =
                            l.iter().map(|&v| Rat::from_integer(BigInt::from(v))).collect();
                        w_mat.mul_vec(&l_rat)
                    })
                    .collect()
            })
            .collect();

        let mut word = vec![0usize; p];
        loop {
            // rotations of a word trace the same cycle: solve only for the
            // lexicographically least rotation
            if !is_least_rotation(&word) {
                if !advance(&mut word, dual.n_maps()) {
                    break;
                }
                continue;
            }
            // rhs = sum_i M^{p-i+1} l_i
            let mut rhs = vec![Rat::zero(); d];
            for (i, &wi) in word.iter().enumerate() {
                for (r, v) in rhs.iter_mut().zip(&weights[i][wi]) {
                    *r += v;
                }
            }
            let x1 = system
                .solve(&rhs)
                .map_err(|_| Error::Computation("(I - M^p) singular; expansiveness violated".into()))?;

            // orbit; skip words whose orbit repeats (non-primitive cycles)
            let mut pts = vec![x1.clone()];
            let mut ok = true;
            for (i, &wi) in word.iter().enumerate().take(p - 1) {
                let next = dual.apply_rat(wi, &pts[i]);
                if pts.contains(&next) {
                    ok = false;
                    break;
                }
                pts.push(next);
            }
            if ok {
                let reduced: Vec<Vec<Rat>> = if mod_one {
                    pts.iter()
                        .map(|p| p.iter().map(|c| c - c.floor()).collect())
                        .collect()
                } else {
                    pts.clone()
                };
                let points: Vec<RationalVector> =
                    reduced.iter().map(|p| RationalVector::from_rats(p)).collect();
                let mut distinct = points.clone();
                distinct.sort();
                distinct.dedup();
                // mod-one reduction can collapse the orbit onto a shorter
                // cycle already found; skip those
                if distinct.len() == points.len() {
                    let canon = canonical_rotation(&points);
                    if seen.insert(canon.0.clone()) {
                        let rotated_word = rotate(&word, canon.1);
                        let is_extreme = points
                            .iter()
                            .map(|pt| m.is_extreme_at(pt))
                            .collect::<Result<Vec<bool>>>()?
                            .into_iter()
                            .all(|b| b);
                        if include_all || is_extreme {
                            out.push(Cycle {
                                points: canon.0,
                                word: rotated_word
                                    .iter()
                                    .map(|&wi| dual.digits.points()[wi].clone())
                                    .collect(),
                                is_extreme,
                            });
                        }
                    }
                }
            }

            if !advance(&mut word, dual.n_maps()) {
                break;
            }
        }
    }
    out.sort_by(|a, b| a.points.cmp(&b.points).then(a.period().cmp(&b.period())));
    Ok(out)
}

/// Odometer step through words over an n-letter alphabet; false on wrap.
fn advance(word: &mut [usize], n: usize) -> bool {
    for w in word.iter_mut().rev() {
        *w += 1;
        if *w == n {
            *w = 0;
        } else {
            return true;
        }
    }
    false
}

/// True when no rotation of the word is lexicographically smaller.
fn is_least_rotation(word: &[usize]) -> bool {
    let p = word.len();
    'outer: for r in 1..p {
        for i in 0..p {
            match word[i].cmp(&word[(i + r) % p]) {
                std::cmp::Ordering::Less => continue 'outer,
                std::cmp::Ordering::Greater => return false,
                std::cmp::Ordering::Equal => {}
            }
        }
    }
    true
}

fn canonical_rotation(points: &[RationalVector]) -> (Vec<RationalVector>, usize) {
    let least = points
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.cmp(b))
        .map(|(i, _)| i)
        .unwrap();
    let rotated: Vec<RationalVector> = (0..points.len())
        .map(|i| points[(least + i) % points.len()].clone())
        .collect();
    (rotated, least)
}

fn rotate(word: &[usize], by: usize) -> Vec<usize> {
    (0..word.len()).map(|i| word[(by + i) % word.len()]).collect()
}
