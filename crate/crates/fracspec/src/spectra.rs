//! Leveled generation of candidate frequency sets and verification of the
//! resulting exponential families: orthogonality via certified Gram entries
//! and completeness via a monotone partial-sum scan.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::cycles::Cycle;
use crate::error::{Error, Result};
use crate::fourier::{exp_inner_product, h_function_partial};
use crate::ifs::{check_cap, AffineIfs, DigitSet, ExpansiveIntMatrix};

/// Default cap on the number of frequencies carried into a full Gram matrix.
pub const GRAM_CAP: usize = 256;

/// Where an element came from: the index of the seeding cycle and the digit
/// word applied to the (negated) cycle point, outermost digit last.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Provenance {
    pub cycle_index: usize,
    pub word: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumElement {
    pub vector: Vec<i64>,
    /// generation depth at which the element first appears (seeds are 0)
    pub level: u32,
    pub provenance: Provenance,
}

/// A truncated frequency set, closed under lambda -> A^T lambda + l up to
/// the stated level, together with the data needed to regenerate it deeper.
#[derive(Clone, Debug)]
pub struct SpectrumSet {
    elements: Vec<SpectrumElement>,
    level: u32,
    matrix: ExpansiveIntMatrix,
    digits_l: DigitSet,
    seeds: Vec<Vec<i64>>,
}

impl SpectrumSet {
    pub fn elements(&self) -> &[SpectrumElement] {
        &self.elements
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Sorted frequency vectors without provenance.
    pub fn vectors(&self) -> Vec<Vec<i64>> {
        self.elements.iter().map(|e| e.vector.clone()).collect()
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        self.elements.iter().any(|e| e.vector == v)
    }

    /// The same set regenerated at a different truncation level.
    pub fn at_level(&self, level: u32) -> Result<SpectrumSet> {
        closure(&self.matrix, &self.digits_l, &self.seeds, level)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "level": self.level,
            "count": self.len(),
            "elements": self.elements.iter().map(|e| json!({
                "vector": e.vector,
                "level": e.level,
                "cycle_index": e.provenance.cycle_index,
                "word": e.provenance.word,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Breadth-first closure of the seeds under lambda -> A^T lambda + l,
/// l ranging over `digits_l`. A set at level n contains every word of
/// length <= n + 1 applied to a seed, plus the seeds themselves; duplicates
/// keep the lexicographically least (cycle_index, word) provenance.
fn closure(
    a: &ExpansiveIntMatrix,
    digits_l: &DigitSet,
    seeds: &[Vec<i64>],
    level: u32,
) -> Result<SpectrumSet> {
    let steps = level as usize + 1;
    let per_seed = (digits_l.len() as u128)
        .checked_pow(steps as u32)
        .ok_or_else(|| Error::Computation("level overflow".into()))?;
    check_cap(per_seed.saturating_mul(seeds.len() as u128))?;

    let mut best: BTreeMap<Vec<i64>, (u32, Provenance)> = BTreeMap::new();
    let mut insert = |v: Vec<i64>, lvl: u32, prov: Provenance| match best.entry(v) {
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert((lvl, prov));
        }
        std::collections::btree_map::Entry::Occupied(mut e) => {
            let cur = e.get_mut();
            if (lvl, &prov) < (cur.0, &cur.1) {
                *cur = (lvl, prov);
            }
        }
    };

    for (ci, seed) in seeds.iter().enumerate() {
        insert(
            seed.clone(),
            0,
            Provenance { cycle_index: ci, word: vec![] },
        );
        let mut frontier = vec![(seed.clone(), Vec::<Vec<i64>>::new())];
        for depth in 1..=steps {
            let mut next = Vec::with_capacity(frontier.len() * digits_l.len());
            for (v, word) in &frontier {
                let av = a.transpose_mul_int_vec(v);
                for l in digits_l.points() {
                    let w: Vec<i64> = av.iter().zip(l).map(|(&x, &y)| x + y).collect();
                    let mut word2 = word.clone();
                    word2.push(l.clone());
                    insert(
                        w.clone(),
                        depth as u32,
                        Provenance { cycle_index: ci, word: word2.clone() },
                    );
                    next.push((w, word2));
                }
            }
            frontier = next;
        }
    }

    let elements = best
        .into_iter()
        .map(|(vector, (level, provenance))| SpectrumElement { vector, level, provenance })
        .collect();
    Ok(SpectrumSet {
        elements,
        level,
        matrix: a.clone(),
        digits_l: digits_l.clone(),
        seeds: seeds.to_vec(),
    })
}

/// Candidate frequency set Lambda_0: all sums sum_{k=0}^{level} (A^T)^k l_k
/// with l_k in L.
pub fn lambda0(a: &ExpansiveIntMatrix, digits_l: &DigitSet, level: u32) -> Result<SpectrumSet> {
    if !digits_l.contains_zero() {
        return Err(Error::Invalid("frequency digit set must contain 0".into()));
    }
    if digits_l.dim() != a.dim() {
        return Err(Error::Invalid("digit dimension does not match matrix".into()));
    }
    closure(a, digits_l, &[vec![0; a.dim()]], level)
}

/// Completed frequency set: breadth-first closure from the negated points of
/// the given cycles. Cycle points must be integer vectors; a non-integer
/// extreme cycle point is surfaced as an error rather than silently rounded.
pub fn spectrum_from_cycles(
    a: &ExpansiveIntMatrix,
    digits_l: &DigitSet,
    cycles: &[Cycle],
    level: u32,
) -> Result<SpectrumSet> {
    if cycles.is_empty() {
        return Err(Error::Invalid(
            "cycle list must at least contain the trivial cycle".into(),
        ));
    }
    let mut seeds = Vec::new();
    for c in cycles {
        for p in &c.points {
            if !p.is_integer() {
                return Err(Error::Invalid(format!(
                    "non-integer cycle point {p}; cannot seed an integer frequency set"
                )));
            }
            let neg: Vec<i64> = p
                .to_rats()
                .iter()
                .map(|r| {
                    let i = -r.to_integer();
                    i64::try_from(&i).map_err(|_| Error::Computation("seed overflow".into()))
                })
                .collect::<Result<_>>()?;
            if !seeds.contains(&neg) {
                seeds.push(neg);
            }
        }
    }
    closure(a, digits_l, &seeds, level)
}

#[derive(Clone, Debug)]
pub struct GramReport {
    pub n: usize,
    /// largest |entry| over off-diagonal pairs
    pub max_offdiag: f64,
    /// off-diagonal entries with a certified vanishing product factor
    pub exact_zero_count: usize,
    /// off-diagonal entries numerically zero but without a certificate
    pub numeric_zero_count: usize,
    /// pairs (i, j, |value|) that are not zero in either sense
    pub nonzero_pairs: Vec<(usize, usize, f64)>,
    /// diagonal entries are exactly 1 by construction
    pub max_diag_deviation: f64,
}

impl GramReport {
    pub fn all_orthogonal(&self) -> bool {
        self.nonzero_pairs.is_empty()
    }

    pub fn all_certified(&self) -> bool {
        self.nonzero_pairs.is_empty() && self.numeric_zero_count == 0
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "max_offdiag": self.max_offdiag,
            "exact_zero_count": self.exact_zero_count,
            "numeric_zero_count": self.numeric_zero_count,
            "nonzero_pairs": self.nonzero_pairs.iter().map(|(i, j, v)| json!([i, j, v])).collect::<Vec<_>>(),
            "max_diag_deviation": self.max_diag_deviation,
            "orthogonal": self.all_orthogonal(),
        })
    }
}

/// Full Gram matrix of the exponentials indexed by the set, entry by entry
/// through the certified transform evaluator.
pub fn verify_orthogonality(ifs: &AffineIfs, set: &SpectrumSet) -> Result<GramReport> {
    if set.len() > GRAM_CAP {
        return Err(Error::EnumerationCap { needed: set.len() as u128, cap: GRAM_CAP as u64 });
    }
    let vs = set.vectors();
    let mut max_offdiag = 0.0f64;
    let mut exact = 0usize;
    let mut numeric = 0usize;
    let mut nonzero = Vec::new();
    for i in 0..vs.len() {
        for j in (i + 1)..vs.len() {
            let e = exp_inner_product(ifs, &vs[i], &vs[j])?;
            let mag = e.value.norm();
            max_offdiag = max_offdiag.max(mag);
            if e.exact_zero.is_some() {
                exact += 1;
            } else if e.numeric_zero_uncertified {
                numeric += 1;
            } else {
                nonzero.push((i, j, mag));
            }
        }
    }
    Ok(GramReport {
        n: vs.len(),
        max_offdiag,
        exact_zero_count: exact,
        numeric_zero_count: numeric,
        nonzero_pairs: nonzero,
        max_diag_deviation: 0.0,
    })
}

/// Partial-sum table: rows are grid points, columns follow the level
/// schedule; entry = sum over the set at that level of |mu_hat(x+lambda)|^2.
#[derive(Clone, Debug)]
pub struct CompletenessTable {
    pub grid: Vec<Vec<f64>>,
    pub levels: Vec<u32>,
    pub set_sizes: Vec<usize>,
    /// values[row][col] for grid point `row` at level column `col`
    pub values: Vec<Vec<f64>>,
}

impl CompletenessTable {
    /// Partial sums can only grow as more frequencies enter.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.values
            .iter()
            .all(|row| row.windows(2).all(|w| w[1] >= w[0] - slack))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().flatten().cloned().fold(0.0, f64::max)
    }

    pub fn min_final(&self) -> f64 {
        self.values
            .iter()
            .filter_map(|row| row.last().cloned())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x");
        for l in &self.levels {
            out.push_str(&format!(",level_{l}"));
        }
        out.push('\n');
        for (x, row) in self.grid.iter().zip(&self.values) {
            let coords: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
            out.push_str(&coords.join(";"));
            for v in row {
                out.push_str(&format!(",{v:.12}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluate the partial sums of |mu_hat|^2 over the set truncated at each
/// level in the schedule, at each grid point. Orthogonality of the set is
/// checked first; a non-orthogonal set makes the sums meaningless.
pub fn verify_completeness(
    ifs: &AffineIfs,
    set: &SpectrumSet,
    grid: &[Vec<f64>],
    level_schedule: &[u32],
) -> Result<CompletenessTable> {
    let gram = verify_orthogonality(ifs, set)?;
    if !gram.all_orthogonal() {
        return Err(Error::Invalid(format!(
            "set is not orthogonal ({} nonzero Gram pairs); completeness scan aborted",
            gram.nonzero_pairs.len()
        )));
    }
    let mut levels = level_schedule.to_vec();
    levels.sort_unstable();
    levels.dedup();
    let mut set_sizes = Vec::with_capacity(levels.len());
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(levels.len());
    for &lvl in &levels {
        let s = set.at_level(lvl)?;
        set_sizes.push(s.len());
        let vecs = s.vectors();
        let mut col = Vec::with_capacity(grid.len());
        for x in grid {
            col.push(h_function_partial(ifs, &vecs, x)?);
        }
        columns.push(col);
    }
    let values: Vec<Vec<f64>> = (0..grid.len())
        .map(|r| columns.iter().map(|c| c[r]).collect())
        .collect();
    Ok(CompletenessTable { grid: grid.to_vec(), levels, set_sizes, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::Orientation;

    fn scalars(set: &SpectrumSet) -> Vec<i64> {
        set.vectors().iter().map(|v| v[0]).collect()
    }

    fn scale4_ifs(b: &[i64]) -> AffineIfs {
        AffineIfs::new(
            ExpansiveIntMatrix::scalar(4).unwrap(),
            DigitSet::from_scalars(b).unwrap(),
            Orientation::Forward,
        )
        .unwrap()
    }

    #[test]
    fn lambda0_scale4_level2() {
        let s = lambda0(
            &ExpansiveIntMatrix::scalar(4).unwrap(),
            &DigitSet::from_scalars(&[0, 1]).unwrap(),
            2,
        )
        .unwrap();
        assert_eq!(scalars(&s), vec![0, 1, 4, 5, 16, 17, 20, 21]);
    }

    #[test]
    fn lambda0_trivial_digit_set() {
        let s = lambda0(
            &ExpansiveIntMatrix::scalar(5).unwrap(),
            &DigitSet::from_scalars(&[0]).unwrap(),
            7,
        )
        .unwrap();
        assert_eq!(scalars(&s), vec![0]);
    }

    #[test]
    fn lambda0_scale4_l03_level1() {
        let s = lambda0(
            &ExpansiveIntMatrix::scalar(4).unwrap(),
            &DigitSet::from_scalars(&[0, 3]).unwrap(),
            1,
        )
        .unwrap();
        assert_eq!(scalars(&s), vec![0, 3, 12, 15]);
    }

    #[test]
    fn disjoint_union_decomposition() {
        // Lambda_0 at level n equals the disjoint union of l + A^T * (level n-1 set)
        let a = ExpansiveIntMatrix::scalar(4).unwrap();
        let l = DigitSet::from_scalars(&[0, 1]).unwrap();
        for n in 1..=4u32 {
            let big = lambda0(&a, &l, n).unwrap();
            let small = lambda0(&a, &l, n - 1).unwrap();
            let mut parts: Vec<i64> = Vec::new();
            for digit in l.points() {
                for v in small.vectors() {
                    parts.push(4 * v[0] + digit[0]);
                }
            }
            parts.sort_unstable();
            let mut dedup = parts.clone();
            dedup.dedup();
            assert_eq!(parts, dedup, "union must be disjoint");
            assert_eq!(parts, scalars(&big));
        }
    }

    #[test]
    fn trivial_cycle_reproduces_lambda0() {
        let a = ExpansiveIntMatrix::scalar(4).unwrap();
        let l = DigitSet::from_scalars(&[0, 1]).unwrap();
        let trivial = Cycle {
            points: vec![crate::rational::RationalVector::from_ints(&[0])],
            word: vec![vec![0]],
            is_extreme: true,
        };
        let from_cycles = spectrum_from_cycles(&a, &l, &[trivial], 2).unwrap();
        assert_eq!(scalars(&from_cycles), scalars(&lambda0(&a, &l, 2).unwrap()));
    }

    #[test]
    fn two_seed_closure_scale4_l03() {
        let a = ExpansiveIntMatrix::scalar(4).unwrap();
        let l = DigitSet::from_scalars(&[0, 3]).unwrap();
        let c0 = Cycle {
            points: vec![crate::rational::RationalVector::from_ints(&[0])],
            word: vec![vec![0]],
            is_extreme: true,
        };
        let c1 = Cycle {
            points: vec![crate::rational::RationalVector::from_ints(&[1])],
            word: vec![vec![3]],
            is_extreme: true,
        };
        let s = spectrum_from_cycles(&a, &l, &[c0, c1], 2).unwrap();
        let mut expect = vec![0, 3, 12, 15, 48, 51, 60, 63];
        expect.extend_from_slice(&[-1, -4, -13, -16, -49, -52, -61, -64]);
        expect.sort_unstable();
        assert_eq!(scalars(&s), expect);
    }

    #[test]
    fn non_integer_seed_rejected() {
        let a = ExpansiveIntMatrix::scalar(2).unwrap();
        let l = DigitSet::from_scalars(&[0, 1]).unwrap();
        let c = Cycle {
            points: vec![crate::rational::RationalVector::new(
                vec![1.into()],
                3.into(),
            )
            .unwrap()],
            word: vec![vec![1]],
            is_extreme: true,
        };
        assert!(spectrum_from_cycles(&a, &l, &[c], 1).is_err());
    }

    #[test]
    fn gram_scale4_all_exact_zeros() {
        let ifs = scale4_ifs(&[0, 2]);
        let s = lambda0(
            &ExpansiveIntMatrix::scalar(4).unwrap(),
            &DigitSet::from_scalars(&[0, 1]).unwrap(),
            2,
        )
        .unwrap();
        let report = verify_orthogonality(&ifs, &s).unwrap();
        assert_eq!(report.n, 8);
        assert_eq!(report.exact_zero_count, 28);
        assert_eq!(report.numeric_zero_count, 0);
        assert!(report.nonzero_pairs.is_empty());
        assert!(report.max_offdiag <= 1e-12);
    }

    #[test]
    fn gram_singleton() {
        let ifs = scale4_ifs(&[0, 2]);
        let s = lambda0(
            &ExpansiveIntMatrix::scalar(4).unwrap(),
            &DigitSet::from_scalars(&[0]).unwrap(),
            1,
        )
        .unwrap();
        let report = verify_orthogonality(&ifs, &s).unwrap();
        assert_eq!(report.n, 1);
        assert!(report.all_certified());
    }

    #[test]
    fn completeness_scan_scale4() {
        let ifs = scale4_ifs(&[0, 2]);
        let s = lambda0(
            &ExpansiveIntMatrix::scalar(4).unwrap(),
            &DigitSet::from_scalars(&[0, 1]).unwrap(),
            2,
        )
        .unwrap();
        let grid: Vec<Vec<f64>> = vec![vec![0.3], vec![0.0], vec![0.71]];
        let table =
            verify_completeness(&ifs, &s, &grid, &[2, 3, 4, 5, 6, 7, 8]).unwrap();
        assert!(table.is_monotone(1e-12));
        assert!(table.max_value() <= 1.0 + 1e-8);
        assert!(table.min_final() >= 1.0 - 1e-3);
        // x = 0 is a negated frequency: the level-2 partial sum is already 1
        assert!((table.values[1][0] - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn completeness_plateau_below_one_for_middle_third_pair() {
        // scale-3 pair {0, 3/4} is orthogonal but cannot be completed, so
        // h stays strictly below 1; the pair is non-integer, so probe the
        // partial sum directly
        let ifs = AffineIfs::new(
            ExpansiveIntMatrix::scalar(3).unwrap(),
            DigitSet::from_scalars(&[0, 2]).unwrap(),
            Orientation::Forward,
        )
        .unwrap();
        let x = [0.2];
        let mut sum = 0.0;
        for sh in [0.0, 0.75] {
            sum += crate::fourier::mu_hat(&ifs, &[x[0] + sh], 1e-12)
                .unwrap()
                .value
                .norm_sqr();
        }
        // independent cosine-product evaluation gives 0.9136...
        assert!((sum - 0.91360).abs() < 1e-4);
        assert!(sum < 0.99);
    }

    #[test]
    fn gram_cap_enforced() {
        let ifs = scale4_ifs(&[0, 2]);
        let s = lambda0(
            &ExpansiveIntMatrix::scalar(4).unwrap(),
            &DigitSet::from_scalars(&[0, 1]).unwrap(),
            8,
        )
        .unwrap();
        assert!(s.len() > GRAM_CAP);
        assert!(matches!(
            verify_orthogonality(&ifs, &s),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn provenance_words_regenerate_elements() {
        let a = ExpansiveIntMatrix::scalar(4).unwrap();
        let l = DigitSet::from_scalars(&[0, 3]).unwrap();
        let c0 = Cycle {
            points: vec![crate::rational::RationalVector::from_ints(&[0])],
            word: vec![vec![0]],
            is_extreme: true,
        };
        let c1 = Cycle {
            points: vec![crate::rational::RationalVector::from_ints(&[1])],
            word: vec![vec![3]],
            is_extreme: true,
        };
        let seeds = [0i64, -1];
        let s = spectrum_from_cycles(&a, &l, &[c0, c1], 3).unwrap();
        for e in s.elements() {
            let mut v = seeds[e.provenance.cycle_index];
            for digit in &e.provenance.word {
                v = 4 * v + digit[0];
            }
            assert_eq!(v, e.vector[0]);
            assert_eq!(e.level as usize, e.provenance.word.len());
        }
    }
}
