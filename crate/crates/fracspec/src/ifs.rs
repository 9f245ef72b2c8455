//! Affine iterated function systems: expansive integer matrices, digit sets,
//! attractor approximants and quadrature for the invariant measure.

use num::bigint::BigInt;
use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{frac_part, Rat, RatMatrix, RationalVector};

/// Default cap on word enumerations (quadrature points, attractor boxes,
/// cycle words). Overridable through the `FS_ENUM_CAP` environment variable.
pub const DEFAULT_ENUM_CAP: u64 = 1_000_000;

pub fn enum_cap() -> u64 {
    std::env::var("FS_ENUM_CAP")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_ENUM_CAP)
}

pub(crate) fn check_cap(needed: u128) -> Result<()> {
    let cap = enum_cap();
    if needed > cap as u128 {
        return Err(Error::EnumerationCap { needed, cap });
    }
    Ok(())
}

/// A d x d integer matrix, all of whose eigenvalues have absolute value
/// strictly greater than one. Exact inverses are cached at construction.
#[derive(Clone, Debug)]
pub struct ExpansiveIntMatrix {
    entries: Vec<Vec<i64>>,
    dim: usize,
    det_abs: u64,
    inverse: RatMatrix,
    transpose_inverse: RatMatrix,
}

impl ExpansiveIntMatrix {
    pub fn new(entries: Vec<Vec<i64>>) -> Result<Self> {
        let dim = entries.len();
        if dim == 0 || entries.iter().any(|r| r.len() != dim) {
            return Err(Error::Invalid("matrix must be square and nonempty".into()));
        }
        let flat: Vec<f64> = entries
            .iter()
            .flat_map(|r| r.iter().map(|&e| e as f64))
            .collect();
        let m = nalgebra::DMatrix::from_row_slice(dim, dim, &flat);
        for ev in m.complex_eigenvalues().iter() {
            let a = ev.norm();
            if a <= 1.0 + 1e-9 {
                return Err(Error::NotExpansive(a));
            }
        }
        let exact = RatMatrix::from_int_rows(&entries);
        let det = exact.determinant();
        debug_assert!(det.denom() == &BigInt::from(1));
        let det_abs = det.numer().abs();
        let det_abs: u64 = det_abs
            .try_into()
            .map_err(|_| Error::Invalid("determinant too large".into()))?;
        let inverse = exact.inverse()?;
        let transpose_inverse = exact.transpose().inverse()?;
        Ok(ExpansiveIntMatrix {
            entries,
            dim,
            det_abs,
            inverse,
            transpose_inverse,
        })
    }

    /// Scalar convenience constructor for d = 1.
    pub fn scalar(a: i64) -> Result<Self> {
        Self::new(vec![vec![a]])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Vec<i64>] {
        &self.entries
    }

    pub fn det_abs(&self) -> u64 {
        self.det_abs
    }

    pub fn inverse(&self) -> &RatMatrix {
        &self.inverse
    }

    pub fn transpose_inverse(&self) -> &RatMatrix {
        &self.transpose_inverse
    }

    pub fn mul_int_vec(&self, v: &[i64]) -> Vec<i64> {
        (0..self.dim)
            .map(|i| {
                self.entries[i]
                    .iter()
                    .zip(v)
                    .map(|(&a, &x)| a * x)
                    .sum()
            })
            .collect()
    }

    pub fn transpose_mul_int_vec(&self, v: &[i64]) -> Vec<i64> {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.entries[i][j] * v[i]).sum())
            .collect()
    }

    /// True when `a` and `b` are congruent modulo A^T Z^d.
    pub fn congruent_mod_transpose(&self, a: &[i64], b: &[i64]) -> bool {
        let diff: Vec<Rat> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Rat::from_integer(BigInt::from(x - y)))
            .collect();
        self.transpose_inverse
            .mul_vec(&diff)
            .iter()
            .all(|r| frac_part(r).is_zero())
    }
}

/// A finite set of integer digit vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitSet {
    points: Vec<Vec<i64>>,
    dim: usize,
}

impl DigitSet {
    pub fn new(points: Vec<Vec<i64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("digit set must be nonempty".into()));
        }
        let dim = points[0].len();
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(Error::Invalid("digit vectors must share a positive dimension".into()));
        }
        let mut sorted = points.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != points.len() {
            return Err(Error::Invalid("digit set contains duplicate points".into()));
        }
        Ok(DigitSet { points, dim })
    }

    pub fn from_scalars(v: &[i64]) -> Result<Self> {
        Self::new(v.iter().map(|&x| vec![x]).collect())
    }

    pub fn points(&self) -> &[Vec<i64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains_zero(&self) -> bool {
        self.points.iter().any(|p| p.iter().all(|&x| x == 0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// tau_b(x) = A^-1 (x + b)
    Forward,
    /// sigma_l(x) = (A^T)^-1 (x + l)
    Dual,
}

/// An affine IFS over an expansive integer matrix and a digit set.
#[derive(Clone, Debug)]
pub struct AffineIfs {
    pub matrix: ExpansiveIntMatrix,
    pub digits: DigitSet,
    pub orientation: Orientation,
}

impl AffineIfs {
    pub fn new(matrix: ExpansiveIntMatrix, digits: DigitSet, orientation: Orientation) -> Result<Self> {
        if matrix.dim() != digits.dim() {
            return Err(Error::Invalid(format!(
                "matrix dimension {} does not match digit dimension {}",
                matrix.dim(),
                digits.dim()
            )));
        }
        Ok(AffineIfs {
            matrix,
            digits,
            orientation,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn n_maps(&self) -> usize {
        self.digits.len()
    }

    fn contraction(&self) -> &RatMatrix {
        match self.orientation {
            Orientation::Forward => self.matrix.inverse(),
            Orientation::Dual => self.matrix.transpose_inverse(),
        }
    }

    /// Apply the branch map for digit index `i` exactly.
    pub fn apply_rat(&self, i: usize, x: &[Rat]) -> Vec<Rat> {
        let b = &self.digits.points()[i];
        let shifted: Vec<Rat> = x
            .iter()
            .zip(b)
            .map(|(xi, &bi)| xi + Rat::from_integer(BigInt::from(bi)))
            .collect();
        self.contraction().mul_vec(&shifted)
    }

    pub fn apply_f64(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let m = self.contraction().to_f64();
        let d = self.dim();
        let b = &self.digits.points()[i];
        (0..d)
            .map(|r| {
                (0..d)
                    .map(|c| m[r * d + c] * (x[c] + b[c] as f64))
                    .sum()
            })
            .collect()
    }
}

/// The dual system sigma_l(x) = (A^T)^-1 (x + l).
pub fn dual_ifs(matrix: &ExpansiveIntMatrix, l: &DigitSet) -> Result<AffineIfs> {
    AffineIfs::new(matrix.clone(), l.clone(), Orientation::Dual)
}

/// Axis-aligned box. In d >= 2 the image of a box under an affine map is
/// reported as the bounding box of the vertex images; the union still
/// converges to the attractor in the Hausdorff metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AaBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AaBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::Invalid("empty or malformed box".into()));
        }
        Ok(AaBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn vertices(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|i| if mask >> i & 1 == 0 { self.lo[i] } else { self.hi[i] })
                    .collect()
            })
            .collect()
    }

    fn image_under(&self, ifs: &AffineIfs, branch: usize) -> AaBox {
        let d = self.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for v in self.vertices() {
            let w = ifs.apply_f64(branch, &v);
            for i in 0..d {
                lo[i] = lo[i].min(w[i]);
                hi[i] = hi[i].max(w[i]);
            }
        }
        AaBox { lo, hi }
    }
}

/// Images of `seed` under all depth-fold compositions of the IFS maps, in
/// lexicographic word order.
pub fn attractor_boxes(ifs: &AffineIfs, depth: u32, seed: &AaBox) -> Result<Vec<AaBox>> {
    if seed.dim() != ifs.dim() {
        return Err(Error::Invalid("seed box dimension mismatch".into()));
    }
    let n = ifs.n_maps() as u128;
    check_cap(n.checked_pow(depth).ok_or(Error::EnumerationCap {
        needed: u128::MAX,
        cap: enum_cap(),
    })?)?;
    let mut boxes = vec![seed.clone()];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(boxes.len() * ifs.n_maps());
        for b in &boxes {
            for branch in 0..ifs.n_maps() {
                next.push(b.image_under(ifs, branch));
            }
        }
        boxes = next;
    }
    Ok(boxes)
}

/// All points sum_{k=1..depth} A^-k b_k with equal weights N^-depth.
/// Word order is lexicographic, so output is deterministic.
pub fn measure_quadrature_points(ifs: &AffineIfs, depth: u32) -> Result<Vec<(Vec<f64>, f64)>> {
    if depth == 0 {
        return Err(Error::Invalid("quadrature depth must be >= 1".into()));
    }
    let n = ifs.n_maps() as u128;
    let total = n.checked_pow(depth).ok_or(Error::EnumerationCap {
        needed: u128::MAX,
        cap: enum_cap(),
    })?;
    check_cap(total)?;
    let weight = 1.0 / total as f64;
    let d = ifs.dim();
    // point of word (b_1.. b_depth) is tau_{b_1}(tau_{b_2}(... tau_{b_depth}(0)))
    let mut pts: Vec<Vec<f64>> = vec![vec![0.0; d]];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(pts.len() * ifs.n_maps());
        for branch in 0..ifs.n_maps() {
            for p in &pts {
                next.push(ifs.apply_f64(branch, p));
            }
        }
        pts = next;
    }
    Ok(pts.into_iter().map(|p| (p, weight)).collect())
}

/// JSON ingestion format for IFS specifications:
/// `{"A": [[..]], "B": [[..]], "L": [[..]]}` with all-integer entries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IfsSpec {
    #[serde(rename = "A")]
    pub a: Vec<Vec<i64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<i64>>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<Vec<i64>>>,
}

impl IfsSpec {
    /// Parse the JSON document; serde_json diagnostics carry line/column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("IFS spec: {e}")))
    }

    pub fn matrix(&self) -> Result<ExpansiveIntMatrix> {
        ExpansiveIntMatrix::new(self.a.clone())
    }

    pub fn digits_b(&self) -> Result<DigitSet> {
        DigitSet::new(self.b.clone())
    }

    pub fn digits_l(&self) -> Result<Option<DigitSet>> {
        self.l.clone().map(DigitSet::new).transpose()
    }

    pub fn forward_ifs(&self) -> Result<AffineIfs> {
        AffineIfs::new(self.matrix()?, self.digits_b()?, Orientation::Forward)
    }
}

/// Exact quadrature points as rationals; used where collisions must be
/// detected exactly (overlap probe).
pub fn quadrature_points_exact(ifs: &AffineIfs, depth: u32) -> Result<Vec<(Vec<usize>, RationalVector)>> {
    if depth == 0 {
        return Err(Error::Invalid("quadrature depth must be >= 1".into()));
    }
    let n = ifs.n_maps() as u128;
    check_cap(n.pow(depth))?;
    let d = ifs.dim();
    let zero: Vec<Rat> = vec![Rat::zero(); d];
    let mut acc: Vec<(Vec<usize>, Vec<Rat>)> = vec![(vec![], zero)];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(acc.len() * ifs.n_maps());
        for branch in 0..ifs.n_maps() {
            for (word, p) in &acc {
                let mut w = vec![branch];
                w.extend(word);
                next.push((w, ifs.apply_rat(branch, p)));
            }
        }
        acc = next;
    }
    Ok(acc
        .into_iter()
        .map(|(w, p)| (w, RationalVector::from_rats(&p)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn middle_third() -> AffineIfs {
        AffineIfs::new(
            ExpansiveIntMatrix::scalar(3).unwrap(),
            DigitSet::from_scalars(&[0, 2]).unwrap(),
            Orientation::Forward,
        )
        .unwrap()
    }

    #[test]
    fn rejects_non_expansive() {
        assert!(ExpansiveIntMatrix::scalar(1).is_err());
        assert!(ExpansiveIntMatrix::scalar(-1).is_err());
        assert!(ExpansiveIntMatrix::scalar(0).is_err());
        assert!(ExpansiveIntMatrix::new(vec![vec![2, 0], vec![0, 1]]).is_err());
    }

    #[test]
    fn exact_inverse() {
        let m = ExpansiveIntMatrix::new(vec![vec![2, 1], vec![0, 2]]).unwrap();
        let exact = RatMatrix::from_int_rows(m.entries());
        assert_eq!(exact.mul(m.inverse()), RatMatrix::identity(2));
        assert_eq!(m.det_abs(), 4);
    }

    #[test]
    fn attractor_boxes_middle_third_depth1() {
        let ifs = middle_third();
        let seed = AaBox::new(vec![0.0], vec![1.0]).unwrap();
        let boxes = attractor_boxes(&ifs, 1, &seed).unwrap();
        assert_eq!(boxes.len(), 2);
        assert!((boxes[0].lo[0] - 0.0).abs() < 1e-12 && (boxes[0].hi[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((boxes[1].lo[0] - 2.0 / 3.0).abs() < 1e-12 && (boxes[1].hi[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn attractor_boxes_middle_third_depth2() {
        let ifs = middle_third();
        let seed = AaBox::new(vec![0.0], vec![1.0]).unwrap();
        let boxes = attractor_boxes(&ifs, 2, &seed).unwrap();
        let mut los: Vec<f64> = boxes.iter().map(|b| b.lo[0]).collect();
        los.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [0.0, 2.0 / 9.0, 2.0 / 3.0, 8.0 / 9.0];
        for (got, want) in los.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn attractor_boxes_depth0_is_seed() {
        let ifs = middle_third();
        let seed = AaBox::new(vec![0.25], vec![0.75]).unwrap();
        assert_eq!(attractor_boxes(&ifs, 0, &seed).unwrap(), vec![seed]);
    }

    #[test]
    fn quadrature_scale4() {
        let ifs = AffineIfs::new(
            ExpansiveIntMatrix::scalar(4).unwrap(),
            DigitSet::from_scalars(&[0, 2]).unwrap(),
            Orientation::Forward,
        )
        .unwrap();
        let pts = measure_quadrature_points(&ifs, 1).unwrap();
        assert_eq!(pts.len(), 2);
        assert!((pts[0].0[0] - 0.0).abs() < 1e-15 && (pts[0].1 - 0.5).abs() < 1e-15);
        assert!((pts[1].0[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quadrature_middle_third_depth2() {
        let ifs = middle_third();
        let pts = measure_quadrature_points(&ifs, 2).unwrap();
        let mut xs: Vec<f64> = pts.iter().map(|(p, _)| p[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [0.0, 2.0 / 9.0, 2.0 / 3.0, 8.0 / 9.0];
        for (got, want) in xs.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
        let total: f64 = pts.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_refinement() {
        // every depth-n point is the truncation of a depth-(n+1) point
        let ifs = middle_third();
        let p2 = measure_quadrature_points(&ifs, 2).unwrap();
        let p3 = measure_quadrature_points(&ifs, 3).unwrap();
        for (p, _) in &p2 {
            assert!(p3.iter().any(|(q, _)| (q[0] - p[0]).abs() < 1.0 / 27.0 + 1e-12));
        }
    }

    #[test]
    fn dual_ifs_scale4() {
        let m = ExpansiveIntMatrix::scalar(4).unwrap();
        let l = DigitSet::from_scalars(&[0, 1]).unwrap();
        let dual = dual_ifs(&m, &l).unwrap();
        assert_eq!(dual.apply_f64(0, &[1.0]), vec![0.25]);
        assert_eq!(dual.apply_f64(1, &[1.0]), vec![0.5]);
        let l3 = DigitSet::from_scalars(&[0, 3]).unwrap();
        let d3 = dual_ifs(&m, &l3).unwrap();
        assert_eq!(d3.apply_f64(1, &[1.0]), vec![1.0]);
    }

    #[test]
    fn enumeration_cap_respected() {
        let ifs = middle_third();
        let err = measure_quadrature_points(&ifs, 60).unwrap_err();
        assert!(matches!(err, Error::EnumerationCap { .. }));
    }

    #[test]
    fn ifs_spec_json_errors_carry_location() {
        let err = IfsSpec::from_json(r#"{"A": [[3]], "B": [[0.5]]}"#).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line"), "diagnostic should name a line: {msg}");
    }

    #[test]
    fn invariance_equation_quadrature() {
        // |avg f(Ax) - (1/N) sum_b avg f(x+b)| shrinks with depth, for cubics
        let ifs = middle_third();
        let f = |x: f64| 1.0 + x - 2.0 * x * x + 0.5 * x * x * x;
        let defect = |depth: u32| -> f64 {
            let pts = measure_quadrature_points(&ifs, depth).unwrap();
            let lhs: f64 = pts.iter().map(|(p, w)| w * f(3.0 * p[0])).sum();
            let rhs: f64 = pts
                .iter()
                .map(|(p, w)| w * 0.5 * (f(p[0]) + f(p[0] + 2.0)))
                .sum();
            (lhs - rhs).abs()
        };
        assert!(defect(10) < defect(4));
        assert!(defect(10) < 1e-3);
    }

    #[test]
    fn contraction_diameter_decay() {
        // Hausdorff distance between iterations from two seeds decays geometrically
        let ifs = middle_third();
        let h1 = AaBox::new(vec![0.0], vec![1.0]).unwrap();
        let h2 = AaBox::new(vec![-2.0], vec![3.0]).unwrap();
        let dist = |n: u32| -> f64 {
            let b1 = attractor_boxes(&ifs, n, &h1).unwrap();
            let b2 = attractor_boxes(&ifs, n, &h2).unwrap();
            // boxes are in matching word order; bound Hausdorff distance by
            // the max endpoint deviation over matched pairs
            b1.iter()
                .zip(&b2)
                .map(|(a, b)| (a.lo[0] - b.lo[0]).abs().max((a.hi[0] - b.hi[0]).abs()))
                .fold(0.0, f64::max)
        };
        let (d2, d5) = (dist(2), dist(5));
        assert!(d5 < d2 * (1.0 / 3.0_f64).powi(2));
    }
}
