//! Finite matrix realization of the transfer operator
//! (R f)(x) = sum_{l in branches} |m((A^T)^-1(x+l))|^2 f((A^T)^-1(x+l))
//! on an invariant window of integer frequencies, with eigenvalue-1
//! eigenspace analysis and the two classical orthonormality tests.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::cycles::{find_cycles, Cycle};
use crate::error::{Error, Result};
use crate::filters::{qmf_defect, sum_of_unit_roots_is_zero, TrigPolynomial};
use crate::ifs::{dual_ifs, DigitSet, ExpansiveIntMatrix};
use crate::rational::{Rat, RationalVector};

/// Hard cap on the invariant window size.
pub const WINDOW_CAP: usize = 4096;

/// Default tolerance for counting eigenvalues at 1.
pub const EIGEN_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct TransferMatrix {
    /// sorted integer frequencies spanning the invariant subspace
    window: Vec<Vec<i64>>,
    /// entries[row v][col k]: coefficient of e_v in R e_k
    entries: DMatrix<Complex64>,
    filter: TrigPolynomial,
    scale: ExpansiveIntMatrix,
    branches: DigitSet,
}

/// In expanded form R e_k = sum_j c_j S(v) e_v over v = (A^T)^-1 (j + k),
/// where c are the coefficients of |m|^2 and S(v) = sum_l e^{2 pi i v.l}.
/// Integer v always gives S(v) = |branches|; for a complete residue system
/// the character sum kills every non-integer v, so the integer lattice is
/// invariant. For fewer branches (a Hadamard-pair digit set) invariance can
/// fail frequency by frequency; frequencies whose image provably leaks off
/// the lattice are pruned, and each retained leak-free status is certified
/// by an exact root-of-unity sum.
pub fn build_transfer_matrix(
    m: &TrigPolynomial,
    a: &ExpansiveIntMatrix,
    branches: &DigitSet,
) -> Result<TransferMatrix> {
    let d = a.dim();
    if m.dim() != d || branches.dim() != d {
        return Err(Error::Invalid("dimension mismatch in transfer matrix".into()));
    }
    let n_br = branches.len() as u64;
    let det = a.det_abs();
    if n_br > det {
        return Err(Error::Invalid(format!(
            "{n_br} branches exceed |det A| = {det}"
        )));
    }
    let complete = n_br == det;
    if complete {
        // distinct residues mod A^T Z^d
        for i in 0..branches.len() {
            for j in (i + 1)..branches.len() {
                if a.congruent_mod_transpose(&branches.points()[i], &branches.points()[j]) {
                    return Err(Error::Invalid(
                        "branch digits do not form a complete residue system".into(),
                    ));
                }
            }
        }
    }

    let c = m.mod_squared();
    let supp: Vec<Vec<i64>> = c.coeffs().keys().cloned().collect();

    // seed window: in d = 1 the fixed-point bound |k| <= D/(|A|-1) is exact;
    // in higher dimension start from the support and let the closure grow it
    let mut window: Vec<Vec<i64>> = if d == 1 {
        let dmax = c.degree();
        let abs_a = a.entries()[0][0].unsigned_abs() as i64;
        let r = (dmax + abs_a - 2) / (abs_a - 1);
        (-r..=r).map(|k| vec![k]).collect()
    } else {
        let mut w = supp.clone();
        let zero = vec![0i64; d];
        if !w.contains(&zero) {
            w.push(zero);
        }
        w
    };
    window.sort();

    let at_inv = a.transpose_inverse();
    // image of k under one frequency-transfer step: integer targets, plus a
    // leak flag when some non-integer target has an uncertified character sum
    let step = |k: &[i64]| -> Result<(Vec<Vec<i64>>, bool)> {
        let mut targets = Vec::new();
        let mut leaks = false;
        for j in &supp {
            let sum: Vec<Rat> = j
                .iter()
                .zip(k)
                .map(|(&a_, &b_)| Rat::from_integer((a_ + b_).into()))
                .collect();
            let v = at_inv.mul_vec(&sum);
            let vr = RationalVector::from_rats(&v);
            if vr.is_integer() {
                let vi: Vec<i64> = v
                    .iter()
                    .map(|r| {
                        i64::try_from(&r.to_integer())
                            .map_err(|_| Error::Computation("frequency overflow".into()))
                    })
                    .collect::<Result<_>>()?;
                targets.push(vi);
            } else if !complete {
                let qs: Vec<Rat> = branches
                    .points()
                    .iter()
                    .map(|l| vr.dot_int(l))
                    .collect();
                if sum_of_unit_roots_is_zero(&qs) != Some(true) {
                    leaks = true;
                }
            }
        }
        Ok((targets, leaks))
    };

    // close under integer images
    loop {
        let mut added = false;
        let current = window.clone();
        for k in &current {
            let (targets, _) = step(k)?;
            for t in targets {
                if !window.contains(&t) {
                    window.push(t);
                    added = true;
                }
            }
        }
        if window.len() > WINDOW_CAP {
            return Err(Error::EnumerationCap {
                needed: window.len() as u128,
                cap: WINDOW_CAP as u64,
            });
        }
        if !added {
            break;
        }
    }

    // prune frequencies whose image leaks off the lattice (no-op for a
    // complete residue system); cascades because pruning shrinks the window
    loop {
        let mut pruned = false;
        let current = window.clone();
        for k in &current {
            let (targets, leaks) = step(k)?;
            if leaks || targets.iter().any(|t| !window.contains(t)) {
                window.retain(|w| w != k);
                pruned = true;
            }
        }
        if !pruned {
            break;
        }
    }
    let zero = vec![0i64; d];
    if !window.contains(&zero) {
        return Err(Error::Computation(
            "constant frequency pruned: transfer operator has no lattice-invariant window".into(),
        ));
    }
    window.sort();

    // entry: coefficient of e_v in R e_k is S(v) * c_{A^T v - k} with
    // S(v) = |branches| on integer v
    let n = window.len();
    let mut entries = DMatrix::<Complex64>::zeros(n, n);
    let s = Complex64::new(n_br as f64, 0.0);
    for (col, k) in window.iter().enumerate() {
        for (row, v) in window.iter().enumerate() {
            let atv = a.transpose_mul_int_vec(v);
            let j: Vec<i64> = atv.iter().zip(k).map(|(&x, &y)| x - y).collect();
            if let Some(&cj) = c.coeffs().get(&j) {
                entries[(row, col)] = s * cj;
            }
        }
    }

    Ok(TransferMatrix {
        window,
        entries,
        filter: m.clone(),
        scale: a.clone(),
        branches: branches.clone(),
    })
}

impl TransferMatrix {
    pub fn window(&self) -> &[Vec<i64>] {
        &self.window
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.window.len()
    }

    pub fn filter(&self) -> &TrigPolynomial {
        &self.filter
    }

    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        self.window.iter().position(|w| w == k)
    }

    /// Apply the matrix to a coefficient vector indexed like the window.
    pub fn apply(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        if coeffs.len() != self.window.len() {
            return Err(Error::Invalid("coefficient vector length mismatch".into()));
        }
        let v = DVector::from_column_slice(coeffs);
        Ok((&self.entries * v).iter().cloned().collect())
    }

    /// Coefficient vector of the constant function 1.
    pub fn constant_vector(&self) -> Vec<Complex64> {
        let mut v = vec![Complex64::ZERO; self.window.len()];
        if let Some(i) = self.index_of(&vec![0; self.filter.dim()]) {
            v[i] = Complex64::ONE;
        }
        v
    }

    /// max |T.1 - 1| over coefficients; zero exactly when the constant
    /// function is fixed, i.e. when the filter satisfies the QMF identity.
    pub fn constant_defect(&self) -> f64 {
        let one = self.constant_vector();
        let img = self.apply(&one).expect("constant vector has window length");
        img.iter()
            .zip(&one)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Direct pointwise evaluation of (R f)(x), bypassing the matrix.
    pub fn pointwise(&self, f: &TrigPolynomial, x: &[f64]) -> Complex64 {
        pointwise_transfer(&self.filter, &self.scale, &self.branches, f, x)
    }

    /// Largest |eigenvalue|.
    pub fn spectral_radius(&self) -> f64 {
        eigenvalues(&self.entries)
            .iter()
            .map(|e| e.norm())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "window": self.window,
            "size": self.dim(),
            "entries": (0..self.dim()).map(|r| {
                (0..self.dim()).map(|c| {
                    let e = self.entries[(r, c)];
                    json!([e.re, e.im])
                }).collect::<Vec<_>>()
            }).collect::<Vec<_>>(),
        })
    }
}

/// (R f)(x) evaluated directly from the definition.
pub fn pointwise_transfer(
    m: &TrigPolynomial,
    a: &ExpansiveIntMatrix,
    branches: &DigitSet,
    f: &TrigPolynomial,
    x: &[f64],
) -> Complex64 {
    let d = a.dim();
    let at_inv = a.transpose_inverse().to_f64();
    let mut sum = Complex64::ZERO;
    for l in branches.points() {
        let shifted: Vec<f64> = x.iter().zip(l).map(|(&xi, &li)| xi + li as f64).collect();
        let y: Vec<f64> = (0..d)
            .map(|r| (0..d).map(|c| at_inv[r * d + c] * shifted[c]).sum())
            .collect();
        sum += m.eval(&y).norm_sqr() * f.eval(&y);
    }
    sum
}

fn eigenvalues(t: &DMatrix<Complex64>) -> Vec<Complex64> {
    let (_, tri) = t.clone().schur().unpack();
    tri.diagonal().iter().cloned().collect()
}

#[derive(Clone, Debug)]
pub struct EigenReport {
    /// geometric multiplicity of the eigenvalue 1
    pub multiplicity: usize,
    /// basis of the eigenspace, indexed like the window
    pub eigenvectors: Vec<Vec<Complex64>>,
    /// full eigenvalue list for auditability
    pub eigenvalues: Vec<Complex64>,
}

/// Geometric multiplicity of the eigenvalue 1 via the singular values of
/// T - I, together with a basis of the kernel and the full eigenvalue list.
pub fn eigenvalue_one_multiplicity(t: &TransferMatrix, tol: f64) -> Result<EigenReport> {
    if !(tol > 0.0 && tol < 1e-4) {
        return Err(Error::Invalid("tolerance must lie in (0, 1e-4)".into()));
    }
    let n = t.dim();
    let shifted = &t.entries - DMatrix::<Complex64>::identity(n, n);
    let svd = shifted.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Computation("SVD failed to produce V".into()))?;
    let mut eigenvectors = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s < tol {
            let row: Vec<Complex64> = v_t.row(i).iter().map(|z| z.conj()).collect();
            eigenvectors.push(row);
        }
    }
    Ok(EigenReport {
        multiplicity: eigenvectors.len(),
        eigenvectors,
        eigenvalues: eigenvalues(&t.entries),
    })
}

#[derive(Clone, Debug)]
pub struct OrthonormalityVerdict {
    pub orthonormal: bool,
    /// eigenvalue-1 multiplicity (eigenfunction criterion) when computed
    pub multiplicity: Option<usize>,
    /// a non-constant invariant coefficient vector, as (frequency, coeff)
    pub witness_eigenvector: Option<Vec<(Vec<i64>, Complex64)>>,
    /// extreme cycles beyond the trivial one (cycle criterion)
    pub witness_cycles: Vec<Cycle>,
    pub eigenvalues: Vec<Complex64>,
}

impl OrthonormalityVerdict {
    pub fn to_json(&self) -> Value {
        json!({
            "orthonormal": self.orthonormal,
            "multiplicity": self.multiplicity,
            "witness_eigenvector": self.witness_eigenvector.as_ref().map(|w| {
                w.iter().map(|(k, c)| json!({"freq": k, "coeff": [c.re, c.im]})).collect::<Vec<_>>()
            }),
            "witness_cycles": self.witness_cycles.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
            "eigenvalues": self.eigenvalues.iter().map(|e| json!([e.re, e.im])).collect::<Vec<_>>(),
        })
    }
}

/// Eigenfunction orthonormality test: the system generated by the filter is
/// orthonormal iff the constants are the only invariant functions of R,
/// i.e. the eigenvalue 1 is simple on the invariant window.
pub fn lawton_test(
    m0: &TrigPolynomial,
    a: &ExpansiveIntMatrix,
    branches: &DigitSet,
) -> Result<OrthonormalityVerdict> {
    let origin = vec![0.0; a.dim()];
    if (m0.eval(&origin) - Complex64::ONE).norm() > 1e-12 {
        return Err(Error::Invalid("filter is not low-pass: m(0) != 1".into()));
    }
    let grid = (2 * m0.mod_squared().degree().unsigned_abs() + 1).max(3) as u32;
    let defect = qmf_defect(m0, a, branches, grid)?;
    if defect > 1e-12 {
        return Err(Error::Invalid(format!(
            "QMF defect {defect:.3e} exceeds 1e-12; orthonormality test undefined"
        )));
    }
    let t = build_transfer_matrix(m0, a, branches)?;
    let report = eigenvalue_one_multiplicity(&t, EIGEN_TOL)?;
    let witness = if report.multiplicity > 1 {
        // pick a kernel vector with minimal overlap with the constants
        let zero_idx = t.index_of(&vec![0; a.dim()]);
        report
            .eigenvectors
            .iter()
            .min_by(|x, y| {
                let ov = |v: &Vec<Complex64>| zero_idx.map(|i| v[i].norm()).unwrap_or(0.0);
                ov(x).partial_cmp(&ov(y)).unwrap()
            })
            .map(|v| {
                t.window()
                    .iter()
                    .cloned()
                    .zip(v.iter().cloned())
                    .filter(|(_, c)| c.norm() > 1e-10)
                    .collect()
            })
    } else {
        None
    };
    Ok(OrthonormalityVerdict {
        orthonormal: report.multiplicity == 1,
        multiplicity: Some(report.multiplicity),
        witness_eigenvector: witness,
        witness_cycles: Vec::new(),
        eigenvalues: report.eigenvalues,
    })
}

/// Cycle orthonormality test: orthonormal iff the trivial cycle {0} is the
/// only extreme cycle of the branch dynamics. For a complete residue system
/// the dynamics is taken modulo the integer lattice (wavelet convention);
/// for a strict digit subset the exact attractor points are kept.
pub fn cohen_test(
    m: &TrigPolynomial,
    a: &ExpansiveIntMatrix,
    branches: &DigitSet,
    max_period: u32,
) -> Result<OrthonormalityVerdict> {
    let complete = branches.len() as u64 == a.det_abs();
    let dual = dual_ifs(a, branches)?;
    let cycles = find_cycles(&dual, m, max_period, false, complete)?;
    let nontrivial: Vec<Cycle> = cycles.into_iter().filter(|c| !c.is_trivial()).collect();
    Ok(OrthonormalityVerdict {
        orthonormal: nontrivial.is_empty(),
        multiplicity: None,
        witness_eigenvector: None,
        witness_cycles: nontrivial,
        eigenvalues: Vec::new(),
    })
}
