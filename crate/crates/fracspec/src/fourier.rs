//! Truncated infinite products for mu_hat and phi_hat with certified tail
//! bounds and exact zero detection at rational arguments.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::filters::TrigPolynomial;
use crate::ifs::{AffineIfs, ExpansiveIntMatrix};
use crate::rational::{Rat, RationalVector};

pub const DEFAULT_DEPTH_CAP: usize = 256;

/// Result of evaluating a truncated infinite product
/// prod_{k>=1} m((A^T)^-k x).
#[derive(Clone, Debug)]
pub struct ProductEvaluation {
    pub value: Complex64,
    pub truncation_depth: usize,
    /// certified bound on |true - value|
    pub tail_bound: f64,
    /// witness factor index (1-based) when a factor vanishes exactly
    pub exact_zero: Option<usize>,
    /// |value| <= 1e-8 without an exact witness: numerically zero, uncertified
    pub numeric_zero_uncertified: bool,
}

impl ProductEvaluation {
    fn exact_zero_at(k: usize) -> Self {
        ProductEvaluation {
            value: Complex64::ZERO,
            truncation_depth: k,
            tail_bound: 0.0,
            exact_zero: Some(k),
            numeric_zero_uncertified: false,
        }
    }
}

/// Tail machinery for powers of T = (A^T)^-1: returns a constant c such that
/// sum_{j>=1} |T^j y| <= c |y| for every y.
fn tail_constant(a: &ExpansiveIntMatrix) -> Result<f64> {
    let d = a.dim();
    let t = a.transpose_inverse().to_f64();
    let tm = nalgebra::DMatrix::from_row_slice(d, d, &t);
    let mut norms = Vec::new();
    let mut power = tm.clone();
    for _ in 0..64 {
        let n = power.clone().svd(false, false).singular_values[0];
        norms.push(n);
        if n < 0.5 {
            break;
        }
        power *= &tm;
    }
    let eta = *norms.last().unwrap();
    if eta >= 1.0 {
        return Err(Error::Computation(
            "could not certify contraction of (A^T)^-1 within 64 powers".into(),
        ));
    }
    let sum: f64 = norms.iter().sum();
    Ok(sum / (1.0 - eta))
}

struct ProductInput<'a> {
    m: &'a TrigPolynomial,
    a: &'a ExpansiveIntMatrix,
    /// exact argument when available; enables exact zero certification
    x_rat: Option<&'a RationalVector>,
    x_f64: Vec<f64>,
}

fn evaluate_product(input: ProductInput<'_>, target_err: f64) -> Result<ProductEvaluation> {
    if target_err <= 0.0 {
        return Err(Error::Invalid("target error must be positive".into()));
    }
    let d = input.a.dim();
    let lip = input.m.lipschitz();
    let c_tail = tail_constant(input.a)?;
    let t = input.a.transpose_inverse().to_f64();
    let t_rat = input.a.transpose_inverse().clone();

    let mut y = input.x_f64.clone();
    let mut y_rat: Option<Vec<Rat>> = input.x_rat.map(|r| r.to_rats());
    let mut partial = Complex64::ONE;
    let mut any_undecided = false;

    for k in 1..=DEFAULT_DEPTH_CAP {
        // y_k = T y_{k-1}
        y = (0..d)
            .map(|r| (0..d).map(|c| t[r * d + c] * y[c]).sum())
            .collect();
        let norm_y: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();

        let factor = if let Some(rats) = &mut y_rat {
            let next: Vec<Rat> = t_rat.mul_vec(rats);
            *rats = next.clone();
            let rv = RationalVector::from_rats(&next);
            // only factors that could still vanish need the exact test
            if lip * norm_y >= 1.0 - 1e-9 {
                match input.m.exact_zero_at(&rv) {
                    Some(true) => return Ok(ProductEvaluation::exact_zero_at(k)),
                    Some(false) => {}
                    None => any_undecided = true,
                }
            }
            input.m.eval_rat(&rv)
        } else {
            input.m.eval(&y)
        };
        partial *= factor;

        let tail = lip * c_tail * norm_y;
        let tail_bound = partial.norm() * tail.exp_m1();
        // with a rational argument, keep scanning until no later factor can
        // vanish (|m - 1| < 1 on the entire tail), so zero verdicts are final
        let zero_scan_complete = input.x_rat.is_none() || tail < 1.0;
        if tail_bound <= target_err && zero_scan_complete {
            let numeric_zero = partial.norm() <= 1e-8
                && (input.x_rat.is_none() || any_undecided);
            return Ok(ProductEvaluation {
                value: partial,
                truncation_depth: k,
                tail_bound,
                exact_zero: None,
                numeric_zero_uncertified: numeric_zero,
            });
        }
    }
    Err(Error::ErrorUnattainable {
        target: target_err,
        max_depth: DEFAULT_DEPTH_CAP,
        reached: f64::NAN,
    })
}

/// mu_hat_B(x) = prod_{k>=1} m_B((A^T)^-k x) at a floating-point argument.
pub fn mu_hat(ifs: &AffineIfs, x: &[f64], target_err: f64) -> Result<ProductEvaluation> {
    let m = TrigPolynomial::from_digits(&ifs.digits);
    evaluate_product(
        ProductInput {
            m: &m,
            a: &ifs.matrix,
            x_rat: None,
            x_f64: x.to_vec(),
        },
        target_err,
    )
}

/// As `mu_hat` but with an exact rational argument, enabling exact zero
/// certificates.
pub fn mu_hat_rational(
    ifs: &AffineIfs,
    x: &RationalVector,
    target_err: f64,
) -> Result<ProductEvaluation> {
    let m = TrigPolynomial::from_digits(&ifs.digits);
    evaluate_product(
        ProductInput {
            m: &m,
            a: &ifs.matrix,
            x_rat: Some(x),
            x_f64: x.to_f64(),
        },
        target_err,
    )
}

/// phi_hat(x) = prod_{k>=1} m0((A^T)^-k x) for a low-pass filter m0.
pub fn phi_hat(
    m0: &TrigPolynomial,
    a: &ExpansiveIntMatrix,
    x: &[f64],
    target_err: f64,
) -> Result<ProductEvaluation> {
    let at_zero = m0.eval(&vec![0.0; m0.dim()]);
    if (at_zero - Complex64::ONE).norm() > 1e-12 {
        return Err(Error::Invalid(format!(
            "filter is not low-pass: m0(0) = {at_zero}"
        )));
    }
    evaluate_product(
        ProductInput {
            m: m0,
            a,
            x_rat: None,
            x_f64: x.to_vec(),
        },
        target_err,
    )
}

/// <e_l1, e_l2> in L^2(mu_B) = mu_hat_B(l2 - l1), computed with exact zero
/// certification (spectrum candidates are integer vectors).
pub fn exp_inner_product(ifs: &AffineIfs, l1: &[i64], l2: &[i64]) -> Result<ProductEvaluation> {
    let diff: Vec<i64> = l2.iter().zip(l1).map(|(&a, &b)| a - b).collect();
    if diff.iter().all(|&v| v == 0) {
        return Ok(ProductEvaluation {
            value: Complex64::ONE,
            truncation_depth: 0,
            tail_bound: 0.0,
            exact_zero: None,
            numeric_zero_uncertified: false,
        });
    }
    mu_hat_rational(ifs, &RationalVector::from_ints(&diff), 1e-12)
}

/// Partial h-function: sum over the given frequencies of |mu_hat(x + l)|^2.
pub fn h_function_partial(ifs: &AffineIfs, lambda_partial: &[Vec<i64>], x: &[f64]) -> Result<f64> {
    let mut seen = std::collections::BTreeSet::new();
    for l in lambda_partial {
        if !seen.insert(l.clone()) {
            return Err(Error::Invalid("frequencies must be pairwise distinct".into()));
        }
    }
    let mut sum = 0.0;
    for l in lambda_partial {
        let arg: Vec<f64> = x.iter().zip(l).map(|(&xi, &li)| xi + li as f64).collect();
        sum += mu_hat(ifs, &arg, 1e-12)?.value.norm_sqr();
    }
    Ok(sum)
}
