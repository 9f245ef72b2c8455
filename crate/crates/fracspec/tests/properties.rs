//! Randomized invariant checks over the public API.

use std::collections::BTreeMap;

use num_complex::Complex64;
use proptest::prelude::*;

use fracspec::cdyn::{self, ComplexPolynomial, LacunaryExpansion};
use fracspec::filters::{filter_from_json, filter_to_json, hadamard_check, TrigPolynomial};
use fracspec::fourier::mu_hat;
use fracspec::ifs::{AffineIfs, DigitSet, ExpansiveIntMatrix, Orientation};
use fracspec::spectra::lambda0;

fn scale4_ifs() -> AffineIfs {
    AffineIfs::new(
        ExpansiveIntMatrix::scalar(4).unwrap(),
        DigitSet::from_scalars(&[0, 2]).unwrap(),
        Orientation::Forward,
    )
    .unwrap()
}

/// Frequencies whose base-4 digits are all 0 or 1, bounded by 4^6.
fn lacunary_freq() -> impl Strategy<Value = u64> {
    proptest::bits::u64::between(0, 6).prop_map(|mask| {
        let mut v = 0u64;
        for k in 0..6 {
            if mask >> k & 1 == 1 {
                v += 4u64.pow(k);
            }
        }
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filter_json_roundtrip(coeffs in proptest::collection::btree_map(
        -6i64..=6,
        (-1.0f64..1.0, -1.0f64..1.0),
        1..5,
    )) {
        let map: BTreeMap<Vec<i64>, Complex64> = coeffs
            .into_iter()
            .map(|(k, (re, im))| (vec![k], Complex64::new(re, im)))
            .collect();
        let m = TrigPolynomial::new(map, 1).unwrap();
        let back = filter_from_json(&filter_to_json(&m)).unwrap();
        prop_assert_eq!(m.coeffs().len(), back.coeffs().len());
        for (k, c) in m.coeffs() {
            prop_assert!((back.coeffs()[k] - c).norm() < 1e-15);
        }
    }

    #[test]
    fn hadamard_defect_nonnegative_and_symmetric_in_size(
        b1 in -9i64..=9, b2 in -9i64..=9, l1 in -9i64..=9, l2 in -9i64..=9,
    ) {
        prop_assume!(b1 != b2 && l1 != l2);
        let a = ExpansiveIntMatrix::scalar(4).unwrap();
        let b = DigitSet::from_scalars(&[b1, b2]).unwrap();
        let l = DigitSet::from_scalars(&[l1, l2]).unwrap();
        if let Ok(cert) = hadamard_check(&a, &b, &l) {
            prop_assert!(cert.unitarity_defect >= 0.0);
            prop_assert_eq!(cert.n, 2);
        }
    }

    #[test]
    fn transform_modulus_bounded_by_one(x in -16.0f64..16.0) {
        let ev = mu_hat(&scale4_ifs(), &[x], 1e-9).unwrap();
        prop_assert!(ev.value.norm() <= 1.0 + ev.tail_bound + 1e-12);
    }

    #[test]
    fn spectrum_refines_by_one_digit(level in 1u32..5) {
        // every nonzero element splits uniquely as l + 4 * (smaller element)
        let a = ExpansiveIntMatrix::scalar(4).unwrap();
        let l = DigitSet::from_scalars(&[0, 1]).unwrap();
        let big: Vec<i64> = lambda0(&a, &l, level).unwrap()
            .vectors().iter().map(|v| v[0]).collect();
        let small: Vec<i64> = lambda0(&a, &l, level - 1).unwrap()
            .vectors().iter().map(|v| v[0]).collect();
        for &v in &big {
            let reps: Vec<i64> = [0i64, 1]
                .iter()
                .filter(|&&d| (v - d) % 4 == 0 && small.contains(&((v - d) / 4)))
                .map(|&d| d)
                .collect();
            if v != 0 {
                prop_assert!(!reps.is_empty() || big.len() == small.len(),
                    "element {} has no one-digit refinement", v);
            }
            prop_assert!(reps.len() <= 1, "element {} splits two ways", v);
        }
    }

    #[test]
    fn k2_split_preserves_norm_and_roundtrips(
        entries in proptest::collection::btree_map(
            lacunary_freq(),
            (-1.0f64..1.0, -1.0f64..1.0),
            0..10,
        )
    ) {
        let map: BTreeMap<u64, Complex64> = entries
            .into_iter()
            .map(|(l, (re, im))| (l, Complex64::new(re, im)))
            .collect();
        let f = LacunaryExpansion::new(map).unwrap();
        let (f0, f1) = cdyn::k2_split(&f);
        let lhs = f.norm_sq();
        prop_assert!((lhs - f0.norm_sq() - f1.norm_sq()).abs() <= 1e-12 * lhs.max(1.0));
        prop_assert_eq!(cdyn::k2_merge(&f0, &f1).unwrap(), f);
    }

    #[test]
    fn polynomial_parser_never_panics(expr in "[z0-9+\\-^.i ]{0,24}") {
        let _ = ComplexPolynomial::parse(&expr);
    }

    #[test]
    fn backward_orbit_stays_on_circle_for_squaring(seed in any::<u64>()) {
        let p = ComplexPolynomial::parse("z^2").unwrap();
        let samples = cdyn::brolin_sample(&p, 20, 60, seed).unwrap();
        for z in samples {
            prop_assert!((z.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn backward_orbit_balanced_under_pullback(seed in 0u64..1000) {
        // averaging f over uniformly weighted preimages leaves the sample
        // mean of f statistically unchanged (f = identity map here)
        let p = ComplexPolynomial::parse("z^2 - 1").unwrap();
        let samples = cdyn::brolin_sample(&p, 400, 80, seed).unwrap();
        let direct = cdyn::moments(&samples, 1).unwrap()[1].clone();
        let mut pulled = Complex64::ZERO;
        for z in &samples {
            let pre = p.preimages(*z).unwrap();
            pulled += pre.iter().sum::<Complex64>() / pre.len() as f64;
        }
        pulled /= samples.len() as f64;
        let tol = 5.0 * direct.std_error + 5.0 / (samples.len() as f64).sqrt();
        prop_assert!((pulled - direct.value).norm() < tol);
    }
}
