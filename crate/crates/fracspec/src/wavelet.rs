//! Cascade construction of scaling functions on a dyadic sample grid,
//! translate Gram matrices, the high-pass companion wavelet, truncated
//! Parseval checks, and the phase-twisted Gram for cycle-augmented
//! (super-space) constructions. One-dimensional, dilation 2.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::cycles::Cycle;
use crate::error::{Error, Result};
use crate::filters::{qmf_defect, TrigPolynomial};
use crate::ifs::{DigitSet, ExpansiveIntMatrix};
use crate::rational::rat_to_f64;

/// Default sampling resolution: step 2^-12.
pub const DEFAULT_RESOLUTION: u32 = 12;

/// A compactly supported function sampled on the grid
/// grid_origin + i * grid_step, i = 0..samples.len(); zero outside.
#[derive(Clone, Debug)]
pub struct SampledFunction {
    pub grid_origin: f64,
    pub grid_step: f64,
    pub samples: Vec<Complex64>,
    pub support_hint: (f64, f64),
}

impl SampledFunction {
    pub fn zeros(origin: f64, len: usize, resolution: u32) -> Self {
        let step = 0.5f64.powi(resolution as i32);
        SampledFunction {
            grid_origin: origin,
            grid_step: step,
            samples: vec![Complex64::ZERO; len],
            support_hint: (origin, origin + len as f64 * step),
        }
    }

    /// Indicator of [lo, hi) scaled by `height`, sampled at step 2^-J.
    pub fn indicator(lo: f64, hi: f64, height: f64, resolution: u32) -> Self {
        let step = 0.5f64.powi(resolution as i32);
        let n = ((hi - lo) / step).round() as usize;
        SampledFunction {
            grid_origin: lo,
            grid_step: step,
            samples: vec![Complex64::new(height, 0.0); n],
            support_hint: (lo, hi),
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.grid_origin + i as f64 * self.grid_step
    }

    /// Left-endpoint sample lookup; zero outside the stored window.
    pub fn value_at(&self, x: f64) -> Complex64 {
        let idx = ((x - self.grid_origin) / self.grid_step).round();
        if idx < 0.0 || idx >= self.samples.len() as f64 {
            Complex64::ZERO
        } else {
            self.samples[idx as usize]
        }
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.grid_step
    }

    /// Riemann-sum <self, other>; grids must share the step.
    pub fn inner(&self, other: &SampledFunction) -> Result<Complex64> {
        if (self.grid_step - other.grid_step).abs() > 1e-15 {
            return Err(Error::Invalid("mismatched sample resolution".into()));
        }
        let mut sum = Complex64::ZERO;
        for (i, s) in self.samples.iter().enumerate() {
            if s.norm_sqr() > 0.0 {
                sum += s * other.value_at(self.x(i)).conj();
            }
        }
        Ok(sum * self.grid_step)
    }

    /// L2 distance to another function on the union of supports.
    pub fn l2_distance(&self, other: &SampledFunction) -> Result<f64> {
        let aa = self.l2_norm_sq();
        let bb = other.l2_norm_sq();
        let ab = self.inner(other)?;
        Ok((aa + bb - 2.0 * ab.re).max(0.0).sqrt())
    }

    /// <f, 2^{j/2} self(2^j . - k)>, evaluated on f's grid.
    pub fn inner_dilated(&self, f: &SampledFunction, j: i32, k: i64) -> Complex64 {
        let scale = 2f64.powi(j);
        // support of the dilated translate, for early exit
        let lo = (self.support_hint.0 + k as f64) / scale;
        let hi = (self.support_hint.1 + k as f64) / scale;
        if hi <= f.support_hint.0 || lo >= f.support_hint.1 {
            return Complex64::ZERO;
        }
        let amp = scale.sqrt();
        let mut sum = Complex64::ZERO;
        for (i, s) in f.samples.iter().enumerate() {
            if s.norm_sqr() > 0.0 {
                let x = f.x(i);
                sum += s * (amp * self.value_at(scale * x - k as f64)).conj();
            }
        }
        sum * f.grid_step
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,re,im\n");
        for (i, s) in self.samples.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.x(i), s.re, s.im));
        }
        out
    }
}

fn filter_taps(m0: &TrigPolynomial) -> Result<Vec<(i64, Complex64)>> {
    if m0.dim() != 1 {
        return Err(Error::Invalid("wavelet constructions are one-dimensional".into()));
    }
    Ok(m0.coeffs().iter().map(|(k, &c)| (k[0], c)).collect())
}

fn require_qmf(m0: &TrigPolynomial, a: i64) -> Result<()> {
    if (m0.eval(&[0.0]) - Complex64::ONE).norm() > 1e-12 {
        return Err(Error::Invalid("filter is not low-pass: m(0) != 1".into()));
    }
    let am = ExpansiveIntMatrix::scalar(a)?;
    let branches = DigitSet::new((0..a).map(|l| vec![l]).collect())?;
    let grid = (2 * m0.mod_squared().degree().unsigned_abs() + 1).max(3) as u32;
    let defect = qmf_defect(m0, &am, &branches, grid)?;
    if defect > 1e-12 {
        return Err(Error::Invalid(format!(
            "QMF defect {defect:.3e} exceeds 1e-12"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct CascadeRun {
    pub phi: SampledFunction,
    /// L2 distance between successive iterates, one entry per iteration
    pub iterate_distances: Vec<f64>,
}

/// Iterate the refinement phi_{n+1}(x) = a * sum_k c_k phi_n(a x - k) from
/// the seed indicator of [0,1), sampled at step 2^-resolution.
pub fn cascade(
    m0: &TrigPolynomial,
    a: i64,
    iterations: u32,
    resolution: u32,
) -> Result<CascadeRun> {
    if a < 2 {
        return Err(Error::Invalid("dilation must be an integer >= 2".into()));
    }
    require_qmf(m0, a)?;
    let taps = filter_taps(m0)?;
    let kmin = taps.iter().map(|&(k, _)| k).min().unwrap_or(0);
    let kmax = taps.iter().map(|&(k, _)| k).max().unwrap_or(0);
    // fixed point support is [kmin/(a-1), kmax/(a-1)]; the window also has
    // to hold the seed [0,1) and every iterate in between
    let lo = (kmin as f64 / (a - 1) as f64).min(0.0).floor();
    let hi = (kmax as f64 / (a - 1) as f64).max(1.0).ceil() + 1.0;
    let step = 0.5f64.powi(resolution as i32);
    let len = ((hi - lo) / step).round() as usize;

    let mut phi = SampledFunction::zeros(lo, len, resolution);
    for i in 0..len {
        let x = phi.x(i);
        if (0.0..1.0).contains(&x) {
            phi.samples[i] = Complex64::ONE;
        }
    }
    phi.support_hint = (0.0, 1.0);

    let mut distances = Vec::with_capacity(iterations as usize);
    let mut norm_window: Vec<f64> = vec![phi.l2_norm_sq()];
    for _ in 0..iterations {
        let mut next = SampledFunction::zeros(lo, len, resolution);
        for i in 0..len {
            let x = next.x(i);
            let mut v = Complex64::ZERO;
            for &(k, c) in &taps {
                // cell average of phi(a . - k) over [x, x+h): the mean of a
                // consecutive cells; keeps the iteration inside resolution-J
                // piecewise constants, where raw point sampling would trap
                // the non-orthogonal cases in unit-norm oscillation
                let base = a as f64 * x - k as f64;
                let mut cell_sum = Complex64::ZERO;
                for t in 0..a {
                    cell_sum += phi.value_at(base + t as f64 * step);
                }
                v += c * cell_sum / a as f64;
            }
            next.samples[i] = v * a as f64;
        }
        next.support_hint = (lo, hi);
        distances.push(next.l2_distance(&phi)?);
        phi = next;
        norm_window.push(phi.l2_norm_sq());
        let w = norm_window.len();
        if w >= 6 && norm_window[w - 1] > 10.0 * norm_window[w - 6] {
            return Err(Error::Computation(
                "cascade diverging: norm grew more than 10x over 5 iterations".into(),
            ));
        }
    }
    Ok(CascadeRun { phi, iterate_distances: distances })
}

/// Gram matrix of integer translates: entry (k, k') = <phi(.-k), phi(.-k')>
/// for k, k' in [-max_shift, max_shift].
pub fn translate_gram(phi: &SampledFunction, max_shift: i64) -> Result<DMatrix<Complex64>> {
    if max_shift < 0 {
        return Err(Error::Invalid("shift range must be nonnegative".into()));
    }
    let n = (2 * max_shift + 1) as usize;
    // entries depend only on k - k'; correlate once per lag
    let mut lag = std::collections::BTreeMap::new();
    for m in -(2 * max_shift)..=(2 * max_shift) {
        let mut shifted = phi.clone();
        shifted.grid_origin += m as f64;
        shifted.support_hint.0 += m as f64;
        shifted.support_hint.1 += m as f64;
        lag.insert(m, phi.inner(&shifted)?);
    }
    let mut g = DMatrix::<Complex64>::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let k = r as i64 - max_shift;
            let kp = c as i64 - max_shift;
            // <phi(.-k), phi(.-k')> = <phi, phi(.-(k'-k))>
            g[(r, c)] = lag[&(kp - k)];
        }
    }
    Ok(g)
}

/// High-pass companion at dilation 2: with m0 = sum c_k e_k and top
/// frequency D, the detail filter is m1(x) = -e^{2 pi i D x} conj(m0(x+1/2)),
/// i.e. taps d_{D-k} = -(-1)^k conj(c_k); then psi(x) = 2 sum_k d_k phi(2x-k).
/// The sign is fixed so the two-tap filters give psi = phi(2x) - phi(2x-b).
pub fn wavelet_from_mra(m0: &TrigPolynomial, phi: &SampledFunction) -> Result<SampledFunction> {
    require_qmf(m0, 2)?;
    let taps = filter_taps(m0)?;
    let dmax = taps.iter().map(|&(k, _)| k).max().unwrap_or(0);
    let dtaps: Vec<(i64, Complex64)> = taps
        .iter()
        .map(|&(k, c)| {
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            (dmax - k, sign * c.conj())
        })
        .collect();
    let mut psi = SampledFunction::zeros(phi.grid_origin, phi.samples.len(), 0);
    psi.grid_step = phi.grid_step;
    psi.support_hint = phi.support_hint;
    for i in 0..psi.samples.len() {
        let x = psi.x(i);
        let mut v = Complex64::ZERO;
        for &(k, d) in &dtaps {
            let base = 2.0 * x - k as f64;
            let pair = phi.value_at(base) + phi.value_at(base + phi.grid_step);
            v += d * pair / 2.0;
        }
        psi.samples[i] = 2.0 * v;
    }
    Ok(psi)
}

/// Truncated Parseval check: max over test functions of
/// | ||f||^2 - sum_{j,k} |<f, 2^{j/2} psi(2^j . - k)>|^2 |.
pub fn parseval_defect(
    psi: &SampledFunction,
    test_functions: &[SampledFunction],
    j_range: (i32, i32),
    k_range: (i64, i64),
) -> Result<f64> {
    if j_range.0 > j_range.1 || k_range.0 > k_range.1 {
        return Err(Error::Invalid("empty dilation or translation range".into()));
    }
    let mut worst = 0.0f64;
    for f in test_functions {
        let mut sum = 0.0;
        for j in j_range.0..=j_range.1 {
            for k in k_range.0..=k_range.1 {
                sum += psi.inner_dilated(f, j, k).norm_sqr();
            }
        }
        worst = worst.max((f.l2_norm_sq() - sum).abs());
    }
    Ok(worst)
}

/// A tuple of scaling-function components indexed by the points of a cycle
/// (the trivial point 0 first), each carrying the translation phase
/// e^{2 pi i x_i}. Projection onto the first component recovers the
/// classical scaling function.
#[derive(Clone, Debug)]
pub struct SuperFunction {
    pub components: Vec<SampledFunction>,
    pub cycle_points: Vec<f64>,
    pub phases: Vec<Complex64>,
}

impl SuperFunction {
    /// Equal components (the configuration the worked example determines);
    /// prepends the trivial point when the cycle does not contain it.
    pub fn from_cycle(cycle: &Cycle, phi: &SampledFunction) -> Result<Self> {
        let mut points: Vec<f64> = Vec::new();
        for p in &cycle.points {
            if p.dim() != 1 {
                return Err(Error::Invalid("super construction is one-dimensional".into()));
            }
            points.push(rat_to_f64(&p.component(0)));
        }
        if !points.iter().any(|&x| x == 0.0) {
            points.insert(0, 0.0);
        }
        let phases = points
            .iter()
            .map(|&x| Complex64::new(0.0, TAU * x).exp())
            .collect();
        Ok(SuperFunction {
            components: vec![phi.clone(); points.len()],
            cycle_points: points,
            phases,
        })
    }

    pub fn project_first(&self) -> &SampledFunction {
        &self.components[0]
    }
}

/// Gram matrix of the phase-twisted translates of the super function:
/// entry (k, k') = a(k - k') * sum_i omega_i^{k - k'}, with a(m) the
/// translate autocorrelation of phi and omega_i the cycle phases.
pub fn super_gram(
    cycle: &Cycle,
    phi: &SampledFunction,
    max_shift: i64,
) -> Result<DMatrix<Complex64>> {
    let sf = SuperFunction::from_cycle(cycle, phi)?;
    let base = translate_gram(phi, max_shift)?;
    let n = base.nrows();
    let mut g = DMatrix::<Complex64>::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let m = (c as i64 - r as i64) as f64;
            let phase_sum: Complex64 = sf
                .cycle_points
                .iter()
                .map(|&x| Complex64::new(0.0, TAU * x * m).exp())
                .sum();
            g[(r, c)] = base[(r, c)] * phase_sum;
        }
    }
    Ok(g)
}

/// h_phi(x) = sum_{|k| <= cutoff} |phi_hat(x+k)|^2, with phi_hat by
/// Riemann sum. Used to probe the transfer-operator eigenfunction property.
pub fn h_phi_truncated(phi: &SampledFunction, x: f64, cutoff: i64) -> f64 {
    let mut sum = 0.0;
    for k in -cutoff..=cutoff {
        let xi = x + k as f64;
        let mut hat = Complex64::ZERO;
        for (i, s) in phi.samples.iter().enumerate() {
            if s.norm_sqr() > 0.0 {
                hat += s * Complex64::new(0.0, -TAU * xi * phi.x(i)).exp();
            }
        }
        sum += (hat * phi.grid_step).norm_sqr();
    }
    sum
}
