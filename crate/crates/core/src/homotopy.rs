//! Monotone interpolation paths certifying the sign of `D_alpha`, the
//! Moebius reduction that moves the first node to the origin, and the
//! two-kernel norm path with its branch normalization.
//!
//! Path values `D_t` as functions of the deformation parameter are
//! monotone under the class hypotheses; `D_alpha` as a function of `alpha`
//! itself need not be, so nothing here asserts monotonicity in `alpha`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::derivative::BRANCH_TOLERANCE;
use crate::error::{Error, Result};
use crate::gram::{build_gram, eval_vector, projection_norm_sq, EvalVector, KernelCombo};
use crate::kernels::{complex_power, xlogx, DiscPoint};

/// Default slack coefficient for monotonicity verdicts: a step may rise by
/// `slack * (1 + max |value|)` before the verdict flips.
pub const DEFAULT_SLACK: f64 = 1e-9;

/// Default number of uniform samples for path traces.
pub const DEFAULT_GRID_SAMPLES: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    PathA,
    PathB,
    NormPath,
}

/// A sampled homotopy: the parameter grid, the value at each sample, and
/// the monotonicity verdict.
#[derive(Debug, Clone)]
pub struct PathTrace {
    parameter_grid: Vec<f64>,
    values: Vec<f64>,
    kind: PathKind,
    monotone_nonincreasing: bool,
}

impl PathTrace {
    fn new(kind: PathKind, parameter_grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if parameter_grid.is_empty() || parameter_grid.len() != values.len() {
            return Err(Error::Precondition(
                "path grid and values must be nonempty and of equal length".into(),
            ));
        }
        if parameter_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Precondition(
                "path grid must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition(
                "path values must be finite at all samples".into(),
            ));
        }
        let mut trace = Self {
            parameter_grid,
            values,
            kind,
            monotone_nonincreasing: false,
        };
        trace.monotone_nonincreasing = trace.nonincreasing_within(DEFAULT_SLACK);
        Ok(trace)
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn grid(&self) -> &[f64] {
        &self.parameter_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn endpoint_values(&self) -> (f64, f64) {
        (self.values[0], *self.values.last().unwrap())
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Verdict computed at construction with [`DEFAULT_SLACK`].
    pub fn monotone_nonincreasing(&self) -> bool {
        self.monotone_nonincreasing
    }

    /// `values_{i+1} <= values_i + slack_coeff (1 + max|value|)` at every step.
    pub fn nonincreasing_within(&self, slack_coeff: f64) -> bool {
        let slack = slack_coeff * (1.0 + self.max_abs_value());
        self.values.windows(2).all(|w| w[1] <= w[0] + slack)
    }

    /// `values_{i+1} >= values_i - slack_coeff (1 + max|value|)` at every step.
    pub fn nondecreasing_within(&self, slack_coeff: f64) -> bool {
        let slack = slack_coeff * (1.0 + self.max_abs_value());
        self.values.windows(2).all(|w| w[1] >= w[0] - slack)
    }
}

/// `n` uniform samples of `[lo, hi]`, endpoints included.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 1 && hi >= lo, "grid needs n >= 1 and hi >= lo");
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    g[n - 1] = hi;
    g
}

/// Re-samples a trace on finer grids until the monotonicity verdict is
/// stable across two refinements; returns the last trace either way.
pub fn refine_until_stable<F>(mut make: F, initial_samples: usize, max_doublings: u32) -> Result<PathTrace>
where
    F: FnMut(usize) -> Result<PathTrace>,
{
    let mut n = initial_samples.max(3);
    let mut prev = make(n)?;
    let mut agreements = 0;
    for _ in 0..max_doublings {
        n = 2 * n - 1; // doubling keeps previous samples on the grid
        let next = make(n)?;
        if next.monotone_nonincreasing() == prev.monotone_nonincreasing() {
            agreements += 1;
        } else {
            agreements = 0;
        }
        prev = next;
        if agreements >= 2 {
            break;
        }
    }
    Ok(prev)
}

/// The common deformed form
/// `D = 2 Re sum_i c_i conj(f_i Log f_i) - sum_ij c_i conj(c_j) a_ij
/// Log a_ij - N Log N` for a real symmetric positive-entry matrix `a`.
///
/// Real `f_i` use the `x Log|x|` convention (exact for real-coefficient
/// instances); a real negative `f_i` paired with a complex coefficient has
/// no principal branch and is reported per sample.
fn deformed_form(c: &[Complex64], a: &DMatrix<f64>, sample: f64) -> Result<f64> {
    let k = c.len();
    let f: Vec<Complex64> = (0..k)
        .map(|i| (0..k).map(|j| c[j] * a[(j, i)]).sum())
        .collect();

    let mut first = 0.0;
    for i in 0..k {
        let fi = f[i];
        let term = if fi.im == 0.0 {
            if fi.re < 0.0 && c[i].im != 0.0 {
                return Err(Error::Precondition(format!(
                    "sample {sample}: f_{i} = {fi} lies on the negative real axis \
                     with a complex coefficient; no principal branch applies"
                )));
            }
            Complex64::new(fi.re.signum() * xlogx(fi.re.abs())?, 0.0)
        } else {
            fi * fi.ln()
        };
        first += 2.0 * (c[i] * term.conj()).re;
    }

    let mut middle = Complex64::new(0.0, 0.0);
    let mut n = Complex64::new(0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            let pair = c[i] * c[j].conj();
            middle += pair * a[(i, j)] * a[(i, j)].ln();
            n += pair * a[(i, j)];
        }
    }
    debug_assert!(n.im.abs() <= 1e-12 * (1.0 + n.re.abs()));
    let n = n.re.max(0.0);
    let d = Complex64::new(first - xlogx(n)?, 0.0) - middle;
    if d.im.abs() > 1e-10 * (1.0 + d.re.abs()) {
        return Err(Error::NonRealForm {
            real: d.re,
            imag: d.im,
        });
    }
    Ok(d.re)
}

fn real_nodes(combo: &KernelCombo) -> Result<Vec<f64>> {
    if !combo.all_points_real() {
        return Err(Error::Precondition("nodes must be real".into()));
    }
    Ok(combo.points().iter().map(|w| w.value().re).collect())
}

fn real_sorted_nodes(combo: &KernelCombo) -> Result<Vec<f64>> {
    let xs = real_nodes(combo)?;
    if xs.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Precondition("nodes must be sorted ascending".into()));
    }
    Ok(xs)
}

/// Conjugates an instance by the disc automorphism moving `w_1` to the
/// origin: `z_i = -phi_{w_1}(w_i)`, `d_i = c_i (1 - z_i w_1)^alpha /
/// (1 - w_1^2)^{alpha/2}`. `D_alpha` is invariant under this map.
///
/// Needs real nodes sorted ascending; the output nodes start at 0 and stay
/// sorted.
pub fn mobius_reduce(combo: &KernelCombo) -> Result<KernelCombo> {
    let xs = real_sorted_nodes(combo)?;
    let alpha = combo.alpha();
    let w1 = xs[0];
    let scale = (1.0 - w1 * w1).powf(alpha / 2.0);
    let mut points = Vec::with_capacity(xs.len());
    let mut coeffs = Vec::with_capacity(xs.len());
    for (i, &wi) in xs.iter().enumerate() {
        let zi = if i == 0 { 0.0 } else { (wi - w1) / (1.0 - w1 * wi) };
        points.push(DiscPoint::real(zi)?);
        // with the negated nodes z_i = -phi_{w_1}(w_i) the multiplier is
        // (1 + z_i w_1)^alpha = ((1 - w_1^2)/(1 - w_1 w_i))^alpha; this is
        // the choice under which d Lambda d^* = c W c^* holds identically
        let factor = scale / (1.0 - w1 * wi).powf(alpha);
        coeffs.push(combo.coeffs()[i] * factor);
    }
    KernelCombo::new(alpha, points, coeffs)
}

fn validate_grid(grid: &[f64], lo: f64, hi: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Precondition("parameter grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Precondition(
            "parameter grid must be strictly increasing".into(),
        ));
    }
    let eps = 1e-12 * (1.0 + hi.abs());
    if grid[0] < lo - eps || *grid.last().unwrap() > hi + eps {
        return Err(Error::Precondition(format!(
            "parameter grid must stay within [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// Samples the exponent homotopy `D_t` on `t_grid ⊆ [0, alpha]`, where
/// `a_{ij,t} = (1 - w_i w_j)^{-t}`. At `t = 0` the value is 0, at
/// `t = alpha` it is `D_alpha(c, w)`; under the one-free-coefficient
/// hypotheses the trace is nonincreasing.
///
/// Needs real nodes with `w_1 = 0` (apply [`mobius_reduce`] first).
pub fn path_a(combo: &KernelCombo, t_grid: &[f64]) -> Result<PathTrace> {
    let xs = real_nodes(combo)?;
    if xs[0] != 0.0 {
        return Err(Error::Precondition(
            "first node must be 0; apply mobius_reduce first".into(),
        ));
    }
    validate_grid(t_grid, 0.0, combo.alpha())?;
    let k = xs.len();
    let mut values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let mut a = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                a[(i, j)] = (1.0 - xs[i] * xs[j]).powf(-t);
            }
        }
        values.push(deformed_form(combo.coeffs(), &a, t)?);
    }
    PathTrace::new(PathKind::PathA, t_grid.to_vec(), values)
}

/// Samples the rank-one interpolation `D_t` on `t_grid ⊆ [0, 1]` for
/// two-kernel instances: only `a_11` is deformed,
/// `a_{11,t} = (1-t) a_11 + t a_12^2 / a_22`, which makes `W_1` rank one.
/// At `t = 0` the value is `D_alpha(c, w)`, at `t = 1` it is 0, and the
/// trace is nondecreasing on half-plane and real instances.
pub fn path_b(combo: &KernelCombo, t_grid: &[f64]) -> Result<PathTrace> {
    if combo.len() != 2 {
        return Err(Error::Precondition("rank-one path needs exactly k = 2".into()));
    }
    let xs = real_nodes(combo)?;
    let in_lambda = eval_vector(combo)
        .values()
        .iter()
        .all(|f| f.re > BRANCH_TOLERANCE);
    if !in_lambda && !combo.all_coeffs_real() {
        return Err(Error::Precondition(
            "instance must have half-plane values or real coefficients".into(),
        ));
    }
    validate_grid(t_grid, 0.0, 1.0)?;
    let alpha = combo.alpha();
    let a11 = (1.0 - xs[0] * xs[0]).powf(-alpha);
    let a12 = (1.0 - xs[0] * xs[1]).powf(-alpha);
    let a22 = (1.0 - xs[1] * xs[1]).powf(-alpha);
    let mut values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 0)] = (1.0 - t) * a11 + t * a12 * a12 / a22;
        a[(0, 1)] = a12;
        a[(1, 0)] = a12;
        a[(1, 1)] = a22;
        values.push(deformed_form(combo.coeffs(), &a, t)?);
    }
    PathTrace::new(PathKind::PathB, t_grid.to_vec(), values)
}

/// A two-kernel instance brought to the normal form used by the norm path:
/// nodes `(0, w)` with `w >= 0` and coefficients rotated so that the value
/// segment lies in the right half-plane.
#[derive(Debug, Clone)]
pub struct NormalizedTwoKernel {
    pub combo: KernelCombo,
    /// The applied value rotation: new coefficients are
    /// `exp(-i theta_1)` times the conjugated originals.
    pub theta_1: f64,
}

/// Brings `c_1 K_{w_1} + c_2 K_{w_2}` to the normal form by a
/// norm-preserving chain: Moebius conjugation moving `w_1` to 0, a disc
/// rotation making the second node nonnegative, and a unimodular value
/// rotation `exp(-i theta_1)` placing the segment
/// `{F^alpha(s) : s in [0, w]}` inside the right half-plane.
///
/// `theta_1` is the continuous-branch mean of the endpoint arguments,
/// valid because a segment avoiding 0 subtends an angle below pi. Errors
/// when 0 lies on the segment: such data cannot come from a zero-free
/// function.
pub fn normalize_two_kernel(combo: &KernelCombo) -> Result<NormalizedTwoKernel> {
    if combo.len() != 2 {
        return Err(Error::Precondition(
            "normalization needs exactly k = 2".into(),
        ));
    }
    let alpha = combo.alpha();
    let w1 = combo.points()[0].value();
    let w2 = combo.points()[1].value();
    let mut c1 = combo.coeffs()[0];
    let mut c2 = combo.coeffs()[1];

    // conjugate by phi_{w_1} (norm preserving); fixes the first node at 0
    let w2_moved = if w1 == Complex64::new(0.0, 0.0) {
        w2
    } else {
        let s = 1.0 - w1.norm_sqr();
        c1 *= s.powf(-alpha / 2.0);
        c2 *= s.powf(alpha / 2.0)
            * complex_power(Complex64::new(1.0, 0.0) - w2.conj() * w1, -alpha)
                .expect("Gram base stays in the right half-plane");
        crate::kernels::mobius(&combo.points()[0], w2)
    };

    // rotate the disc so the second node is nonnegative real
    let node = w2_moved.norm();

    // value rotation: the image of [0, node] is the straight segment from
    // p = c1 + c2 to q = c1 + c2 (1 - node^2)^{-alpha}
    let p = c1 + c2;
    let q = c1 + c2 * (1.0 - node * node).powf(-alpha);
    if p.norm() == 0.0 || q.norm() == 0.0 {
        return Err(Error::ZeroOnSegment);
    }
    let ratio = q / p;
    if ratio.im == 0.0 && ratio.re <= 0.0 {
        return Err(Error::ZeroOnSegment);
    }
    let theta_1 = p.arg() + ratio.arg() / 2.0;
    let rot = Complex64::new(0.0, -theta_1).exp();

    let points = vec![DiscPoint::real(0.0)?, DiscPoint::real(node)?];
    let coeffs = vec![rot * c1, rot * c2];
    Ok(NormalizedTwoKernel {
        combo: KernelCombo::new(alpha, points, coeffs)?,
        theta_1,
    })
}

/// Samples the projection norm path
/// `N_beta = (F^beta(w) W_beta^{-1} F^beta(w)^*)^{1/beta}` on
/// `beta_grid ⊆ [1, alpha]`, with `F^beta(w_i) = exp((beta/alpha) Log
/// F^alpha(w_i))` in the normalized frame.
///
/// At `beta = alpha` the value is `(c W_alpha c^*)^{1/alpha}`; the trace is
/// nonincreasing, and constant exactly for single-kernel data.
pub fn two_kernel_norm_path(
    normalized: &NormalizedTwoKernel,
    beta_grid: &[f64],
) -> Result<PathTrace> {
    let combo = &normalized.combo;
    let alpha = combo.alpha();
    if combo.len() != 2
        || combo.points()[0].value() != Complex64::new(0.0, 0.0)
        || !combo.points()[1].is_real()
        || combo.points()[1].value().re < 0.0
    {
        return Err(Error::Precondition(
            "norm path needs a normalized instance with nodes (0, w >= 0)".into(),
        ));
    }
    validate_grid(beta_grid, 1.0, alpha)?;
    let base = eval_vector(combo);
    let mut logs = Vec::with_capacity(2);
    for (index, v) in base.values().iter().enumerate() {
        if v.re <= BRANCH_TOLERANCE {
            return Err(Error::BranchViolation { index, re: v.re });
        }
        logs.push(v.ln());
    }
    let mut values = Vec::with_capacity(beta_grid.len());
    for &beta in beta_grid {
        let fv: Vec<Complex64> = logs.iter().map(|l| (l * (beta / alpha)).exp()).collect();
        let gram = build_gram(combo.points(), beta)?;
        let p = projection_norm_sq(&EvalVector::new(fv), &gram)?;
        values.push(p.powf(1.0 / beta));
    }
    PathTrace::new(PathKind::NormPath, beta_grid.to_vec(), values)
}
