//! The closed forms at the heart of the toolkit: the quantity
//! `D_alpha(c, w)` in its half-plane and real-coefficient variants, their
//! inverse-problem version `D^(f, w)`, the derivative of the Bergman norm
//! in the exponent, the `B`-matrix Hadamard factorization, the generalized
//! form `D~(c, A)` with its block augmentation, and the Jensen bound.
//!
//! Sign convention: printed sources disagree on the sign of the
//! `alpha Log(1 - conj(w_i) w_j)` term between the assembled derivative
//! formulas. The `+` convention is adopted everywhere here; it is the one
//! consistent with the single-kernel closed form `N^{2 alpha} =
//! (1-|w|^2)^{-alpha}` differentiated by hand, and it is certified against
//! finite differences of the quadrature oracle in the acceptance suite.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gram::{
    build_gram, eval_vector, gram_entries, hermitian_form, quadratic_form, EvalVector,
    KernelCombo,
};
use crate::kernels::{principal_log, xlogx, zlogz, DiscPoint};

/// Entries with `Re f <= BRANCH_TOLERANCE` are treated as outside the right
/// half-plane; values that close to the cut make `Log f` useless anyway.
pub const BRANCH_TOLERANCE: f64 = 1e-12;

/// Class membership of an instance per the half-plane / real-data classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassKind {
    /// All nodes real with |w_i| < epsilon and all `f_i` in the right
    /// half-plane.
    LambdaEps(f64),
    /// All coefficients real, all nodes real in (-1, 1).
    Gamma,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassTag {
    pub kind: ClassKind,
    /// True iff every `f_i` lies strictly inside the right half-plane
    /// (beyond [`BRANCH_TOLERANCE`]).
    pub branch_ok: bool,
}

/// Everything the derivative formulas say about one instance.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeReport {
    /// `N_alpha = c W_alpha c^*`.
    pub n_alpha: f64,
    /// `N_f(alpha) = n_alpha^{1/(2 alpha)}`.
    pub n_f: f64,
    /// `D_alpha(c, w)`.
    pub d_alpha: f64,
    /// `d/dalpha N_f(alpha) = (1/(2 alpha^2)) n_f^{1-2 alpha} d_alpha`.
    pub dn_dalpha: f64,
    /// `d/dalpha N_f(alpha)^{2 alpha}`.
    pub dnpow_dalpha: f64,
    pub class: ClassTag,
}

/// Hermitian matrix `B_ij = conj(Log f_i) + Log f_j - Log(a_ij N_alpha)`
/// whose Hadamard pairing with the Gram matrix reproduces `D_alpha`.
#[derive(Debug, Clone)]
pub struct BMatrix {
    entries: DMatrix<Complex64>,
}

impl BMatrix {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// `c (W ∘ B) c^*`, which equals `D_alpha(c, w)`.
    pub fn hadamard_form(&self, combo: &KernelCombo) -> f64 {
        let a = gram_entries(combo.points(), combo.alpha());
        let k = combo.len();
        let c = combo.coeffs();
        let mut sum = Complex64::new(0.0, 0.0);
        for i in 0..k {
            for j in 0..k {
                sum += c[i] * c[j].conj() * a[(i, j)] * self.entries[(i, j)];
            }
        }
        sum.re
    }
}

/// Result of the Jensen bound, which is `-infinity` when some `f_i`
/// vanishes while its weight is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JensenBound {
    Finite(f64),
    NegInfinite,
}

impl JensenBound {
    pub fn value(&self) -> Option<f64> {
        match self {
            JensenBound::Finite(v) => Some(*v),
            JensenBound::NegInfinite => None,
        }
    }

    pub fn is_nonpositive(&self, tol: f64) -> bool {
        match self {
            JensenBound::Finite(v) => *v <= tol,
            JensenBound::NegInfinite => true,
        }
    }
}

fn branch_ok(fvals: &EvalVector) -> bool {
    fvals.values().iter().all(|f| f.re > BRANCH_TOLERANCE)
}

fn require_branch(fvals: &EvalVector) -> Result<()> {
    for (index, f) in fvals.values().iter().enumerate() {
        if f.re <= BRANCH_TOLERANCE {
            return Err(Error::BranchViolation { index, re: f.re });
        }
    }
    Ok(())
}

/// Classifies an instance into the half-plane class (all nodes real within
/// `(-epsilon, epsilon)` and all `f_i` in the right half-plane), the
/// real-data class, or neither.
///
/// `epsilon` must lie in (0, 1].
pub fn classify(combo: &KernelCombo, epsilon: f64) -> ClassTag {
    assert!(
        epsilon > 0.0 && epsilon <= 1.0,
        "epsilon must lie in (0, 1], got {epsilon}"
    );
    let fvals = eval_vector(combo);
    let branch = branch_ok(&fvals);
    let real_nodes = combo.all_points_real();
    let nodes_within =
        real_nodes && combo.points().iter().all(|w| w.value().re.abs() < epsilon);
    let kind = if nodes_within && branch {
        ClassKind::LambdaEps(epsilon)
    } else if real_nodes && combo.all_coeffs_real() {
        ClassKind::Gamma
    } else {
        ClassKind::Outside
    };
    ClassTag {
        kind,
        branch_ok: branch,
    }
}

struct Assembled {
    n: f64,
    /// `2 Re sum_i c_i conj(f_i Log f_i)`.
    first: f64,
    /// `alpha sum_ij c_i conj(c_j) a_ij Log(1 - conj(w_i) w_j)`, complex
    /// accumulation (mathematically real by Hermitian pairing).
    middle: Complex64,
}

fn kernel_log(points: &[DiscPoint], i: usize, j: usize) -> Complex64 {
    let base = Complex64::new(1.0, 0.0) - points[i].value().conj() * points[j].value();
    principal_log(base).expect("1 - conj(w_i) w_j lies in the right half-plane")
}

fn assemble_lambda(combo: &KernelCombo) -> Result<Assembled> {
    let fvals = eval_vector(combo);
    require_branch(&fvals)?;
    let a = gram_entries(combo.points(), combo.alpha());
    let trace = (0..combo.len()).map(|i| a[(i, i)].re).sum();
    let n = hermitian_form(combo.coeffs(), &a, trace)?;
    if n <= 0.0 {
        return Err(Error::DegenerateForm { n });
    }
    let c = combo.coeffs();
    let first: f64 = 2.0
        * c.iter()
            .zip(fvals.values())
            .map(|(ci, fi)| (ci * (fi * fi.ln()).conj()).re)
            .sum::<f64>();
    let mut middle = Complex64::new(0.0, 0.0);
    for i in 0..combo.len() {
        for j in 0..combo.len() {
            middle += c[i] * c[j].conj() * a[(i, j)] * kernel_log(combo.points(), i, j);
        }
    }
    middle *= combo.alpha();
    Ok(Assembled { n, first, middle })
}

fn realize(d: Complex64) -> Result<f64> {
    if d.im.abs() > 1e-10 * (1.0 + d.re.abs()) {
        return Err(Error::NonRealForm {
            real: d.re,
            imag: d.im,
        });
    }
    Ok(d.re)
}

/// `D_alpha(c, w)` through the half-plane formula
/// `2 Re sum c_i conj(f_i Log f_i) + alpha sum c_i conj(c_j) a_ij
/// Log(1 - conj(w_i) w_j) - N Log N`.
///
/// Requires every `f_i` in the right half-plane; nodes may be complex.
pub fn d_alpha_lambda(combo: &KernelCombo) -> Result<f64> {
    let parts = assemble_lambda(combo)?;
    let d = Complex64::new(parts.first - parts.n * parts.n.ln(), 0.0) + parts.middle;
    realize(d)
}

/// `D_alpha(c, w)` through the real-data formula
/// `2 sum c_i f_i Log|f_i| + sum c_i c_j a_ij Log(1-w_i w_j)^alpha - N Log N`,
/// with the `x Log x -> 0` convention whenever some `f_i` vanishes.
pub fn d_alpha_gamma(combo: &KernelCombo) -> Result<f64> {
    if !combo.all_coeffs_real() || !combo.all_points_real() {
        return Err(Error::ClassViolation {
            reason: "real-data formula needs real coefficients and real nodes".into(),
        });
    }
    let alpha = combo.alpha();
    let fvals = eval_vector(combo);
    let a = gram_entries(combo.points(), alpha);
    let trace = (0..combo.len()).map(|i| a[(i, i)].re).sum();
    let n = hermitian_form(combo.coeffs(), &a, trace)?;
    let c = combo.coeffs();

    let mut first = 0.0;
    for (ci, fi) in c.iter().zip(fvals.values()) {
        debug_assert_eq!(fi.im, 0.0, "real data must evaluate to real values");
        let f = fi.re;
        first += 2.0 * ci.re * f.signum() * xlogx(f.abs())?;
    }
    let mut middle = 0.0;
    for i in 0..combo.len() {
        for j in 0..combo.len() {
            middle +=
                c[i].re * c[j].re * a[(i, j)].re * alpha * kernel_log(combo.points(), i, j).re;
        }
    }
    Ok(first + middle - xlogx(n)?)
}

/// `D^_alpha(f, w) = D_alpha(c_alpha, w)` with `c_alpha = f W_alpha^{-1}`.
///
/// Needs distinct nodes; real data routes through the real formula,
/// half-plane data through the half-plane formula.
pub fn d_hat_alpha(fvals: &EvalVector, points: &[DiscPoint], alpha: f64) -> Result<f64> {
    let gram = build_gram(points, alpha)?;
    let coeffs = crate::gram::solve_coefficients(fvals, &gram)?;
    let real_route = fvals.all_real() && points.iter().all(DiscPoint::is_real);
    if real_route {
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let max_im = coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        if max_im > 1e-8 * scale.max(1.0) {
            return Err(Error::ClassViolation {
                reason: format!("solved coefficients are not real (max imag {max_im:e})"),
            });
        }
        let coeffs = coeffs
            .into_iter()
            .map(|c| Complex64::new(c.re, 0.0))
            .collect();
        d_alpha_gamma(&KernelCombo::new(alpha, points.to_vec(), coeffs)?)
    } else {
        d_alpha_lambda(&KernelCombo::new(alpha, points.to_vec(), coeffs)?)
    }
}

/// Computes the full derivative report for an instance.
///
/// `d/dalpha N_f` comes from the discrete formula
/// `(1/(2 alpha^2)) N_f^{1-2 alpha} D_f(alpha)`, and the derivative of
/// `N_f^{2 alpha}` from `(1/alpha) sum c_i conj(c_j) a_ij (conj(Log f_i) +
/// Log f_j + alpha Log(1 - conj(w_i) w_j))`, assembled term by term as an
/// independent route.
pub fn derivative_report(combo: &KernelCombo) -> Result<DerivativeReport> {
    let class = classify(combo, 1.0);
    let alpha = combo.alpha();
    let gram = build_gram(combo.points(), alpha)?;
    let n_alpha = quadratic_form(combo, &gram)?;
    if n_alpha <= 0.0 {
        return Err(Error::DegenerateForm { n: n_alpha });
    }
    let n_f = n_alpha.powf(1.0 / (2.0 * alpha));

    let (d_alpha, s_sum) = if class.branch_ok {
        let parts = assemble_lambda(combo)?;
        let fvals = eval_vector(combo);
        let c = combo.coeffs();
        let logs: Vec<Complex64> = fvals.values().iter().map(|f| f.ln()).collect();
        let a = gram_entries(combo.points(), alpha);
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..combo.len() {
            for j in 0..combo.len() {
                let bracket = logs[i].conj() + logs[j] + alpha * kernel_log(combo.points(), i, j);
                s += c[i] * c[j].conj() * a[(i, j)] * bracket;
            }
        }
        let d = realize(Complex64::new(parts.first - parts.n * parts.n.ln(), 0.0) + parts.middle)?;
        (d, realize(s)?)
    } else if combo.all_coeffs_real() && combo.all_points_real() {
        let d = d_alpha_gamma(combo)?;
        // same bracket with Log|f_i| in place of Log f_i
        let fvals = eval_vector(combo);
        let c = combo.coeffs();
        let a = gram_entries(combo.points(), alpha);
        let mut s = 0.0;
        for (ci, fi) in c.iter().zip(fvals.values()) {
            s += 2.0 * ci.re * fi.re.signum() * xlogx(fi.re.abs())?;
        }
        for i in 0..combo.len() {
            for j in 0..combo.len() {
                s += c[i].re
                    * c[j].re
                    * a[(i, j)].re
                    * alpha
                    * kernel_log(combo.points(), i, j).re;
            }
        }
        (d, s)
    } else {
        return Err(Error::ClassViolation {
            reason: "derivative needs half-plane values or real data".into(),
        });
    };

    let dn_dalpha = d_alpha * n_f.powf(1.0 - 2.0 * alpha) / (2.0 * alpha * alpha);
    let dnpow_dalpha = s_sum / alpha;
    Ok(DerivativeReport {
        n_alpha,
        n_f,
        d_alpha,
        dn_dalpha,
        dnpow_dalpha,
        class,
    })
}

/// Builds `B_ij = conj(Log f_i) + Log f_j - Log(a_ij N_alpha)`.
///
/// Errors when some `f_i` leaves the right half-plane, and when
/// `|Im(alpha Log(1 - conj(w_i) w_j))| >= pi`, where the principal
/// logarithm of `a_ij N` wraps and the factorization
/// `Log(a_ij N) = Log a_ij + Log N` breaks down.
pub fn b_matrix(combo: &KernelCombo) -> Result<BMatrix> {
    let fvals = eval_vector(combo);
    require_branch(&fvals)?;
    let alpha = combo.alpha();
    let a = gram_entries(combo.points(), alpha);
    let trace = (0..combo.len()).map(|i| a[(i, i)].re).sum();
    let n = hermitian_form(combo.coeffs(), &a, trace)?;
    if n <= 0.0 {
        return Err(Error::DegenerateForm { n });
    }
    let ln_n = n.ln();
    let logs: Vec<Complex64> = fvals.values().iter().map(|f| f.ln()).collect();
    let k = combo.len();
    let mut entries = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let log_kernel = alpha * kernel_log(combo.points(), i, j);
            if log_kernel.im.abs() >= std::f64::consts::PI {
                return Err(Error::BranchCut { z: a[(i, j)] * n });
            }
            entries[(i, j)] = logs[i].conj() + logs[j] + log_kernel - ln_n;
        }
    }
    Ok(BMatrix { entries })
}

fn validate_hermitian_nonneg_re(a: &DMatrix<Complex64>) -> Result<f64> {
    let k = a.nrows();
    if a.ncols() != k {
        return Err(Error::Precondition("matrix must be square".into()));
    }
    let amax = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-12 * amax.max(1.0);
    for i in 0..k {
        for j in 0..k {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > tol {
                return Err(Error::Precondition("matrix is not Hermitian".into()));
            }
            if a[(i, j)].re < -tol {
                return Err(Error::NonPositiveEntry {
                    i,
                    j,
                    value: a[(i, j)],
                });
            }
        }
    }
    Ok(amax)
}

/// The generalized form `D~(c, A) = 2 Re sum c_i conj(f_i Log f_i) -
/// sum c_i conj(c_j) a_ij Log a_ij - N Log N` with `f = c A`, `N = c A c^*`.
///
/// When `c A = 0` (within roundoff of the input scale) the first and last
/// terms vanish by the `0 Log 0` convention and only the entry sum remains.
/// With `A = W_alpha` this reproduces [`d_alpha_lambda`] on real-node
/// instances.
pub fn d_tilde(c: &[Complex64], a: &DMatrix<Complex64>) -> Result<f64> {
    let amax = validate_hermitian_nonneg_re(a)?;
    if c.len() != a.nrows() {
        return Err(Error::LengthMismatch {
            points: a.nrows(),
            coeffs: c.len(),
        });
    }
    let k = c.len();
    let f: Vec<Complex64> = (0..k)
        .map(|j| (0..k).map(|i| c[i] * a[(i, j)]).sum())
        .collect();
    let cmax = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let fmax = f.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let mut entry_sum = Complex64::new(0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            entry_sum += c[i] * c[j].conj() * zlogz(a[(i, j)])?;
        }
    }

    if fmax <= 1e-10 * amax * cmax {
        // cA = 0 specialization: D~ = -sum c_i conj(c_j) a_ij Log a_ij
        return realize(-entry_sum);
    }

    for (index, fi) in f.iter().enumerate() {
        if fi.re <= BRANCH_TOLERANCE {
            return Err(Error::BranchViolation { index, re: fi.re });
        }
    }
    let trace = (0..k).map(|i| a[(i, i)].re).sum();
    let n = hermitian_form(c, a, trace)?;
    if n <= 0.0 {
        return Err(Error::DegenerateForm { n });
    }
    let first: f64 = 2.0
        * c.iter()
            .zip(&f)
            .map(|(ci, fi)| (ci * (fi * fi.ln()).conj()).re)
            .sum::<f64>();
    let d = Complex64::new(first - n * n.ln(), 0.0) - entry_sum;
    realize(d)
}

/// Block augmentation `A~ = [[c A c^*, f], [f^*, A]]`, `c~ = (-1, c)`.
///
/// The augmented pair satisfies `c~ A~ = 0`, `A~` is Hermitian positive
/// semidefinite, and `D~(c~, A~) = D~(c, A)`.
pub fn augment(
    c: &[Complex64],
    a: &DMatrix<Complex64>,
) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    validate_hermitian_nonneg_re(a)?;
    if c.len() != a.nrows() {
        return Err(Error::LengthMismatch {
            points: a.nrows(),
            coeffs: c.len(),
        });
    }
    let k = c.len();
    let f: Vec<Complex64> = (0..k)
        .map(|j| (0..k).map(|i| c[i] * a[(i, j)]).sum())
        .collect();
    let trace = (0..k).map(|i| a[(i, i)].re).sum();
    let n = hermitian_form(c, a, trace)?;

    let mut a_tilde = DMatrix::zeros(k + 1, k + 1);
    a_tilde[(0, 0)] = Complex64::new(n, 0.0);
    for j in 0..k {
        a_tilde[(0, j + 1)] = f[j];
        a_tilde[(j + 1, 0)] = f[j].conj();
    }
    for i in 0..k {
        for j in 0..k {
            a_tilde[(i + 1, j + 1)] = a[(i, j)];
        }
    }
    let mut c_tilde = Vec::with_capacity(k + 1);
    c_tilde.push(Complex64::new(-1.0, 0.0));
    c_tilde.extend_from_slice(c);
    Ok((c_tilde, a_tilde))
}

/// Left-hand side of the Jensen bound:
/// `sum_ij x_i x_j a_ij Log(|f_i f_j| / (a_ij N))` with `f = c A`,
/// `N = c A c^*`; nonpositive for PSD `A` with positive entries.
///
/// Requires `x_i >= 0` and real positive `a_ij`; returns the negatively
/// infinite sentinel when some `f_i` vanishes with `x_i > 0`.
pub fn jensen_bound(x: &[f64], c: &[Complex64], a: &DMatrix<Complex64>) -> Result<JensenBound> {
    let k = a.nrows();
    if x.len() != k || c.len() != k || a.ncols() != k {
        return Err(Error::LengthMismatch {
            points: k,
            coeffs: x.len().max(c.len()),
        });
    }
    let amax = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for i in 0..k {
        for j in 0..k {
            let z = a[(i, j)];
            if z.im.abs() > 1e-13 * amax.max(1.0) || z.re <= 0.0 {
                return Err(Error::NonPositiveEntry { i, j, value: z });
            }
        }
    }
    for &xi in x {
        if xi < 0.0 {
            return Err(Error::Precondition(format!(
                "Jensen weights must be nonnegative, got {xi}"
            )));
        }
    }
    if x.iter().all(|&xi| xi == 0.0) {
        return Ok(JensenBound::Finite(0.0));
    }
    let f: Vec<Complex64> = (0..k)
        .map(|j| (0..k).map(|i| c[i] * a[(i, j)]).sum())
        .collect();
    if f.iter().zip(x).any(|(fi, &xi)| fi.norm() == 0.0 && xi > 0.0) {
        return Ok(JensenBound::NegInfinite);
    }
    let trace = (0..k).map(|i| a[(i, i)].re).sum();
    let n = hermitian_form(c, a, trace)?;
    if n <= 0.0 {
        return Err(Error::DegenerateForm { n });
    }
    let ln_n = n.ln();
    let mut sum = 0.0;
    for i in 0..k {
        if x[i] == 0.0 {
            continue;
        }
        for j in 0..k {
            if x[j] == 0.0 {
                continue;
            }
            let aij = a[(i, j)].re;
            sum += x[i] * x[j] * aij * (f[i].norm().ln() + f[j].norm().ln() - aij.ln() - ln_n);
        }
    }
    Ok(JensenBound::Finite(sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real_combo(alpha: f64, ws: &[f64], cs: &[f64]) -> KernelCombo {
        KernelCombo::from_raw(
            alpha,
            &ws.iter().map(|&w| c64(w, 0.0)).collect::<Vec<_>>(),
            &cs.iter().map(|&c| c64(c, 0.0)).collect::<Vec<_>>(),
        )
        .unwrap()
    }

    /// c_1 = c_2 = 1, w_1 = 0 and w_2 placed so that a_22 = 1.1.
    fn counterexample_combo(alpha: f64) -> KernelCombo {
        let w2 = (1.0 - 1.1f64.powf(-1.0 / alpha)).sqrt();
        real_combo(alpha, &[0.0, w2], &[1.0, 1.0])
    }

    /// Hand evaluation of the three log terms for the counterexample:
    /// D = 4 ln 2 + 4.2 ln 2.1 - 1.1 ln 1.1 - 4.1 ln 4.1, independent of
    /// alpha.
    fn counterexample_d_by_hand() -> f64 {
        4.0 * 2.0f64.ln() + 4.2 * 2.1f64.ln() - 1.1 * 1.1f64.ln() - 4.1 * 4.1f64.ln()
    }

    #[test]
    fn classify_reference_instances() {
        let one = real_combo(2.0, &[0.0], &[1.0]);
        let tag = classify(&one, 0.5);
        assert_eq!(tag.kind, ClassKind::LambdaEps(0.5));
        assert!(tag.branch_ok);

        let gamma = real_combo(1.5, &[0.1, 0.2], &[1.0, -2.0]);
        let tag = classify(&gamma, 1.0);
        assert_eq!(tag.kind, ClassKind::Gamma);
        assert!(!tag.branch_ok);

        let outside = KernelCombo::from_raw(2.0, &[c64(0.0, 0.0)], &[c64(0.0, 1.0)]).unwrap();
        let tag = classify(&outside, 1.0);
        assert_eq!(tag.kind, ClassKind::Outside);
        assert!(!tag.branch_ok);
    }

    #[test]
    fn single_kernel_d_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..300 {
            let alpha = rng.gen_range(0.2..6.0);
            let r: f64 = rng.gen_range(0.0..0.9);
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let w = c64(r * t.cos(), r * t.sin());
            // any c in the right half-plane
            let c = c64(rng.gen_range(0.1..3.0), rng.gen_range(-2.0..2.0));
            let combo = KernelCombo::from_raw(alpha, &[w], &[c]).unwrap();
            let d = d_alpha_lambda(&combo).unwrap();
            assert!(d.abs() <= 1e-10, "k=1 D = {d:e} at alpha={alpha}");
        }
    }

    #[test]
    fn counterexample_d_matches_hand_value() {
        for &alpha in &[1.5, 2.0, 3.0, 5.0] {
            let combo = counterexample_combo(alpha);
            let d = d_alpha_lambda(&combo).unwrap();
            assert_abs_diff_eq!(d, counterexample_d_by_hand(), epsilon = 1e-12);
        }
        // the hand value itself is about -1.163e-3
        assert!((counterexample_d_by_hand() + 1.163e-3).abs() < 1e-5);
    }

    #[test]
    fn two_kernel_d_vanishes_when_one_coefficient_does() {
        let combo = real_combo(2.5, &[0.2, 0.6], &[1.3, 0.0]);
        assert!(d_alpha_lambda(&combo).unwrap().abs() <= 1e-10);
        let combo = real_combo(2.5, &[0.2, 0.6], &[0.0, 0.7]);
        assert!(d_alpha_lambda(&combo).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn gamma_reference_instances() {
        // k = 1
        let combo = real_combo(3.0, &[0.4], &[2.0]);
        assert!(d_alpha_gamma(&combo).unwrap().abs() <= 1e-10);
        // coincident nodes force D = 0
        let combo = real_combo(2.0, &[0.3, 0.3], &[1.0, -0.4]);
        assert!(d_alpha_gamma(&combo).unwrap().abs() <= 1e-10);
        // vanishing f_1: w = (0, w2), c = (1, -1) gives f_1 = 0
        let combo = real_combo(2.0, &[0.0, 0.5], &[1.0, -1.0]);
        let d = d_alpha_gamma(&combo).unwrap();
        assert!(d.is_finite());
    }

    #[test]
    fn gamma_agrees_with_lambda_on_positive_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let k = rng.gen_range(1..=4);
            let alpha = rng.gen_range(0.3..5.0);
            let ws: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.8..0.8)).collect();
            let cs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..2.0)).collect();
            let combo = real_combo(alpha, &ws, &cs);
            let dg = d_alpha_gamma(&combo).unwrap();
            let dl = d_alpha_lambda(&combo).unwrap();
            assert!(
                (dg - dl).abs() <= 1e-12 * (1.0 + dg.abs()),
                "gamma {dg:e} vs lambda {dl:e}"
            );
        }
    }

    #[test]
    fn d_hat_round_trips_the_forward_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100 {
            let alpha = rng.gen_range(0.5..4.0);
            let ws = [
                rng.gen_range(-0.8..-0.3),
                rng.gen_range(-0.2..0.2),
                rng.gen_range(0.3..0.8),
            ];
            let cs: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let combo = real_combo(alpha, &ws, &cs);
            let expected = d_alpha_gamma(&combo).unwrap();
            let fvals = eval_vector(&combo);
            let got = d_hat_alpha(&fvals, combo.points(), alpha).unwrap();
            assert!(
                (got - expected).abs() <= 1e-9 * (1.0 + expected.abs()),
                "round trip {got:e} vs {expected:e}"
            );
        }
    }

    #[test]
    fn d_hat_single_kernel_vanishes() {
        let point = [DiscPoint::real(0.35).unwrap()];
        let fvals = EvalVector::new(vec![c64(1.7, 0.4)]);
        let d = d_hat_alpha(&fvals, &point, 2.0).unwrap();
        assert!(d.abs() <= 1e-10);
    }

    #[test]
    fn report_single_kernel_pins_the_sign() {
        for &(alpha, w) in &[(1.5, 0.3), (2.0, 0.6), (4.0, -0.4)] {
            let combo = real_combo(alpha, &[w], &[1.0]);
            let report = derivative_report(&combo).unwrap();
            assert!(report.dn_dalpha.abs() <= 1e-10);
            // direct differentiation of N^{2 alpha} = (1-w^2)^{-alpha}
            let a11 = (1.0 - w * w).powf(-alpha);
            let expected = -a11 * (1.0 - w * w).ln();
            assert_abs_diff_eq!(report.dnpow_dalpha, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn report_routes_are_consistent() {
        // d/dalpha N^{2 alpha} = D/alpha + 2 N ln N_f ties the two
        // independently assembled sums together
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let k = rng.gen_range(1..=4);
            let alpha = rng.gen_range(0.5..4.0);
            let ws: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.8..0.8)).collect();
            let cs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.5)).collect();
            let combo = real_combo(alpha, &ws, &cs);
            let report = derivative_report(&combo).unwrap();
            let other = report.d_alpha / alpha + 2.0 * report.n_alpha * report.n_f.ln();
            assert!(
                (report.dnpow_dalpha - other).abs() <= 1e-10 * (1.0 + other.abs()),
                "dnpow {:e} vs identity {:e}",
                report.dnpow_dalpha,
                other
            );
            // the report's own invariant
            let tied =
                report.n_f.powf(1.0 - 2.0 * alpha) * report.d_alpha / (2.0 * alpha * alpha);
            assert!((report.dn_dalpha - tied).abs() <= 1e-12 * (1.0 + tied.abs()));
        }
    }

    #[test]
    fn report_counterexample_instance_is_decreasing() {
        let report = derivative_report(&counterexample_combo(2.0)).unwrap();
        assert!(report.dn_dalpha < 0.0);
        assert_abs_diff_eq!(report.d_alpha, counterexample_d_by_hand(), epsilon = 1e-12);
    }

    #[test]
    fn b_matrix_counterexample_entries() {
        let combo = counterexample_combo(2.0);
        let b = b_matrix(&combo).unwrap();
        assert_abs_diff_eq!(b.entries()[(0, 0)].re, (4.0f64 / 4.1).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(b.entries()[(0, 1)].re, (4.2f64 / 4.1).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(b.entries()[(1, 0)].re, (4.2f64 / 4.1).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(b.entries()[(1, 1)].re, (4.41f64 / 4.51).ln(), epsilon = 1e-12);

        // -B has a negative eigenvalue: 2x2 eigenvalues by the trace/det
        // formula, the independent route
        let m11 = -b.entries()[(0, 0)].re;
        let m12 = -b.entries()[(0, 1)].re;
        let m22 = -b.entries()[(1, 1)].re;
        let tr = m11 + m22;
        let det = m11 * m22 - m12 * m12;
        let lambda_min = (tr - (tr * tr - 4.0 * det).sqrt()) / 2.0;
        assert!(lambda_min < -1e-4, "min eigenvalue {lambda_min:e}");
        assert!(
            (lambda_min + 5.8e-4).abs() < 2e-5,
            "min eigenvalue {lambda_min:e}"
        );

        // while D itself stays negative
        assert!(counterexample_d_by_hand() < 0.0);
    }

    #[test]
    fn b_matrix_single_kernel_is_zero() {
        let combo = real_combo(2.0, &[0.5], &[1.0]);
        let b = b_matrix(&combo).unwrap();
        assert!(b.entries()[(0, 0)].norm() <= 1e-12);
    }

    #[test]
    fn b_matrix_hadamard_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..200 {
            let k = rng.gen_range(1..=4);
            let alpha = rng.gen_range(0.3..5.0);
            let ws: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.8..0.8)).collect();
            let cs: Vec<Complex64> = (0..k)
                .map(|_| c64(rng.gen_range(0.05..1.5), rng.gen_range(-0.3..0.3)))
                .collect();
            let combo = KernelCombo::from_raw(
                alpha,
                &ws.iter().map(|&w| c64(w, 0.0)).collect::<Vec<_>>(),
                &cs,
            )
            .unwrap();
            let Ok(d) = d_alpha_lambda(&combo) else {
                continue; // branch violation; instance outside the class
            };
            let b = b_matrix(&combo).unwrap();
            let had = b.hadamard_form(&combo);
            assert!(
                (had - d).abs() <= 1e-10 * (1.0 + d.abs()),
                "Hadamard {had:e} vs D {d:e}"
            );
            for i in 0..k {
                for j in 0..k {
                    let diff = (b.entries()[(i, j)] - b.entries()[(j, i)].conj()).norm();
                    assert!(diff <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn d_tilde_matches_lambda_on_gram_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..100 {
            let k = rng.gen_range(1..=4);
            let alpha = rng.gen_range(0.3..4.0);
            let ws: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.8..0.8)).collect();
            let cs: Vec<Complex64> = (0..k)
                .map(|_| c64(rng.gen_range(0.1..1.5), rng.gen_range(-0.3..0.3)))
                .collect();
            let combo = KernelCombo::from_raw(
                alpha,
                &ws.iter().map(|&w| c64(w, 0.0)).collect::<Vec<_>>(),
                &cs,
            )
            .unwrap();
            let Ok(d) = d_alpha_lambda(&combo) else {
                continue;
            };
            let a = gram_entries(combo.points(), alpha);
            let dt = d_tilde(combo.coeffs(), &a).unwrap();
            assert!(
                (dt - d).abs() <= 1e-12 * (1.0 + d.abs()),
                "d_tilde {dt:e} vs lambda {d:e}"
            );
        }
    }

    #[test]
    fn d_tilde_vanishes_on_rank_one_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..100 {
            let k = rng.gen_range(1..=4);
            let v: Vec<Complex64> = (0..k).map(|_| c64(rng.gen_range(0.2..2.0), 0.0)).collect();
            let mut a = DMatrix::zeros(k, k);
            for i in 0..k {
                for j in 0..k {
                    a[(i, j)] = v[i] * v[j].conj();
                }
            }
            let cs: Vec<Complex64> = (0..k).map(|_| c64(rng.gen_range(0.1..1.0), 0.0)).collect();
            let dt = d_tilde(&cs, &a).unwrap();
            assert!(dt.abs() <= 1e-10, "rank-1 D~ = {dt:e}");
        }
    }

    #[test]
    fn augment_trivial_example() {
        let a = DMatrix::from_element(1, 1, c64(1.0, 0.0));
        let (ct, at) = augment(&[c64(1.0, 0.0)], &a).unwrap();
        assert_eq!(ct, vec![c64(-1.0, 0.0), c64(1.0, 0.0)]);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(at[(i, j)], c64(1.0, 0.0));
            }
        }
        // c~ A~ = 0
        for j in 0..2 {
            let fj: Complex64 = (0..2).map(|i| ct[i] * at[(i, j)]).sum();
            assert!(fj.norm() <= 1e-15);
        }
    }

    #[test]
    fn augment_preserves_d_tilde_and_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..200 {
            let k = rng.gen_range(1..=4);
            let alpha = rng.gen_range(0.3..4.0);
            let ws: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.8..0.8)).collect();
            let cs: Vec<Complex64> = (0..k)
                .map(|_| c64(rng.gen_range(0.1..1.5), rng.gen_range(-0.3..0.3)))
                .collect();
            let points: Vec<DiscPoint> = ws.iter().map(|&w| DiscPoint::real(w).unwrap()).collect();
            let a = gram_entries(&points, alpha);
            let Ok(d) = d_tilde(&cs, &a) else { continue };
            let (ct, at) = augment(&cs, &a).unwrap();
            let dt = d_tilde(&ct, &at).unwrap();
            assert!(
                (dt - d).abs() <= 1e-10 * (1.0 + d.abs()),
                "augmented {dt:e} vs original {d:e}"
            );
            let min_eig = at
                .clone()
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            assert!(min_eig >= -1e-10 * at[(0, 0)].re.max(1.0));
        }
    }

    #[test]
    fn jensen_reference_instances() {
        // x = 0
        let a = DMatrix::from_element(1, 1, c64(2.0, 0.0));
        assert_eq!(
            jensen_bound(&[0.0], &[c64(1.0, 0.0)], &a).unwrap(),
            JensenBound::Finite(0.0)
        );
        // k = 1 with positive real c: the bracket collapses to Log 1 = 0
        let b = jensen_bound(&[1.0], &[c64(1.5, 0.0)], &a).unwrap();
        assert!(matches!(b, JensenBound::Finite(v) if v.abs() <= 1e-12));
        // vanishing f with positive weight
        let ones = DMatrix::from_element(2, 2, c64(1.0, 0.0));
        let b = jensen_bound(&[1.0, 1.0], &[c64(1.0, 0.0), c64(-1.0, 0.0)], &ones).unwrap();
        assert_eq!(b, JensenBound::NegInfinite);
        // nonpositive entries are a domain error
        let bad = DMatrix::from_element(1, 1, c64(-1.0, 0.0));
        assert!(jensen_bound(&[1.0], &[c64(1.0, 0.0)], &bad).is_err());
    }

    #[test]
    fn jensen_is_nonpositive_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..500 {
            let k = rng.gen_range(1..=5);
            let alpha = rng.gen_range(0.3..5.0);
            let ws: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.8..0.8)).collect();
            let points: Vec<DiscPoint> = ws.iter().map(|&w| DiscPoint::real(w).unwrap()).collect();
            let a = gram_entries(&points, alpha);
            let cs: Vec<Complex64> = (0..k)
                .map(|_| c64(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)))
                .collect();
            let xs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..2.0)).collect();
            match jensen_bound(&xs, &cs, &a) {
                Ok(b) => assert!(b.is_nonpositive(1e-10), "Jensen bound {b:?}"),
                Err(Error::DegenerateForm { .. }) => {} // c ~ 0 draw
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn theorem_nonneg_coefficients_property() {
        // nonnegative c, real nodes: D <= 0
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..1000 {
            let k = rng.gen_range(1..=5);
            let alpha = rng.gen_range(0.01..6.0);
            let ws: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.85..0.85)).collect();
            let cs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..2.0)).collect();
            let combo = real_combo(alpha, &ws, &cs);
            let d = d_alpha_gamma(&combo).unwrap();
            assert!(d <= 1e-10, "nonneg-c instance with D = {d:e}");
        }
    }

    #[test]
    fn theorem_one_free_coefficient_property() {
        // sorted real nodes, c_2..c_k of one sign, c_1 arbitrary complex
        // with half-plane values: D <= 0
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let mut accepted = 0;
        while accepted < 1000 {
            let k = rng.gen_range(2..=5);
            let alpha = rng.gen_range(0.1..6.0);
            let mut ws: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.85..0.85)).collect();
            ws.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let mut cs: Vec<Complex64> = Vec::with_capacity(k);
            cs.push(c64(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)));
            for _ in 1..k {
                cs.push(c64(sign * rng.gen_range(0.0..1.5), 0.0));
            }
            let combo = KernelCombo::from_raw(
                alpha,
                &ws.iter().map(|&w| c64(w, 0.0)).collect::<Vec<_>>(),
                &cs,
            )
            .unwrap();
            let d = if cs[0].im == 0.0 {
                d_alpha_gamma(&combo).unwrap()
            } else {
                match d_alpha_lambda(&combo) {
                    Ok(d) => d,
                    Err(Error::BranchViolation { .. }) => continue, // outside the class
                    Err(e) => panic!("unexpected error {e}"),
                }
            };
            accepted += 1;
            assert!(d <= 1e-10, "one-free-coefficient instance with D = {d:e}");
        }
    }

    #[test]
    fn theorem_two_points_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let mut accepted = 0;
        while accepted < 1000 {
            let alpha = rng.gen_range(0.1..6.0);
            let ws: Vec<f64> = (0..2).map(|_| rng.gen_range(-0.85..0.85)).collect();
            let gamma_instance = rng.gen_bool(0.5);
            let cs: Vec<Complex64> = if gamma_instance {
                (0..2).map(|_| c64(rng.gen_range(-1.5..1.5), 0.0)).collect()
            } else {
                (0..2)
                    .map(|_| c64(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)))
                    .collect()
            };
            let combo = KernelCombo::from_raw(
                alpha,
                &ws.iter().map(|&w| c64(w, 0.0)).collect::<Vec<_>>(),
                &cs,
            )
            .unwrap();
            let d = if gamma_instance {
                d_alpha_gamma(&combo).unwrap()
            } else {
                match d_alpha_lambda(&combo) {
                    Ok(d) => d,
                    Err(Error::BranchViolation { .. }) => continue,
                    Err(e) => panic!("unexpected error {e}"),
                }
            };
            accepted += 1;
            assert!(d <= 1e-10, "k=2 instance with D = {d:e}");
        }
    }
}
