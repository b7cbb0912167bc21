//! Gram matrices of reproducing kernels, the quadratic form
//! `N_alpha = c W_alpha c^*`, evaluation vectors `f = c W_alpha`, and the
//! inverse problem `c = f W_alpha^{-1}`.
//!
//! Everything is dense and direct: the toolkit works with small k, so an
//! LDL* factorization with diagonal pivoting supplies both the
//! positive-semidefiniteness diagnostics and the solves.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{complex_power, DiscPoint};

/// Solves are refused above this condition estimate; nearly coincident
/// nodes produce coefficient blowup rather than meaningful inverses.
pub const CONDITION_LIMIT: f64 = 1e12;

const RESIDUAL_LIMIT: f64 = 1e-8;

/// A point of parameter space: exponent alpha, kernel nodes and complex
/// coefficients of `f^alpha = sum_i c_i K_{w_i, alpha}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCombo {
    alpha: f64,
    points: Vec<DiscPoint>,
    coeffs: Vec<Complex64>,
}

impl KernelCombo {
    pub fn new(alpha: f64, points: Vec<DiscPoint>, coeffs: Vec<Complex64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCombination);
        }
        if points.len() != coeffs.len() {
            return Err(Error::LengthMismatch {
                points: points.len(),
                coeffs: coeffs.len(),
            });
        }
        if !(alpha > 0.0) {
            return Err(Error::NonPositiveAlpha { alpha });
        }
        Ok(Self {
            alpha,
            points,
            coeffs,
        })
    }

    /// Convenience constructor from raw complex data.
    pub fn from_raw(alpha: f64, points: &[Complex64], coeffs: &[Complex64]) -> Result<Self> {
        let points = points
            .iter()
            .map(|&w| DiscPoint::new(w))
            .collect::<Result<Vec<_>>>()?;
        Self::new(alpha, points, coeffs.to_vec())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() // never true: k >= 1 by construction
    }

    pub fn points(&self) -> &[DiscPoint] {
        &self.points
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// The same nodes and coefficients at a different exponent.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.points.clone(), self.coeffs.clone())
    }

    /// Evaluates `f^alpha(z) = sum_i c_i (1 - conj(w_i) z)^{-alpha}`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.points
            .iter()
            .zip(&self.coeffs)
            .map(|(w, c)| c * crate::kernels::kernel_eval(w, self.alpha, z))
            .sum()
    }

    pub fn all_points_real(&self) -> bool {
        self.points.iter().all(DiscPoint::is_real)
    }

    pub fn all_coeffs_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }
}

/// Entry table `a_ij = (1 - conj(w_i) w_j)^{-alpha}`, Hermitian by
/// construction: the lower triangle mirrors the conjugated upper triangle.
pub(crate) fn gram_entries(points: &[DiscPoint], alpha: f64) -> DMatrix<Complex64> {
    let k = points.len();
    let one = Complex64::new(1.0, 0.0);
    let mut entries = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let base = one - points[i].value().conj() * points[j].value();
            let a = complex_power(base, -alpha)
                .expect("Gram base lies in the right half-plane for disc nodes");
            entries[(i, j)] = a;
            if i != j {
                entries[(j, i)] = a.conj();
            }
        }
    }
    entries
}

/// Hermitian LDL* factorization with diagonal pivoting, `P A P^T = L D L^*`.
#[derive(Debug, Clone)]
struct LdlFactor {
    perm: Vec<usize>,
    lower: DMatrix<Complex64>,
    pivots: Vec<f64>,
}

impl LdlFactor {
    fn new(a: &DMatrix<Complex64>) -> Self {
        let k = a.nrows();
        let mut work = a.clone();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut lower = DMatrix::identity(k, k);
        let mut pivots = vec![0.0; k];

        for j in 0..k {
            // symmetric pivoting: bring the largest remaining diagonal up
            let p = (j..k)
                .max_by(|&a_, &b_| {
                    work[(a_, a_)]
                        .re
                        .partial_cmp(&work[(b_, b_)].re)
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap();
            if p != j {
                work.swap_rows(j, p);
                work.swap_columns(j, p);
                lower.swap_rows(j, p);
                perm.swap(j, p);
            }
            let d = work[(j, j)].re;
            pivots[j] = d;
            if d.abs() <= f64::MIN_POSITIVE {
                continue; // (numerically) rank deficient; leave the block alone
            }
            for i in j + 1..k {
                let l = work[(i, j)] / d;
                lower[(i, j)] = l;
                for m in j + 1..=i {
                    let update = l * d * lower[(m, j)].conj();
                    work[(i, m)] -= update;
                    if m != i {
                        work[(m, i)] = work[(i, m)].conj();
                    }
                }
            }
        }
        Self {
            perm,
            lower,
            pivots,
        }
    }

    fn min_pivot(&self) -> f64 {
        self.pivots.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Solves `A x = b` through the factorization.
    fn solve(&self, b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        let k = b.len();
        let mut y = DVector::zeros(k);
        for i in 0..k {
            y[i] = b[self.perm[i]];
        }
        // forward: L z = y
        for i in 0..k {
            for j in 0..i {
                let l = self.lower[(i, j)] * y[j];
                y[i] -= l;
            }
        }
        // diagonal
        for i in 0..k {
            let d = self.pivots[i];
            if d.abs() <= f64::MIN_POSITIVE {
                return Err(Error::IllConditioned {
                    cond: f64::INFINITY,
                    limit: CONDITION_LIMIT,
                });
            }
            y[i] /= d;
        }
        // backward: L^* x = z
        for i in (0..k).rev() {
            for j in i + 1..k {
                let l = self.lower[(j, i)].conj() * y[j];
                y[i] -= l;
            }
        }
        let mut x = DVector::zeros(k);
        for i in 0..k {
            x[self.perm[i]] = y[i];
        }
        Ok(x)
    }
}

/// The k x k Hermitian matrix `[(1 - conj(w_i) w_j)^{-alpha}]` together
/// with factorization and conditioning metadata.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    alpha: f64,
    points: Vec<DiscPoint>,
    entries: DMatrix<Complex64>,
    factor: LdlFactor,
    min_eigenvalue: f64,
    condition_estimate: f64,
}

/// Builds the Gram matrix of the given nodes at exponent `alpha`.
///
/// Positive-semidefiniteness failures are reported in the metadata, not as
/// errors; callers decide what to do with a broken matrix.
pub fn build_gram(points: &[DiscPoint], alpha: f64) -> Result<GramMatrix> {
    if points.is_empty() {
        return Err(Error::EmptyCombination);
    }
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveAlpha { alpha });
    }
    let entries = gram_entries(points, alpha);
    let factor = LdlFactor::new(&entries);
    let eig = entries.clone().symmetric_eigen();
    let mut min_eigenvalue = f64::INFINITY;
    let mut max_abs = 0.0f64;
    for &lambda in eig.eigenvalues.iter() {
        min_eigenvalue = min_eigenvalue.min(lambda);
        max_abs = max_abs.max(lambda.abs());
    }
    let condition_estimate = if min_eigenvalue <= 0.0 {
        f64::INFINITY
    } else {
        max_abs / min_eigenvalue
    };
    Ok(GramMatrix {
        alpha,
        points: points.to_vec(),
        entries,
        factor,
        min_eigenvalue,
        condition_estimate,
    })
}

impl GramMatrix {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[DiscPoint] {
        &self.points
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Smallest pivot seen by the pivoted LDL* factorization.
    pub fn min_pivot(&self) -> f64 {
        self.factor.min_pivot()
    }

    /// Smallest eigenvalue; a Gram matrix is positive semidefinite up to
    /// `min_eigenvalue >= -1e-10 * max_diagonal`.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.len())
            .map(|i| self.entries[(i, i)].re)
            .fold(0.0, f64::max)
    }

    pub fn is_psd_within_tolerance(&self) -> bool {
        self.min_eigenvalue >= -1e-10 * self.max_diagonal()
    }

    fn trace(&self) -> f64 {
        (0..self.len()).map(|i| self.entries[(i, i)].re).sum()
    }

    fn check_distinct_nodes(&self) -> Result<()> {
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if self.points[i].value() == self.points[j].value() {
                    return Err(Error::CoincidentNodes { i, j });
                }
            }
        }
        Ok(())
    }

    fn check_solvable(&self) -> Result<()> {
        self.check_distinct_nodes()?;
        if self.condition_estimate > CONDITION_LIMIT {
            return Err(Error::IllConditioned {
                cond: self.condition_estimate,
                limit: CONDITION_LIMIT,
            });
        }
        Ok(())
    }

    /// Solves `W x = b` through the stored factorization.
    pub(crate) fn solve(&self, b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        self.factor.solve(b)
    }
}

/// Evaluation vector `f_alpha = c W_alpha`, i.e. the values of `f^alpha`
/// at its own nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalVector {
    values: Vec<Complex64>,
}

impl EvalVector {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn all_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `values_j = sum_i c_i a_ij`, computed with the Gram entry convention so
/// that the vector matches `c W_alpha` exactly.
pub fn eval_vector(combo: &KernelCombo) -> EvalVector {
    let entries = gram_entries(combo.points(), combo.alpha());
    EvalVector::new(row_times_matrix(combo.coeffs(), &entries))
}

fn row_times_matrix(c: &[Complex64], a: &DMatrix<Complex64>) -> Vec<Complex64> {
    let k = c.len();
    (0..k)
        .map(|j| (0..k).map(|i| c[i] * a[(i, j)]).sum())
        .collect()
}

/// The quadratic form `N_alpha = c W_alpha c^*`, a nonnegative real.
///
/// The complex accumulation is required to have vanishing imaginary part
/// (Hermitian pairing); tiny negative values are clamped to zero, values
/// negative beyond `1e-10 * trace` signal a broken matrix and error out.
pub fn quadratic_form(combo: &KernelCombo, gram: &GramMatrix) -> Result<f64> {
    if combo.len() != gram.len() || combo.alpha() != gram.alpha() {
        return Err(Error::Precondition(
            "Gram matrix was not built from this combination".into(),
        ));
    }
    hermitian_form(combo.coeffs(), gram.entries(), gram.trace())
}

pub(crate) fn hermitian_form(
    c: &[Complex64],
    a: &DMatrix<Complex64>,
    trace: f64,
) -> Result<f64> {
    let k = c.len();
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            sum += c[i] * c[j].conj() * a[(i, j)];
        }
    }
    if sum.im.abs() > 1e-10 * sum.re.abs().max(f64::EPSILON * trace * (k * k) as f64) {
        return Err(Error::NonRealForm {
            real: sum.re,
            imag: sum.im,
        });
    }
    if sum.re < -1e-10 * trace {
        return Err(Error::NegativeForm {
            value: sum.re,
            trace,
        });
    }
    Ok(sum.re.max(0.0))
}

/// Recovers coefficients from prescribed values: the `c` with `c W = fvals`.
///
/// Refuses coincident nodes and condition estimates beyond
/// [`CONDITION_LIMIT`]; the returned coefficients reproduce the data to
/// `1e-8` relative residual.
pub fn solve_coefficients(fvals: &EvalVector, gram: &GramMatrix) -> Result<Vec<Complex64>> {
    if fvals.len() != gram.len() {
        return Err(Error::LengthMismatch {
            points: gram.len(),
            coeffs: fvals.len(),
        });
    }
    gram.check_solvable()?;
    // c W = f  <=>  W c^* = f^*  (W Hermitian), so solve for the conjugates
    let rhs = DVector::from_iterator(fvals.len(), fvals.values().iter().map(|v| v.conj()));
    let y = gram.solve(&rhs)?;
    let c: Vec<Complex64> = y.iter().map(|v| v.conj()).collect();

    let reproduced = row_times_matrix(&c, gram.entries());
    let residual: f64 = reproduced
        .iter()
        .zip(fvals.values())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let scale = fvals.norm();
    if residual > RESIDUAL_LIMIT * scale {
        return Err(Error::SolveResidual {
            residual,
            limit: RESIDUAL_LIMIT * scale,
        });
    }
    Ok(c)
}

/// Squared Bergman norm of the orthogonal projection onto the kernel span:
/// `f(w) W_alpha^{-1} f(w)^*`.
pub fn projection_norm_sq(fvals: &EvalVector, gram: &GramMatrix) -> Result<f64> {
    let c = solve_coefficients(fvals, gram)?;
    let p: Complex64 = c
        .iter()
        .zip(fvals.values())
        .map(|(ci, fi)| ci * fi.conj())
        .sum();
    debug_assert!(
        p.im.abs() <= 1e-8 * (1.0 + p.re.abs()),
        "projection norm picked up an imaginary part: {p}"
    );
    Ok(p.re.max(0.0))
}
