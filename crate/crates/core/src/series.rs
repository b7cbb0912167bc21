//! The integer-exponent coefficient identity relating the Hardy/Bergman
//! norm gap of a polynomial to a sum of squared differences of coefficient
//! products over compositions, plus the power-series plumbing it needs.
//!
//! Identity checks are restricted to polynomials: both sides are then
//! finite sums and no convergence caveats apply.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::DiscPoint;

/// Composition enumeration beyond this truncation is refused; the tuple
/// count grows like 2^{N-1}.
pub const MAX_TRUNCATION: usize = 18;

/// A polynomial `a_0 + a_1 z + ... + a_d z^d`. The identity-checking
/// operations require `a_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySeries {
    coeffs: Vec<Complex64>,
}

impl PolySeries {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "a polynomial needs at least a_0");
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn has_unit_constant(&self) -> bool {
        self.coeffs[0] == Complex64::new(1.0, 0.0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
    }

    /// Squared Hardy norm: the coefficient two-norm.
    pub fn h2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mul(&self, other: &PolySeries) -> PolySeries {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        PolySeries::new(out)
    }

    /// Exact polynomial power by repeated multiplication.
    pub fn power(&self, n: u32) -> PolySeries {
        let mut out = PolySeries::new(vec![Complex64::new(1.0, 0.0)]);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }
}

/// Generalized binomial `C(n + alpha - 1, n) = prod_{j=1..n} (alpha+j-1)/j`.
pub fn rising_binomial(alpha: f64, n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * (alpha + j as f64 - 1.0) / j as f64)
}

/// Ordinary binomial `C(alpha, k)` for integer `alpha`; zero when
/// `k > alpha`.
fn binomial(alpha: u32, k: usize) -> f64 {
    if k > alpha as usize {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, j| acc * (alpha as f64 - j as f64) / (j as f64 + 1.0))
}

/// Taylor coefficients of the kernel `(1 - conj(w) z)^{-alpha}` up to the
/// given degree: coefficient of `z^N` is `C(N+alpha-1, N) conj(w)^N`.
pub fn kernel_taylor(w: &DiscPoint, alpha: f64, degree: usize) -> PolySeries {
    let wb = w.value().conj();
    let mut coeffs = Vec::with_capacity(degree + 1);
    let mut pow = Complex64::new(1.0, 0.0);
    for n in 0..=degree {
        coeffs.push(rising_binomial(alpha, n) * pow);
        pow *= wb;
    }
    PolySeries::new(coeffs)
}

/// `||z^N||^2` in the Bergman space with exponent `alpha`:
/// `1 / C(N+alpha-1, N)`.
pub fn monomial_bergman_norm_sq(n: usize, alpha: f64) -> f64 {
    1.0 / rising_binomial(alpha, n)
}

/// Left side of the identity:
/// `||f||_{H^2}^{2 alpha} - ||f||_{A_alpha^{2 alpha}}^{2 alpha}`
/// with the Bergman side expanded through the coefficients of the exact
/// polynomial power `f^alpha`.
///
/// Needs integer `alpha >= 2` and `a_0 = 1`.
pub fn lhs_difference(f: &PolySeries, alpha: u32) -> f64 {
    assert!(alpha >= 2, "identity needs integer alpha >= 2");
    assert!(f.has_unit_constant(), "identity needs a_0 = 1");
    let hardy = f.h2_norm_sq().powi(alpha as i32);
    let power = f.power(alpha);
    let bergman: f64 = power
        .coeffs()
        .iter()
        .enumerate()
        .map(|(n, b)| b.norm_sqr() * monomial_bergman_norm_sq(n, alpha as f64))
        .sum();
    hardy - bergman
}

/// Visits every composition of `n` into `k` parts `>= 1` (ordered tuples).
fn for_each_composition<F: FnMut(&[usize])>(n: usize, k: usize, f: &mut F) {
    fn recurse<F: FnMut(&[usize])>(rest: usize, slots: usize, prefix: &mut Vec<usize>, f: &mut F) {
        if slots == 1 {
            prefix.push(rest);
            f(prefix);
            prefix.pop();
            return;
        }
        // leave at least 1 for each remaining slot
        for part in 1..=rest - (slots - 1) {
            prefix.push(part);
            recurse(rest - part, slots - 1, prefix, f);
            prefix.pop();
        }
    }
    if k == 0 || k > n {
        return;
    }
    let mut prefix = Vec::with_capacity(k);
    recurse(n, k, &mut prefix, f);
}

/// Exhaustive, duplicate-free enumeration of the compositions of `n` into
/// `k` parts; the count is `C(n-1, k-1)`.
pub fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for_each_composition(n, k, &mut |c| out.push(c.to_vec()));
    out
}

/// Right side of the identity, truncated at `N_max`:
/// `(1/2) sum_N C(N+alpha-1,N)^{-1} sum_{k,l} C(alpha,k) C(alpha,l)
/// sum |a_{n_1}...a_{n_k} - a_{m_1}...a_{m_l}|^2` over composition pairs.
///
/// The pair sum collapses through the first and second moments of the
/// composition products, so only single compositions are enumerated. For a
/// polynomial the sum is exact once `N_max >= alpha * degree`: all higher
/// products vanish.
pub fn rhs_sum(f: &PolySeries, alpha: u32, n_max: usize) -> Result<f64> {
    assert!(alpha >= 2, "identity needs integer alpha >= 2");
    assert!(f.has_unit_constant(), "identity needs a_0 = 1");
    if n_max > MAX_TRUNCATION {
        return Err(Error::TruncationTooLarge {
            n_max,
            limit: MAX_TRUNCATION,
        });
    }
    let a = f.coeffs();
    let deg = f.degree();
    let mut total = 0.0;
    for n in 1..=n_max {
        let k_cap = (alpha as usize).min(n);
        // weighted product moments over all compositions: the pair sum
        // collapses to the variance form 2 (T0 T2 - |T1|^2), which is a
        // nonnegative combination since C(alpha, k) >= 0 for integer alpha
        let mut t0 = 0.0f64;
        let mut t1 = Complex64::new(0.0, 0.0);
        let mut t2 = 0.0f64;
        for k in 1..=k_cap {
            let ck = binomial(alpha, k);
            if ck == 0.0 {
                continue;
            }
            for_each_composition(n, k, &mut |parts| {
                let mut prod = Complex64::new(1.0, 0.0);
                for &p in parts {
                    prod *= if p <= deg {
                        a[p]
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                }
                t0 += ck;
                t1 += ck * prod;
                t2 += ck * prod.norm_sqr();
            });
        }
        let inner = t0 * t2 - t1.norm_sqr();
        debug_assert!(
            inner >= -1e-12 * (t0 * t2 + t1.norm_sqr()).max(1.0),
            "pair variance went negative beyond roundoff: {inner:e}"
        );
        total += inner.max(0.0) / rising_binomial(alpha as f64, n);
    }
    Ok(total)
}
