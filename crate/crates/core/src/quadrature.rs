//! Independent numerical evaluation of the disc integrals behind every
//! closed form in the toolkit: weighted Bergman norms, the derivative
//! integrals and their decomposition, Hardy norms, the Herglotz log
//! integral, and an argument-principle zero check.
//!
//! The engine works in polar form with `u = r^2`: a Gauss-Jacobi rule in
//! `u` with the boundary weight `(1-u)^sigma` folded into the nodes, and a
//! uniform trapezoidal rule in the angle (spectrally accurate for analytic
//! integrands). Radial weights carrying an explicit `Log(1-u)` factor are
//! integrated as the derivative of the plain weight in `sigma`, by a
//! Richardson difference of spectrally converged evaluations; a plain rule
//! applied directly to the log factor stalls near machine precision for
//! `sigma` close to -1.
//!
//! Bookkeeping: the Moebius-invariant measure contributes `(1-|z|^2)^{-2}`,
//! which is absorbed into the effective `sigma` of each operation. All
//! integrals are taken against `dm / pi`, so the unit disc has measure 1.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gram::KernelCombo;
use crate::kernels::{principal_log, DiscPoint};

/// Node counts and convergence policy for the disc-integral engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    pub max_refinements: u32,
    pub rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            radial_nodes: 96,
            angular_nodes: 256,
            max_refinements: 5,
            rel_tol: 1e-9,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radial_nodes < 8 {
            return Err(Error::Precondition(format!(
                "radial_nodes must be >= 8, got {}",
                self.radial_nodes
            )));
        }
        if self.angular_nodes < 16 || self.angular_nodes % 2 != 0 {
            return Err(Error::Precondition(format!(
                "angular_nodes must be even and >= 16, got {}",
                self.angular_nodes
            )));
        }
        Ok(())
    }
}

/// Gauss-Jacobi nodes and folded weights on [0, 1] for the weight
/// `(1-u)^sigma`, so that `sum_i w_i h(u_i) ~ int_0^1 (1-u)^sigma h(u) du`.
#[derive(Debug)]
struct RadialRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Jacobi recurrence for the weight `(1-x)^a` on [-1, 1]: diagonal and
/// squared off-diagonal of the symmetric tridiagonal Jacobi matrix.
fn jacobi_recurrence(n: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    let mut diag = Vec::with_capacity(n);
    let mut off = vec![0.0; n];
    for k in 0..n {
        let kf = k as f64;
        diag.push(if k == 0 {
            -a / (a + 2.0)
        } else {
            -(a * a) / ((2.0 * kf + a) * (2.0 * kf + a + 2.0))
        });
        if k >= 1 {
            let beta = if k == 1 {
                4.0 * (a + 1.0) / ((a + 2.0) * (a + 2.0) * (a + 3.0))
            } else {
                4.0 * kf * kf * (kf + a) * (kf + a)
                    / ((2.0 * kf + a)
                        * (2.0 * kf + a)
                        * (2.0 * kf + a + 1.0)
                        * (2.0 * kf + a - 1.0))
            };
            off[k - 1] = beta.sqrt();
        }
    }
    (diag, off)
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix that
/// accumulates only the first component of each eigenvector, which is all
/// Golub-Welsch needs for the quadrature weights. Returns (nodes on
/// [-1,1], squared first components), unsorted.
fn tridiagonal_gauss(mut d: Vec<f64>, mut e: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = d.len();
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let scale = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * scale {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            assert!(iterations <= 50, "QL iteration failed to converge");
            // Wilkinson shift
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let z2 = z.into_iter().map(|v| v * v).collect();
    (d, z2)
}

impl RadialRule {
    /// Golub-Welsch on the Jacobi recurrence for weight `(1-x)^a` on
    /// [-1, 1], mapped to [0, 1].
    fn build(n: usize, sigma: f64) -> Self {
        let a = sigma;
        let (diag, off) = jacobi_recurrence(n, a);
        let (xs, z2) = tridiagonal_gauss(diag, off);
        let mu0 = 2f64.powf(a + 1.0) / (a + 1.0);
        let fold = 2f64.powf(-a - 1.0);
        let mut pairs: Vec<(f64, f64)> = xs
            .into_iter()
            .zip(z2)
            .map(|(x, v)| ((1.0 + x) / 2.0, fold * mu0 * v))
            .collect();
        pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        RadialRule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }
}

fn radial_rule(n: usize, sigma: f64) -> Result<Arc<RadialRule>> {
    if !(sigma > -1.0) {
        return Err(Error::Precondition(format!(
            "radial weight exponent must exceed -1, got {sigma}"
        )));
    }
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<RadialRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (n, sigma.to_bits());
    let mut guard = cache.lock().expect("radial rule cache poisoned");
    Ok(guard
        .entry(key)
        .or_insert_with(|| Arc::new(RadialRule::build(n, sigma)))
        .clone())
}

fn circle_points(m: usize) -> Arc<Vec<Complex64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<Complex64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("circle cache poisoned");
    guard
        .entry(m)
        .or_insert_with(|| {
            Arc::new(
                (0..m)
                    .map(|j| {
                        let theta = std::f64::consts::TAU * j as f64 / m as f64;
                        Complex64::new(theta.cos(), theta.sin())
                    })
                    .collect(),
            )
        })
        .clone()
}

struct Estimate {
    value: Complex64,
    /// Integral of `|g|` against the absolute weight: the convergence
    /// floor for integrals whose value cancels to near zero.
    mass: f64,
}

fn eval_rule<F>(sigma: f64, radial: usize, angular: usize, g: &F) -> Result<Estimate>
where
    F: Fn(Complex64) -> Complex64,
{
    let rule = radial_rule(radial, sigma)?;
    let circle = circle_points(angular);
    let inv_m = 1.0 / angular as f64;
    let mut total = Complex64::new(0.0, 0.0);
    let mut mass = 0.0;
    for (&u, &w) in rule.nodes.iter().zip(&rule.weights) {
        let r = u.sqrt();
        let mut ring = Complex64::new(0.0, 0.0);
        let mut ring_mass = 0.0;
        for &e in circle.iter() {
            let v = g(r * e);
            ring += v;
            ring_mass += v.norm();
        }
        total += w * inv_m * ring;
        mass += w.abs() * inv_m * ring_mass;
    }
    Ok(Estimate { value: total, mass })
}

/// Converged value plus the node counts that achieved convergence.
///
/// Successive doublings must agree to `rel_tol` relative to the integrand
/// mass (which equals the value for sign-definite integrands).
fn converge<F>(g: &F, sigma: f64, config: &QuadratureConfig) -> Result<(Complex64, usize, usize)>
where
    F: Fn(Complex64) -> Complex64,
{
    config.validate()?;
    let mut radial = config.radial_nodes;
    let mut angular = config.angular_nodes;
    let mut prev = eval_rule(sigma, radial, angular, g)?;
    let mut delta = f64::INFINITY;
    for _ in 0..config.max_refinements {
        let next_radial = radial * 2;
        let next_angular = angular * 2;
        let next = eval_rule(sigma, next_radial, next_angular, g)?;
        delta = (next.value - prev.value).norm();
        if delta <= config.rel_tol * next.value.norm().max(next.mass) || delta == 0.0 {
            return Ok((next.value, next_radial, next_angular));
        }
        prev = next;
        radial = next_radial;
        angular = next_angular;
    }
    Err(Error::NonConvergence {
        refinements: config.max_refinements,
        delta,
    })
}

/// `int_D g(z) (1-|z|^2)^sigma dm(z)/pi` for `sigma > -1` and `g` bounded
/// on compacts (smooth integrands converge spectrally; the refinement loop
/// doubles both node counts until two estimates agree to `rel_tol`).
pub fn weighted_disc_integral<F>(
    g: F,
    sigma: f64,
    config: &QuadratureConfig,
) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    converge(&g, sigma, config).map(|(v, _, _)| v)
}

/// `int_D g(z) (1-|z|^2)^sigma Log(1-|z|^2) dm(z)/pi`, computed as the
/// `sigma`-derivative of the plain integral by a Richardson difference.
///
/// The four shifted evaluations reuse the node counts that converged at
/// the center exponent, so each is spectrally accurate and the difference
/// does not amplify discretization error.
pub fn weighted_disc_integral_log<F>(
    g: F,
    sigma: f64,
    config: &QuadratureConfig,
) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    let (_, radial, angular) = converge(&g, sigma, config)?;
    let h = 1e-3f64.min((sigma + 1.0) / 10.0);
    let j = |s: f64| eval_rule(s, radial, angular, &g).map(|e| e.value);
    let d1 = (j(sigma + h)? - j(sigma - h)?) / (2.0 * h);
    let d2 = (j(sigma + h / 2.0)? - j(sigma - h / 2.0)?) / h;
    Ok((4.0 * d2 - d1) / 3.0)
}

fn require_weight_exponent(alpha: f64) -> Result<()> {
    if !(alpha > 1.0) {
        return Err(Error::Precondition(format!(
            "Bergman weight needs alpha > 1, got {alpha}"
        )));
    }
    Ok(())
}

/// `int_D |f^alpha(z)|^2 (alpha-1)(1-|z|^2)^alpha dmu(z)`, the squared
/// Bergman norm that the Gram quadratic form reproduces in closed form.
pub fn bergman_norm_sq_quad(combo: &KernelCombo, config: &QuadratureConfig) -> Result<f64> {
    let alpha = combo.alpha();
    require_weight_exponent(alpha)?;
    let g = |z: Complex64| Complex64::new(combo.eval(z).norm_sqr(), 0.0);
    let v = weighted_disc_integral(g, alpha - 2.0, config)?;
    Ok((alpha - 1.0) * v.re)
}

/// `N_f(alpha')^{2 alpha'} = int |f|^{2 alpha'} (alpha'-1)(1-|z|^2)^{alpha'}
/// dmu` for the fixed function `f = (f^alpha)^{1/alpha}`; only the modulus
/// of `f^alpha` enters, so no branch choice is needed.
pub fn bergman_power_norm(
    combo: &KernelCombo,
    alpha_prime: f64,
    config: &QuadratureConfig,
) -> Result<f64> {
    require_weight_exponent(alpha_prime)?;
    let ratio = alpha_prime / combo.alpha();
    let g = |z: Complex64| Complex64::new(combo.eval(z).norm_sqr().powf(ratio), 0.0);
    let v = weighted_disc_integral(g, alpha_prime - 2.0, config)?;
    Ok((alpha_prime - 1.0) * v.re)
}

/// `I_f(alpha) = int |f|^{2 alpha} (1-|z|^2)^alpha
/// Log(|f|^2 (1-|z|^2)) dmu`, evaluated as `d/dbeta` at `beta = alpha` of
/// `J(beta) = int |f|^{2 beta} (1-|z|^2)^{beta-2} dm/pi`, a route
/// independent of the II/III split.
///
/// Requires the combination zero-free on the closed disc (see
/// [`zero_free_check`]) and `alpha > 1`.
pub fn i_f_quad(combo: &KernelCombo, config: &QuadratureConfig) -> Result<f64> {
    let alpha = combo.alpha();
    require_weight_exponent(alpha)?;
    let j_of = |beta: f64, radial: usize, angular: usize| -> Result<Complex64> {
        let ratio = beta / alpha;
        let g = |z: Complex64| Complex64::new(combo.eval(z).norm_sqr().powf(ratio), 0.0);
        eval_rule(beta - 2.0, radial, angular, &g).map(|e| e.value)
    };
    let g_center = |z: Complex64| Complex64::new(combo.eval(z).norm_sqr(), 0.0);
    let (_, radial, angular) = converge(&g_center, alpha - 2.0, config)?;
    let h = 1e-3f64.min((alpha - 1.0) / 10.0);
    let d1 = (j_of(alpha + h, radial, angular)? - j_of(alpha - h, radial, angular)?) / (2.0 * h);
    let d2 =
        (j_of(alpha + h / 2.0, radial, angular)? - j_of(alpha - h / 2.0, radial, angular)?) / h;
    Ok(((4.0 * d2 - d1) / 3.0).re)
}

/// `II = (1/alpha) int |f^alpha|^2 (1-|z|^2)^alpha Log|f^alpha|^2 dmu`;
/// needs zero-freeness so the log factor stays smooth.
pub fn ii_quad(combo: &KernelCombo, config: &QuadratureConfig) -> Result<f64> {
    let alpha = combo.alpha();
    require_weight_exponent(alpha)?;
    let g = |z: Complex64| {
        let m = combo.eval(z).norm_sqr();
        Complex64::new(m * m.ln(), 0.0)
    };
    let v = weighted_disc_integral(g, alpha - 2.0, config)?;
    Ok(v.re / alpha)
}

/// `III = int |f^alpha|^2 (1-|z|^2)^alpha Log(1-|z|^2) dmu`; the log factor
/// rides on the radial weight, so no zero-freeness is needed.
pub fn iii_quad(combo: &KernelCombo, config: &QuadratureConfig) -> Result<f64> {
    let alpha = combo.alpha();
    require_weight_exponent(alpha)?;
    let g = |z: Complex64| Complex64::new(combo.eval(z).norm_sqr(), 0.0);
    let v = weighted_disc_integral_log(g, alpha - 2.0, config)?;
    Ok(v.re)
}

fn pair_data(w_i: &DiscPoint, w_j: &DiscPoint, alpha: f64) -> (Complex64, Complex64, f64) {
    let base = Complex64::new(1.0, 0.0) - w_i.value().conj() * w_j.value();
    let a_ij = crate::kernels::complex_power(base, -alpha)
        .expect("Gram base lies in the right half-plane");
    let log_base = principal_log(base).expect("Gram base lies in the right half-plane");
    let log_njj = (1.0 - w_j.value().norm_sqr()).ln();
    (a_ij, log_base, log_njj)
}

/// Closed form of the `III_ij` cross integral:
/// `-(alpha-1)^{-2} a_ij + (alpha-1)^{-1} a_ij Log(1 - conj(w_i) w_j)`.
pub fn iii_ij_closed(w_i: &DiscPoint, w_j: &DiscPoint, alpha: f64) -> Complex64 {
    let (a_ij, log_base, _) = pair_data(w_i, w_j, alpha);
    let am1 = alpha - 1.0;
    -a_ij / (am1 * am1) + a_ij * log_base / am1
}

/// Closed form of `IV_ij`:
/// `-(alpha-1)^{-2} a_ij - (alpha-1)^{-1} a_ij Log(1-|w_j|^2)`.
pub fn iv_ij_closed(w_i: &DiscPoint, w_j: &DiscPoint, alpha: f64) -> Complex64 {
    let (a_ij, _, log_njj) = pair_data(w_i, w_j, alpha);
    let am1 = alpha - 1.0;
    -a_ij / (am1 * am1) - a_ij * log_njj / am1
}

/// Closed form of `V_ij`:
/// `(alpha-1)^{-1} a_ij (Log(1 - conj(w_i) w_j) + Log(1-|w_j|^2))`.
pub fn v_ij_closed(w_i: &DiscPoint, w_j: &DiscPoint, alpha: f64) -> Complex64 {
    let (a_ij, log_base, log_njj) = pair_data(w_i, w_j, alpha);
    a_ij * (log_base + Complex64::new(log_njj, 0.0)) / (alpha - 1.0)
}

/// Closed form of the residue contribution `VI_ij`:
/// `-(alpha-1)^{-1} a_ij Log(1-|w_j|^2)`.
pub fn vi_ij_closed(w_i: &DiscPoint, w_j: &DiscPoint, alpha: f64) -> Complex64 {
    let (a_ij, _, log_njj) = pair_data(w_i, w_j, alpha);
    -a_ij * log_njj / (alpha - 1.0)
}

/// Squared Hardy norm of a combination at `alpha = 1` via the Gram closed
/// form (`H^2 = A_1^2`).
pub fn hardy_norm_sq(combo: &KernelCombo) -> Result<f64> {
    if (combo.alpha() - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "Hardy closed form needs alpha = 1, got {}",
            combo.alpha()
        )));
    }
    let gram = crate::gram::build_gram(combo.points(), combo.alpha())?;
    crate::gram::quadratic_form(combo, &gram)
}

/// Squared Hardy norm from boundary means: trapezoidal means of `|f|^2` on
/// two circles close to the boundary, extrapolated to radius 1 by one
/// Richardson step. The sampler receives `(r, theta)`.
pub fn hardy_norm_circle<F>(sampler: F, config: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64, f64) -> Complex64,
{
    config.validate()?;
    let h = 1e-5f64;
    let x1 = 1.0 - 2.0 * h; // r^2 values
    let x2 = 1.0 - h;
    let r1 = x1.sqrt();
    let r2 = x2.sqrt();
    let mean = |r: f64, m: usize| -> f64 {
        (0..m)
            .map(|j| {
                let theta = std::f64::consts::TAU * j as f64 / m as f64;
                sampler(r, theta).norm_sqr()
            })
            .sum::<f64>()
            / m as f64
    };
    let extrapolate = |m: usize| 2.0 * mean(r2, m) - mean(r1, m);
    let mut m = config.angular_nodes;
    let mut prev = extrapolate(m);
    let mut delta = f64::INFINITY;
    for _ in 0..config.max_refinements {
        m *= 2;
        let next = extrapolate(m);
        delta = (next - prev).abs();
        if delta <= config.rel_tol * next.abs() || delta == 0.0 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergence {
        refinements: config.max_refinements,
        delta,
    })
}

/// Herglotz log integral: for zero-free `f` with `f(0) > 0`,
/// `log f(z) = (1/2pi) int (e^{i theta}+z)/(e^{i theta}-z)
/// Log|f(e^{i theta})| dtheta`. The sampler returns the boundary modulus
/// `|f(e^{i theta})|` and must stay away from zero.
pub fn herglotz_log<F>(
    modulus_sampler: F,
    z: &DiscPoint,
    config: &QuadratureConfig,
) -> Result<Complex64>
where
    F: Fn(f64) -> f64,
{
    config.validate()?;
    let zv = z.value();
    let eval = |m: usize| -> Result<(Complex64, f64)> {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut mass = 0.0;
        for j in 0..m {
            let theta = std::f64::consts::TAU * j as f64 / m as f64;
            let modulus = modulus_sampler(theta);
            if modulus <= 0.0 {
                return Err(Error::ZeroModulusSample { modulus, theta });
            }
            let e = Complex64::new(theta.cos(), theta.sin());
            let term = (e + zv) / (e - zv) * modulus.ln();
            sum += term;
            mass += term.norm();
        }
        Ok((sum / m as f64, mass / m as f64))
    };
    let mut m = config.angular_nodes;
    let (mut prev, _) = eval(m)?;
    let mut delta = f64::INFINITY;
    for _ in 0..config.max_refinements {
        m *= 2;
        let (next, mass) = eval(m)?;
        delta = (next - prev).norm();
        if delta <= config.rel_tol * next.norm().max(mass) || delta == 0.0 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergence {
        refinements: config.max_refinements,
        delta,
    })
}

/// Default test radius for [`zero_free_check`]: combinations are analytic
/// across the boundary because their nodes stay inside |w| < 1 - 1e-12.
pub const DEFAULT_ZERO_FREE_RADIUS: f64 = 1.0 - 1e-6;

/// Argument-principle check that `f^alpha` has no zeros in `|z| < r`:
/// sums principal-branch argument increments of `f^alpha` around the
/// circle `|z| = r` and reports whether the winding number is zero.
///
/// Returns `false` when the winding is nonzero or the minimal modulus on
/// the sample grid drops to 1e-9; errors as inconclusive when adjacent
/// argument jumps exceed pi/2 even after refinement.
pub fn zero_free_check(
    combo: &KernelCombo,
    r: f64,
    config: &QuadratureConfig,
) -> Result<bool> {
    config.validate()?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Precondition(format!(
            "zero check radius must lie in (0, 1), got {r}"
        )));
    }
    let mut m = config.angular_nodes;
    let mut last_jump = f64::INFINITY;
    for _ in 0..=config.max_refinements {
        let values: Vec<Complex64> = (0..m)
            .map(|j| {
                let theta = std::f64::consts::TAU * j as f64 / m as f64;
                combo.eval(r * Complex64::new(theta.cos(), theta.sin()))
            })
            .collect();
        let min_modulus = values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        if min_modulus <= 1e-9 {
            return Ok(false); // a zero sits on (or hugs) the test circle
        }
        let mut total = 0.0;
        let mut max_jump = 0.0f64;
        for j in 0..m {
            let next = values[(j + 1) % m];
            let jump = (next / values[j]).arg();
            max_jump = max_jump.max(jump.abs());
            total += jump;
        }
        if max_jump <= std::f64::consts::FRAC_PI_2 {
            let winding = (total / std::f64::consts::TAU).round() as i64;
            return Ok(winding == 0);
        }
        last_jump = max_jump;
        m *= 2;
    }
    Err(Error::WindingInconclusive {
        jump: last_jump,
        refinements: config.max_refinements,
    })
}
