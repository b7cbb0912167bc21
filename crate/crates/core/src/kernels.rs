//! Elementary complex-analytic building blocks: the principal logarithm,
//! real powers of complex numbers, reproducing kernels of the disc, and
//! disc automorphisms.
//!
//! Everything here is double precision. The branch-cut test of
//! [`principal_log`] is exact (Im z = 0 and Re z <= 0); callers that need
//! robustness near the cut must perturb their inputs.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Points closer to the boundary than this are rejected: kernels and Gram
/// matrices blow up as |w| -> 1 and the toolkit has no business there.
pub const DISC_RADIUS_LIMIT: f64 = 1.0 - 1e-12;

/// A point of the open unit disc, |w| < 1 strictly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscPoint(Complex64);

impl DiscPoint {
    pub fn new(value: Complex64) -> Result<Self> {
        let modulus = value.norm();
        if modulus >= DISC_RADIUS_LIMIT {
            return Err(Error::PointOutsideDisc {
                modulus,
                limit: DISC_RADIUS_LIMIT,
            });
        }
        Ok(Self(value))
    }

    pub fn real(x: f64) -> Result<Self> {
        Self::new(Complex64::new(x, 0.0))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    /// True when the point lies on the real axis (exact test).
    pub fn is_real(&self) -> bool {
        self.0.im == 0.0
    }
}

/// A value in the open right half-plane, Re z > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlaneValue(Complex64);

impl HalfPlaneValue {
    pub fn new(value: Complex64) -> Result<Self> {
        if value.re > 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::NotInHalfPlane { value })
        }
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }
}

fn on_branch_cut(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0
}

/// Principal branch of the logarithm on C minus the closed negative real
/// ray, normalised by Log 1 = 0; the imaginary part lies in (-pi, pi).
pub fn principal_log(z: Complex64) -> Result<Complex64> {
    if on_branch_cut(z) {
        return Err(Error::BranchCut { z });
    }
    Ok(z.ln())
}

/// Like [`principal_log`], but rejects arguments within `tol` of the cut
/// (distance to the closed ray {x <= 0}). `tol = 0` recovers the exact test.
pub fn principal_log_tol(z: Complex64, tol: f64) -> Result<Complex64> {
    let dist = if z.re <= 0.0 { z.im.abs() } else { z.norm() };
    if on_branch_cut(z) || dist <= tol {
        return Err(Error::BranchCut { z });
    }
    Ok(z.ln())
}

/// `base^expo = exp(expo * Log base)` for real exponents, principal branch.
pub fn complex_power(base: Complex64, expo: f64) -> Result<Complex64> {
    if expo == 0.0 {
        // even for base off the cut this is the right limit; the cut itself
        // still errors so that the domain does not depend on the exponent
        return principal_log(base).map(|_| Complex64::new(1.0, 0.0));
    }
    Ok((principal_log(base)? * expo).exp())
}

/// Reproducing kernel `K_{w,alpha}(z) = (1 - conj(w) z)^{-alpha}`.
///
/// For |w| < 1 and |z| <= 1 the base has Re > 0, so the principal branch
/// never meets its cut.
pub fn kernel_eval(w: &DiscPoint, alpha: f64, z: Complex64) -> Complex64 {
    let base = Complex64::new(1.0, 0.0) - w.value().conj() * z;
    debug_assert!(base.re > 0.0, "kernel base left the right half-plane");
    complex_power(base, -alpha).expect("kernel base cannot lie on the branch cut")
}

/// Normalised kernel `k_{w,beta}(z) = (1-|w|^2)^{beta/2} K_{w,beta}(z)`,
/// which has unit Bergman norm.
pub fn normalized_kernel_eval(w: &DiscPoint, beta: f64, z: Complex64) -> Complex64 {
    let scale = (1.0 - w.value().norm_sqr()).powf(beta / 2.0);
    scale * kernel_eval(w, beta, z)
}

/// Disc automorphism `phi_a(z) = (a - z) / (1 - conj(a) z)`; involutive and
/// maps the disc onto itself.
pub fn mobius(a: &DiscPoint, z: Complex64) -> Complex64 {
    (a.value() - z) / (Complex64::new(1.0, 0.0) - a.value().conj() * z)
}

/// `x ln x` extended continuously by 0 at x = 0.
pub fn xlogx(x: f64) -> Result<f64> {
    if x < 0.0 {
        Err(Error::NegativeXLogX { x })
    } else if x == 0.0 {
        Ok(0.0)
    } else {
        Ok(x * x.ln())
    }
}

/// `z Log z` extended by 0 at z = 0 (the limit along any path).
///
/// Exactly real arguments take the real route `sign(x) * |x| ln|x|`, which
/// is the `x Log|x|` convention used for real-coefficient instances; complex
/// arguments use the principal branch.
pub fn zlogz(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 {
        let x = z.re;
        let v = if x >= 0.0 {
            xlogx(x)?
        } else {
            -xlogx(-x)?
        };
        Ok(Complex64::new(v, 0.0))
    } else {
        Ok(z * z.ln())
    }
}
