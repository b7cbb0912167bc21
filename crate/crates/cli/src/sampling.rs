//! Deterministic instance samplers: every sample is drawn from its own
//! counter-mode RNG stream keyed by (seed, sample index), so results do
//! not depend on thread scheduling. Class membership is enforced by
//! rejection with the rejection count reported.

use bergman_core::derivative::{
    d_alpha_gamma, d_alpha_lambda, d_hat_alpha, d_tilde, BRANCH_TOLERANCE,
};
use bergman_core::gram::{build_gram, eval_vector, quadratic_form, EvalVector, KernelCombo};
use bergman_core::Error as CoreError;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{CoeffDistribution, NodeDistribution, ScanSpec, ScanTarget};

/// Node sampling stays inside radius 0.9: boundary-hugging nodes push the
/// quadratic form to scales where the 1e-10 sign thresholds would drown
/// in roundoff.
pub const NODE_RADIUS: f64 = 0.9;

/// Minimal node separation for inverse-problem targets (keeps the Gram
/// solve inside its condition threshold most of the time).
const MIN_SEPARATION: f64 = 0.05;

const MAX_REJECTIONS: u32 = 2000;

/// One evaluated sample of a scan.
#[derive(Debug, Clone)]
pub struct Sample {
    pub index: u64,
    pub alpha: f64,
    pub k: usize,
    pub coeffs: Vec<Complex64>,
    pub points: Vec<Complex64>,
    pub d: Option<f64>,
    pub n: Option<f64>,
    pub branch_ok: bool,
    pub flags: String,
    pub rejections: u32,
}

pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

fn draw_node(rng: &mut ChaCha8Rng, dist: NodeDistribution) -> Complex64 {
    match dist {
        NodeDistribution::UniformReal => {
            Complex64::new(rng.gen_range(-NODE_RADIUS..NODE_RADIUS), 0.0)
        }
        NodeDistribution::UniformDisc => {
            let r = NODE_RADIUS * rng.gen_range(0.0f64..1.0).sqrt();
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            Complex64::new(r * t.cos(), r * t.sin())
        }
    }
}

fn draw_coeff(rng: &mut ChaCha8Rng, dist: CoeffDistribution) -> Complex64 {
    match dist {
        CoeffDistribution::ComplexBall(radius) => loop {
            let re = rng.gen_range(-radius..radius);
            let im = rng.gen_range(-radius..radius);
            if re * re + im * im <= radius * radius {
                return Complex64::new(re, im);
            }
        },
        CoeffDistribution::Nonneg(radius) => Complex64::new(rng.gen_range(0.0..radius), 0.0),
        CoeffDistribution::Real(radius) => Complex64::new(rng.gen_range(-radius..radius), 0.0),
    }
}

fn draw_separated_real_nodes(rng: &mut ChaCha8Rng, k: usize) -> Vec<Complex64> {
    let mut xs: Vec<f64> = Vec::with_capacity(k);
    while xs.len() < k {
        let x: f64 = rng.gen_range(-NODE_RADIUS..NODE_RADIUS);
        if xs.iter().all(|&y: &f64| (y - x).abs() >= MIN_SEPARATION) {
            xs.push(x);
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.into_iter().map(|x| Complex64::new(x, 0.0)).collect()
}

fn combo_of(alpha: f64, points: &[Complex64], coeffs: &[Complex64]) -> KernelCombo {
    KernelCombo::from_raw(alpha, points, coeffs).expect("sampled instances are valid")
}

fn branch_ok_of(combo: &KernelCombo) -> bool {
    eval_vector(combo)
        .values()
        .iter()
        .all(|f| f.re > BRANCH_TOLERANCE)
}

fn norm_of(combo: &KernelCombo) -> Option<f64> {
    let gram = build_gram(combo.points(), combo.alpha()).ok()?;
    quadratic_form(combo, &gram).ok()
}

fn flag_of(e: &CoreError) -> String {
    match e {
        CoreError::BranchViolation { .. } => "branch_violation".into(),
        CoreError::IllConditioned { .. } => "ill_conditioned".into(),
        CoreError::CoincidentNodes { .. } => "coincident_nodes".into(),
        CoreError::DegenerateForm { .. } => "degenerate_form".into(),
        CoreError::SolveResidual { .. } => "solve_residual".into(),
        other => format!("error:{other:?}")
            .split_whitespace()
            .next()
            .unwrap()
            .to_string(),
    }
}

/// Draws and evaluates one sample of a scan specification.
pub fn evaluate_sample(spec: &ScanSpec, index: u64) -> Sample {
    let mut rng = sample_rng(spec.seed, index);
    let k = rng.gen_range(spec.k_range.0..=spec.k_range.1);
    let alpha = rng.gen_range(spec.alpha_range.0..=spec.alpha_range.1);
    match spec.target {
        ScanTarget::Theorem31 => theorem31(spec, index, &mut rng, k, alpha),
        ScanTarget::Theorem32 => theorem32(spec, index, &mut rng, k, alpha),
        ScanTarget::Theorem34 => theorem34(spec, index, &mut rng, alpha),
        ScanTarget::Conjecture4 => conjecture4(spec, index, &mut rng, k, alpha),
        ScanTarget::Conjecture6 => conjecture6(spec, index, &mut rng, k, alpha),
        ScanTarget::Question7 => question7(spec, index, &mut rng, k, alpha),
    }
}

fn finish(
    index: u64,
    combo: &KernelCombo,
    d: Result<f64, CoreError>,
    rejections: u32,
) -> Sample {
    let branch_ok = branch_ok_of(combo);
    let (d, flags) = match d {
        Ok(d) => (Some(d), String::new()),
        Err(e) => (None, flag_of(&e)),
    };
    Sample {
        index,
        alpha: combo.alpha(),
        k: combo.len(),
        coeffs: combo.coeffs().to_vec(),
        points: combo.points().iter().map(|p| p.value()).collect(),
        d,
        n: norm_of(combo),
        branch_ok,
        flags,
        rejections,
    }
}

/// Nonnegative coefficients on real nodes (single-real-line class).
fn theorem31(spec: &ScanSpec, index: u64, rng: &mut ChaCha8Rng, k: usize, alpha: f64) -> Sample {
    let points: Vec<Complex64> = (0..k)
        .map(|_| draw_node(rng, NodeDistribution::UniformReal))
        .collect();
    let coeffs: Vec<Complex64> = (0..k)
        .map(|_| {
            let c = draw_coeff(rng, spec.coeff_distribution);
            Complex64::new(c.re.abs(), 0.0)
        })
        .collect();
    let combo = combo_of(alpha, &points, &coeffs);
    let d = d_alpha_gamma(&combo);
    finish(index, &combo, d, 0)
}

/// Sorted real nodes; `c_2..c_k` share one real sign, `c_1` arbitrary.
/// Complex `c_1` draws are rejected until the values reach the half-plane.
fn theorem32(spec: &ScanSpec, index: u64, rng: &mut ChaCha8Rng, k: usize, alpha: f64) -> Sample {
    let mut rejections = 0;
    loop {
        let points = draw_separated_real_nodes(rng, k);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let radius = match spec.coeff_distribution {
            CoeffDistribution::ComplexBall(r) | CoeffDistribution::Nonneg(r)
            | CoeffDistribution::Real(r) => r,
        };
        let mut coeffs = vec![draw_coeff(rng, CoeffDistribution::ComplexBall(radius))];
        for _ in 1..k {
            coeffs.push(Complex64::new(sign * rng.gen_range(0.0..radius), 0.0));
        }
        let combo = combo_of(alpha, &points, &coeffs);
        if coeffs[0].im == 0.0 {
            return finish(index, &combo, d_alpha_gamma(&combo), rejections);
        }
        match d_alpha_lambda(&combo) {
            Ok(d) => return finish(index, &combo, Ok(d), rejections),
            Err(CoreError::BranchViolation { .. }) if rejections < MAX_REJECTIONS => {
                rejections += 1;
            }
            Err(e) => return finish(index, &combo, Err(e), rejections),
        }
    }
}

/// Two-kernel instances in the half-plane or real class.
fn theorem34(spec: &ScanSpec, index: u64, rng: &mut ChaCha8Rng, alpha: f64) -> Sample {
    let mut rejections = 0;
    loop {
        let points: Vec<Complex64> = (0..2)
            .map(|_| draw_node(rng, NodeDistribution::UniformReal))
            .collect();
        let gamma_instance = rng.gen_bool(0.5);
        let coeffs: Vec<Complex64> = (0..2)
            .map(|_| {
                let c = draw_coeff(rng, spec.coeff_distribution);
                if gamma_instance {
                    Complex64::new(c.re, 0.0)
                } else {
                    c
                }
            })
            .collect();
        let combo = combo_of(alpha, &points, &coeffs);
        if gamma_instance {
            return finish(index, &combo, d_alpha_gamma(&combo), rejections);
        }
        match d_alpha_lambda(&combo) {
            Ok(d) => return finish(index, &combo, Ok(d), rejections),
            Err(CoreError::BranchViolation { .. }) if rejections < MAX_REJECTIONS => {
                rejections += 1;
            }
            Err(e) => return finish(index, &combo, Err(e), rejections),
        }
    }
}

/// Half-plane class: complex coefficients on real nodes, values in the
/// right half-plane by rejection.
fn conjecture4(spec: &ScanSpec, index: u64, rng: &mut ChaCha8Rng, k: usize, alpha: f64) -> Sample {
    let mut rejections = 0;
    loop {
        let points: Vec<Complex64> = (0..k)
            .map(|_| draw_node(rng, spec.node_distribution))
            .collect();
        let coeffs: Vec<Complex64> = (0..k)
            .map(|_| draw_coeff(rng, spec.coeff_distribution))
            .collect();
        let combo = combo_of(alpha, &points, &coeffs);
        match d_alpha_lambda(&combo) {
            Ok(d) => return finish(index, &combo, Ok(d), rejections),
            Err(CoreError::BranchViolation { .. }) if rejections < MAX_REJECTIONS => {
                rejections += 1;
            }
            Err(e) => return finish(index, &combo, Err(e), rejections),
        }
    }
}

/// Inverse problem: prescribed half-plane values on distinct real nodes.
fn conjecture6(spec: &ScanSpec, index: u64, rng: &mut ChaCha8Rng, k: usize, alpha: f64) -> Sample {
    let radius = match spec.coeff_distribution {
        CoeffDistribution::ComplexBall(r) | CoeffDistribution::Nonneg(r)
        | CoeffDistribution::Real(r) => r,
    };
    let points = draw_separated_real_nodes(rng, k);
    let fvals: Vec<Complex64> = (0..k)
        .map(|_| {
            Complex64::new(
                rng.gen_range(0.05 * radius..radius),
                rng.gen_range(-radius..radius),
            )
        })
        .collect();
    let disc_points: Vec<bergman_core::DiscPoint> = points
        .iter()
        .map(|&w| bergman_core::DiscPoint::new(w).unwrap())
        .collect();
    let d = d_hat_alpha(&EvalVector::new(fvals.clone()), &disc_points, alpha);
    let gram = build_gram(&disc_points, alpha).ok();
    let n = gram.and_then(|g| {
        bergman_core::gram::projection_norm_sq(&EvalVector::new(fvals.clone()), &g).ok()
    });
    let (d, flags) = match d {
        Ok(d) => (Some(d), String::new()),
        Err(e) => (None, flag_of(&e)),
    };
    Sample {
        index,
        alpha,
        k,
        coeffs: fvals, // reproduction data: the prescribed values
        points,
        d,
        n,
        branch_ok: true,
        flags,
        rejections: 0,
    }
}

/// Null-pair instances: random rank-deficient PSD matrices with
/// nonnegative-real-part entries and `c` spanning the kernel.
fn question7(spec: &ScanSpec, index: u64, rng: &mut ChaCha8Rng, k: usize, alpha: f64) -> Sample {
    let _ = alpha; // the form is exponent-free
    let radius = match spec.coeff_distribution {
        CoeffDistribution::ComplexBall(r) | CoeffDistribution::Nonneg(r)
        | CoeffDistribution::Real(r) => r,
    };
    // phases within (-pi/4, pi/4) keep every pairwise product in the right
    // half-plane, so Re a_ij >= 0 holds by construction
    let mut a = DMatrix::<Complex64>::zeros(k, k);
    for _ in 0..k - 1 {
        let v: Vec<Complex64> = (0..k)
            .map(|_| {
                let m = rng.gen_range(0.3 * radius..radius);
                let t = rng.gen_range(-std::f64::consts::FRAC_PI_4..std::f64::consts::FRAC_PI_4);
                Complex64::new(m * t.cos(), m * t.sin())
            })
            .collect();
        for i in 0..k {
            for j in 0..k {
                a[(i, j)] += v[i] * v[j].conj();
            }
        }
    }
    let eig = a.clone().symmetric_eigen();
    let mut min_idx = 0;
    for i in 1..k {
        if eig.eigenvalues[i] < eig.eigenvalues[min_idx] {
            min_idx = i;
        }
    }
    let null_vec = eig.eigenvectors.column(min_idx);
    let coeffs: Vec<Complex64> = null_vec.iter().map(|v| v.conj()).collect();
    let d = d_tilde(&coeffs, &a);
    let (d, flags) = match d {
        Ok(d) => (Some(d), String::new()),
        Err(e) => (None, flag_of(&e)),
    };
    Sample {
        index,
        alpha,
        k,
        coeffs,
        points: Vec::new(), // the instance is a matrix, reproducible by seed
        d,
        n: Some(0.0),
        branch_ok: true,
        flags,
        rejections: 0,
    }
}
