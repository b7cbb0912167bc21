//! Cross-validation suites behind `verify`: each suite checks a family of
//! closed forms against its independent oracle and reports the largest
//! relative error seen.

use anyhow::{Context, Result};
use bergman_core::derivative::derivative_report;
use bergman_core::gram::{build_gram, eval_vector, quadratic_form, KernelCombo};
use bergman_core::homotopy::mobius_reduce;
use bergman_core::kernels::principal_log;
use bergman_core::quadrature::{
    bergman_norm_sq_quad, bergman_power_norm, hardy_norm_circle, hardy_norm_sq, herglotz_log,
    i_f_quad, ii_quad, iii_ij_closed, iii_quad, weighted_disc_integral,
    weighted_disc_integral_log, zero_free_check, QuadratureConfig, DEFAULT_ZERO_FREE_RADIUS,
};
use bergman_core::series::{lhs_difference, rhs_sum, PolySeries};
use bergman_core::{DiscPoint, Error as CoreError};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::VerifyConfig;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub passed: bool,
    pub checks_run: usize,
    pub max_rel_error: f64,
    pub details: String,
    /// True when the failure came from quadrature non-convergence rather
    /// than an assertion.
    pub non_convergence: bool,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub all_passed: bool,
    pub suites: Vec<SuiteOutcome>,
}

struct SuiteRun {
    name: &'static str,
    checks: usize,
    max_rel: f64,
    failures: Vec<String>,
    non_convergence: bool,
}

impl SuiteRun {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: 0,
            max_rel: 0.0,
            failures: Vec::new(),
            non_convergence: false,
        }
    }

    fn check(&mut self, rel_error: f64, tol: f64, what: impl Fn() -> String) {
        self.checks += 1;
        self.max_rel = self.max_rel.max(rel_error);
        if !(rel_error <= tol) {
            self.failures
                .push(format!("{} (error {rel_error:e} > {tol:e})", what()));
        }
    }

    fn require(&mut self, ok: bool, what: impl Fn() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn error(&mut self, e: &CoreError, what: &str) {
        if matches!(e, CoreError::NonConvergence { .. }) {
            self.non_convergence = true;
        }
        self.failures.push(format!("{what}: {e}"));
    }

    fn finish(self) -> SuiteOutcome {
        SuiteOutcome {
            name: self.name.to_string(),
            passed: self.failures.is_empty(),
            checks_run: self.checks,
            max_rel_error: self.max_rel,
            details: self.failures.join("; "),
            non_convergence: self.non_convergence,
        }
    }
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Zero-free instance with real nodes and positive coefficients.
fn sample_zero_free(rng: &mut ChaCha8Rng, k_max: usize, cfg: &QuadratureConfig) -> KernelCombo {
    loop {
        let k = rng.gen_range(1..=k_max);
        let alpha = rng.gen_range(1.3..3.5);
        let mut ws: Vec<f64> = Vec::new();
        while ws.len() < k {
            let w: f64 = rng.gen_range(-0.75..0.75);
            if ws.iter().all(|&v: &f64| (v - w).abs() > 0.05) {
                ws.push(w);
            }
        }
        let cs: Vec<Complex64> = (0..k).map(|_| c64(rng.gen_range(0.2..1.5), 0.0)).collect();
        let combo = KernelCombo::from_raw(
            alpha,
            &ws.iter().map(|&w| c64(w, 0.0)).collect::<Vec<_>>(),
            &cs,
        )
        .unwrap();
        if zero_free_check(&combo, DEFAULT_ZERO_FREE_RADIUS, cfg).unwrap_or(false) {
            return combo;
        }
    }
}

/// Closed forms of (I_f, II, III) from the Gram data.
pub fn closed_derivative_integrals(combo: &KernelCombo) -> (f64, f64, f64) {
    let alpha = combo.alpha();
    let gram = build_gram(combo.points(), alpha).unwrap();
    let n = quadratic_form(combo, &gram).unwrap();
    let f = eval_vector(combo);
    let logs: Vec<Complex64> = f.values().iter().map(|v| v.ln()).collect();
    let c = combo.coeffs();
    let k = combo.len();
    let mut ii = Complex64::new(0.0, 0.0);
    let mut iii = Complex64::new(0.0, 0.0);
    let mut bracket = Complex64::new(0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            let a_ij = gram.entries()[(i, j)];
            let pair = c[i] * c[j].conj();
            ii += pair * a_ij * (logs[i].conj() + logs[j]);
            iii += pair * iii_ij_closed(&combo.points()[i], &combo.points()[j], alpha);
            let base =
                c64(1.0, 0.0) - combo.points()[i].value().conj() * combo.points()[j].value();
            bracket += pair
                * a_ij
                * (logs[i].conj() + logs[j] + alpha * principal_log(base).unwrap());
        }
    }
    let am1 = alpha - 1.0;
    let i_f = bracket.re / (alpha * am1) - n / (am1 * am1);
    (i_f, ii.re / (alpha * am1), iii.re)
}

fn suite_radial_moments(cfg: &VerifyConfig) -> SuiteOutcome {
    let mut run = SuiteRun::new("radial_moments");
    let q = cfg.quadrature.to_config();
    for &alpha in &[1.25, 1.5, 2.0, 3.5, 5.0] {
        match weighted_disc_integral(|_| c64(1.0, 0.0), alpha - 2.0, &q) {
            Ok(v) => run.check(rel(v.re, 1.0 / (alpha - 1.0)), 1e-8, || {
                format!("plain moment at alpha={alpha}")
            }),
            Err(e) => run.error(&e, "plain moment"),
        }
        match weighted_disc_integral_log(|_| c64(1.0, 0.0), alpha - 2.0, &q) {
            Ok(v) => {
                let exact = -1.0 / ((alpha - 1.0) * (alpha - 1.0));
                run.check((v.re - exact).abs() / exact.abs(), 1e-8, || {
                    format!("log moment at alpha={alpha}")
                });
            }
            Err(e) => run.error(&e, "log moment"),
        }
    }
    run.finish()
}

fn suite_single_kernel_flatness(_cfg: &VerifyConfig) -> SuiteOutcome {
    let mut run = SuiteRun::new("single_kernel_flatness");
    let nodes = [
        c64(0.0, 0.0),
        c64(0.3, 0.0),
        c64(0.9, 0.0),
        c64(0.0, 0.5),
        c64(-0.7, 0.1),
    ];
    for &alpha in &[1.1, 1.5, 2.0, 3.0, 5.0] {
        for &w in &nodes {
            let combo = KernelCombo::from_raw(alpha, &[w], &[c64(1.0, 0.0)]).unwrap();
            match derivative_report(&combo) {
                Ok(report) => run.require(report.dn_dalpha.abs() <= 1e-10, || {
                    format!(
                        "single kernel at alpha={alpha}, w={w}: dN/dalpha = {:e}",
                        report.dn_dalpha
                    )
                }),
                Err(e) => run.error(&e, "single kernel report"),
            }
        }
    }
    run.finish()
}

fn suite_oracle_equivalence(cfg: &VerifyConfig) -> SuiteOutcome {
    let mut run = SuiteRun::new("oracle_equivalence");
    let q = cfg.quadrature.to_config();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..50 {
        let combo = sample_zero_free(&mut rng, 3, &q);
        let (i_closed, ii_closed, iii_closed) = closed_derivative_integrals(&combo);
        let i_q = match i_f_quad(&combo, &q) {
            Ok(v) => v,
            Err(e) => {
                run.error(&e, "I_f quadrature");
                continue;
            }
        };
        let ii_q = match ii_quad(&combo, &q) {
            Ok(v) => v,
            Err(e) => {
                run.error(&e, "II quadrature");
                continue;
            }
        };
        let iii_q = match iii_quad(&combo, &q) {
            Ok(v) => v,
            Err(e) => {
                run.error(&e, "III quadrature");
                continue;
            }
        };
        run.check(rel(i_q, i_closed), 1e-6, || "I_f closed vs quadrature".into());
        run.check(rel(ii_q, ii_closed), 1e-8, || "II closed vs quadrature".into());
        run.check(rel(iii_q, iii_closed), 1e-8, || {
            "III closed vs quadrature".into()
        });
        run.check(
            (i_q - ii_q - iii_q).abs() / (1.0 + i_q.abs()),
            1e-8,
            || "I = II + III decomposition".into(),
        );
        let gram = build_gram(combo.points(), combo.alpha()).unwrap();
        let closed_n = quadratic_form(&combo, &gram).unwrap();
        match bergman_norm_sq_quad(&combo, &q) {
            Ok(quad_n) => run.check(
                (quad_n - closed_n).abs() / (1.0 + closed_n),
                1e-8,
                || "Gram form vs norm quadrature".into(),
            ),
            Err(e) => run.error(&e, "norm quadrature"),
        }
    }
    run.finish()
}

fn suite_gradient_check(cfg: &VerifyConfig) -> SuiteOutcome {
    let mut run = SuiteRun::new("gradient_check");
    let q = cfg.quadrature.to_config();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e3779b97f4a7c15);
    let h = 1e-3;
    for _ in 0..20 {
        let combo = sample_zero_free(&mut rng, 3, &q);
        let alpha = combo.alpha();
        let report = match derivative_report(&combo) {
            Ok(r) => r,
            Err(e) => {
                run.error(&e, "derivative report");
                continue;
            }
        };
        let (plus, minus) = match (
            bergman_power_norm(&combo, alpha + h, &q),
            bergman_power_norm(&combo, alpha - h, &q),
        ) {
            (Ok(p), Ok(m)) => (p, m),
            (Err(e), _) | (_, Err(e)) => {
                run.error(&e, "power norm");
                continue;
            }
        };
        let fd_pow = (plus - minus) / (2.0 * h);
        run.check(
            (fd_pow - report.dnpow_dalpha).abs() / report.dnpow_dalpha.abs().max(1e-3),
            1e-4,
            || "d/dalpha N^(2 alpha) vs finite differences".into(),
        );
        let n_plus = plus.powf(1.0 / (2.0 * (alpha + h)));
        let n_minus = minus.powf(1.0 / (2.0 * (alpha - h)));
        let fd_n = (n_plus - n_minus) / (2.0 * h);
        run.check(
            (fd_n - report.dn_dalpha).abs() / report.dn_dalpha.abs().max(1e-3),
            1e-4,
            || "d/dalpha N vs finite differences".into(),
        );
    }
    run.finish()
}

fn suite_series_identity(cfg: &VerifyConfig) -> SuiteOutcome {
    let mut run = SuiteRun::new("series_identity");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5bf0a8b1);
    // hand case: both sides are exactly 1/24
    let hand = PolySeries::from_real(&[1.0, 0.5]);
    run.check(
        (lhs_difference(&hand, 2) - 1.0 / 24.0).abs(),
        1e-14,
        || "hand case left side".into(),
    );
    match rhs_sum(&hand, 2, 4) {
        Ok(r) => run.check((r - 1.0 / 24.0).abs(), 1e-14, || "hand case right side".into()),
        Err(e) => run.error(&e, "hand case right side"),
    }
    for &alpha in &[2u32, 3] {
        for _ in 0..20 {
            let degree = rng.gen_range(1..=4usize);
            let mut coeffs = vec![c64(1.0, 0.0)];
            for _ in 0..degree {
                coeffs.push(c64(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)));
            }
            let f = PolySeries::new(coeffs);
            let lhs = lhs_difference(&f, alpha);
            match rhs_sum(&f, alpha, alpha as usize * degree) {
                Ok(rhs) => {
                    run.check((lhs - rhs).abs(), 1e-10, || {
                        format!("identity at alpha={alpha}, degree={degree}")
                    });
                    run.require(rhs >= 0.0, || "right side must be nonnegative".into());
                }
                Err(e) => run.error(&e, "right side"),
            }
        }
    }
    run.finish()
}

fn suite_counterexample(_cfg: &VerifyConfig) -> SuiteOutcome {
    let mut run = SuiteRun::new("counterexample");
    match crate::counterexample::run(2.0) {
        Ok(report) => {
            run.require(report.min_eigenvalue_of_neg_b <= -1e-4, || {
                format!("min eig of -B = {:e}", report.min_eigenvalue_of_neg_b)
            });
            run.require((report.d_alpha + 1.163e-3).abs() <= 1e-5, || {
                format!("D = {:e} left the expected band", report.d_alpha)
            });
            run.require(report.d_alpha <= 0.0, || "D must stay nonpositive".into());
        }
        Err(e) => run.failures.push(format!("counterexample: {e}")),
    }
    run.finish()
}

fn suite_mobius_invariance(cfg: &VerifyConfig) -> SuiteOutcome {
    let mut run = SuiteRun::new("mobius_invariance");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x2545f491);
    let mut checked = 0;
    while checked < 200 {
        let k = rng.gen_range(1..=5);
        let alpha = rng.gen_range(0.3..4.0);
        let mut ws: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.85..0.85)).collect();
        ws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cs: Vec<Complex64> = (0..k)
            .map(|_| c64(rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2)))
            .collect();
        let combo = KernelCombo::from_raw(
            alpha,
            &ws.iter().map(|&w| c64(w, 0.0)).collect::<Vec<_>>(),
            &cs,
        )
        .unwrap();
        let Ok(d) = bergman_core::derivative::d_alpha_lambda(&combo) else {
            continue;
        };
        let reduced = match mobius_reduce(&combo) {
            Ok(r) => r,
            Err(e) => {
                run.error(&e, "reduction");
                continue;
            }
        };
        let Ok(d_reduced) = bergman_core::derivative::d_alpha_lambda(&reduced) else {
            continue;
        };
        checked += 1;
        run.check(
            (d - d_reduced).abs() / (1.0 + d.abs()),
            1e-8,
            || "D invariance under reduction".into(),
        );
    }
    run.finish()
}

fn suite_hardy_circle(cfg: &VerifyConfig) -> SuiteOutcome {
    let mut run = SuiteRun::new("hardy_circle");
    let q = cfg.quadrature.to_config();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6c62272e);
    for _ in 0..10 {
        let k = rng.gen_range(1..=3);
        let ws: Vec<Complex64> = (0..k)
            .map(|_| c64(rng.gen_range(-0.55..0.55), rng.gen_range(-0.35..0.35)))
            .collect();
        let cs: Vec<Complex64> = (0..k)
            .map(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let combo = KernelCombo::from_raw(1.0, &ws, &cs).unwrap();
        let closed = match hardy_norm_sq(&combo) {
            Ok(v) => v,
            Err(e) => {
                run.error(&e, "closed Hardy norm");
                continue;
            }
        };
        if closed < 1e-3 {
            continue;
        }
        match hardy_norm_circle(|r, t| combo.eval(r * c64(t.cos(), t.sin())), &q) {
            Ok(circle) => run.check((circle - closed).abs() / closed, 1e-7, || {
                "circle rule vs closed Hardy norm".into()
            }),
            Err(e) => run.error(&e, "circle rule"),
        }
    }
    run.finish()
}

fn suite_herglotz(cfg: &VerifyConfig) -> SuiteOutcome {
    let mut run = SuiteRun::new("herglotz");
    let q = cfg.quadrature.to_config();
    let combo = KernelCombo::from_raw(
        2.0,
        &[c64(0.3, 0.0), c64(-0.2, 0.0)],
        &[c64(1.0, 0.0), c64(0.5, 0.0)],
    )
    .unwrap();
    let modulus = |theta: f64| combo.eval(c64(theta.cos(), theta.sin())).norm();
    for &x in &[0.0, 0.4, -0.5, 0.85] {
        for &y in &[0.0, 0.3] {
            let z = c64(x, y);
            if z.norm() > 0.9 {
                continue;
            }
            let z = DiscPoint::new(z).unwrap();
            let direct = principal_log(combo.eval(z.value())).unwrap();
            match herglotz_log(modulus, &z, &q) {
                Ok(h) => run.check((h - direct).norm(), 1e-7, || {
                    format!("Herglotz log at z = {}", z.value())
                }),
                Err(e) => run.error(&e, "Herglotz integral"),
            }
        }
    }
    run.finish()
}

type SuiteFn = fn(&VerifyConfig) -> SuiteOutcome;

pub fn suite_registry() -> Vec<(&'static str, SuiteFn)> {
    vec![
        ("radial_moments", suite_radial_moments),
        ("single_kernel_flatness", suite_single_kernel_flatness),
        ("oracle_equivalence", suite_oracle_equivalence),
        ("gradient_check", suite_gradient_check),
        ("series_identity", suite_series_identity),
        ("counterexample", suite_counterexample),
        ("mobius_invariance", suite_mobius_invariance),
        ("hardy_circle", suite_hardy_circle),
        ("herglotz", suite_herglotz),
    ]
}

/// Runs the selected suites (all when the filter is empty).
pub fn run_verify(cfg: &VerifyConfig, only: Option<&str>) -> Result<VerifyReport> {
    let registry = suite_registry();
    let selected: Vec<&(&'static str, SuiteFn)> = registry
        .iter()
        .filter(|(name, _)| {
            if let Some(filter) = only {
                name == &filter
            } else if cfg.suites.is_empty() {
                true
            } else {
                cfg.suites.iter().any(|s| s == name)
            }
        })
        .collect();
    if selected.is_empty() {
        anyhow::bail!(
            "no suite matches; known suites: {}",
            registry
                .iter()
                .map(|(n, _)| *n)
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    let suites: Vec<SuiteOutcome> = selected.iter().map(|(_, f)| f(cfg)).collect();
    let all_passed = suites.iter().all(|s| s.passed);
    Ok(VerifyReport { all_passed, suites })
}

pub fn write_report(path: &std::path::Path, report: &VerifyReport) -> Result<()> {
    let text = serde_json::to_string_pretty(report).context("serializing report")?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
