//! Parameter sweeps over a fixed instance: the exponent, one prescribed
//! value component, or one real coefficient. Rows where the evaluation
//! leaves its class are emitted with flags rather than dropped; value
//! columns never carry NaN or infinities.

use std::io::Write;

use anyhow::{bail, Context, Result};
use bergman_core::derivative::{d_alpha_gamma, d_alpha_lambda, d_hat_alpha, BRANCH_TOLERANCE};
use bergman_core::gram::{build_gram, eval_vector, projection_norm_sq, quadratic_form, EvalVector};
use bergman_core::{DiscPoint, KernelCombo};
use num_complex::Complex64;

use crate::config::{to_complex, SweepConfig, SweepVariable};
use crate::fmt_f64;

/// One grid point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub swept_parameter: f64,
    pub d_value: Option<f64>,
    pub n_value: Option<f64>,
    pub branch_ok: bool,
    pub flags: String,
}

fn grid_points(lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    if samples == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (samples - 1) as f64;
    let mut g: Vec<f64> = (0..samples).map(|i| lo + step * i as f64).collect();
    g[samples - 1] = hi;
    g
}

fn flag_of(e: &bergman_core::Error) -> String {
    use bergman_core::Error as E;
    match e {
        E::BranchViolation { .. } => "branch_violation".into(),
        E::IllConditioned { .. } => "ill_conditioned".into(),
        E::CoincidentNodes { .. } => "coincident_nodes".into(),
        E::DegenerateForm { .. } => "degenerate_form".into(),
        E::ClassViolation { .. } => "class_violation".into(),
        E::SolveResidual { .. } => "solve_residual".into(),
        E::NonPositiveAlpha { .. } => "nonpositive_alpha".into(),
        _ => "error".into(),
    }
}

fn branch_ok_of(combo: &KernelCombo) -> bool {
    eval_vector(combo)
        .values()
        .iter()
        .all(|f| f.re > BRANCH_TOLERANCE)
}

/// D through whichever variant the instance admits at this grid point.
fn d_of(combo: &KernelCombo) -> Result<f64, bergman_core::Error> {
    if branch_ok_of(combo) {
        d_alpha_lambda(combo)
    } else {
        d_alpha_gamma(combo)
    }
}

pub fn run_sweep(config: &SweepConfig) -> Result<(String, Vec<SweepRow>)> {
    let grid = grid_points(config.grid.lo, config.grid.hi, config.grid.samples);
    if grid.is_empty() {
        bail!("sweep grid is empty");
    }
    let points: Vec<Complex64> = config.points.iter().map(|&p| to_complex(p)).collect();
    let disc_points: Vec<DiscPoint> = points
        .iter()
        .map(|&w| DiscPoint::new(w).context("sweep node outside the disc"))
        .collect::<Result<_>>()?;

    let (param_name, rows) = match &config.vary {
        SweepVariable::Alpha => {
            let coeffs: Vec<Complex64> = config.coeffs.iter().map(|&c| to_complex(c)).collect();
            if coeffs.len() != points.len() {
                bail!("alpha sweep needs matching points and coeffs");
            }
            let rows = grid
                .iter()
                .map(|&alpha| {
                    if !(alpha > 0.0) {
                        return SweepRow {
                            swept_parameter: alpha,
                            d_value: None,
                            n_value: None,
                            branch_ok: false,
                            flags: "nonpositive_alpha".into(),
                        };
                    }
                    let combo = KernelCombo::new(alpha, disc_points.clone(), coeffs.clone())
                        .expect("validated instance");
                    let n = build_gram(combo.points(), alpha)
                        .ok()
                        .and_then(|g| quadratic_form(&combo, &g).ok());
                    match d_of(&combo) {
                        Ok(d) => SweepRow {
                            swept_parameter: alpha,
                            d_value: Some(d),
                            n_value: n,
                            branch_ok: branch_ok_of(&combo),
                            flags: String::new(),
                        },
                        Err(e) => SweepRow {
                            swept_parameter: alpha,
                            d_value: None,
                            n_value: n,
                            branch_ok: branch_ok_of(&combo),
                            flags: flag_of(&e),
                        },
                    }
                })
                .collect();
            ("alpha".to_string(), rows)
        }
        SweepVariable::ReF1 | SweepVariable::ImF1 => {
            let base: Vec<Complex64> = config.fvals.iter().map(|&f| to_complex(f)).collect();
            if base.len() != points.len() || base.is_empty() {
                bail!("value sweep needs fvals matching the points");
            }
            let imaginary = matches!(config.vary, SweepVariable::ImF1);
            let name = if imaginary { "im_f1" } else { "re_f1" };
            let rows = grid
                .iter()
                .map(|&v| {
                    let mut fvals = base.clone();
                    if imaginary {
                        fvals[0].im = v;
                    } else {
                        fvals[0].re = v;
                    }
                    let fv = EvalVector::new(fvals);
                    let n = build_gram(&disc_points, config.alpha)
                        .ok()
                        .and_then(|g| projection_norm_sq(&fv, &g).ok());
                    let branch_ok = fv.values().iter().all(|f| f.re > BRANCH_TOLERANCE);
                    match d_hat_alpha(&fv, &disc_points, config.alpha) {
                        Ok(d) => SweepRow {
                            swept_parameter: v,
                            d_value: Some(d),
                            n_value: n,
                            branch_ok,
                            flags: String::new(),
                        },
                        Err(e) => SweepRow {
                            swept_parameter: v,
                            d_value: None,
                            n_value: n,
                            branch_ok,
                            flags: flag_of(&e),
                        },
                    }
                })
                .collect();
            (name.to_string(), rows)
        }
        SweepVariable::Coeff { index } => {
            let coeffs: Vec<Complex64> = config.coeffs.iter().map(|&c| to_complex(c)).collect();
            if coeffs.len() != points.len() {
                bail!("coefficient sweep needs matching points and coeffs");
            }
            if *index >= coeffs.len() {
                bail!("coefficient index {index} out of range");
            }
            if coeffs.iter().any(|c| c.im != 0.0) || points.iter().any(|w| w.im != 0.0) {
                bail!("coefficient sweeps use the real-data variant: real coeffs and nodes");
            }
            let rows = grid
                .iter()
                .map(|&v| {
                    let mut cs = coeffs.clone();
                    cs[*index] = Complex64::new(v, 0.0);
                    let combo = KernelCombo::new(config.alpha, disc_points.clone(), cs)
                        .expect("validated instance");
                    let n = build_gram(combo.points(), config.alpha)
                        .ok()
                        .and_then(|g| quadratic_form(&combo, &g).ok());
                    match d_alpha_gamma(&combo) {
                        Ok(d) => SweepRow {
                            swept_parameter: v,
                            d_value: Some(d),
                            n_value: n,
                            branch_ok: branch_ok_of(&combo),
                            flags: String::new(),
                        },
                        Err(e) => SweepRow {
                            swept_parameter: v,
                            d_value: None,
                            n_value: n,
                            branch_ok: branch_ok_of(&combo),
                            flags: flag_of(&e),
                        },
                    }
                })
                .collect();
            (format!("c{}", index + 1), rows)
        }
    };
    Ok((param_name, rows))
}

/// CSV schema (stable): `param,value,d,n,branch_ok,flags`.
pub fn write_csv<W: Write>(
    out: &mut W,
    param_name: &str,
    rows: &[SweepRow],
    timestamp: bool,
) -> Result<()> {
    if timestamp {
        out.write_all(crate::timestamp_header().as_bytes())?;
    }
    writeln!(out, "param,value,d,n,branch_ok,flags")?;
    for row in rows {
        debug_assert!(row.d_value.map_or(true, |d| d.is_finite()));
        debug_assert!(row.n_value.map_or(true, |n| n.is_finite()));
        writeln!(
            out,
            "{},{},{},{},{},{}",
            param_name,
            fmt_f64(row.swept_parameter),
            row.d_value.map(fmt_f64).unwrap_or_default(),
            row.n_value.map(fmt_f64).unwrap_or_default(),
            row.branch_ok,
            row.flags
        )?;
    }
    Ok(())
}

pub fn write_csv_file(
    path: &std::path::Path,
    param_name: &str,
    rows: &[SweepRow],
    timestamp: bool,
) -> Result<()> {
    let mut file = std::io::BufWriter::new(
        std::fs::File::create(path)
            .with_context(|| format!("cannot create {}", path.display()))?,
    );
    write_csv(&mut file, param_name, rows, timestamp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GridSpec;

    #[test]
    fn single_kernel_alpha_sweep_is_flat() {
        let config = SweepConfig {
            vary: SweepVariable::Alpha,
            grid: GridSpec {
                lo: 1.1,
                hi: 6.0,
                samples: 25,
            },
            alpha: 2.0,
            points: vec![[0.4, 0.0]],
            coeffs: vec![[1.0, 0.0]],
            fvals: vec![],
        };
        let (name, rows) = run_sweep(&config).unwrap();
        assert_eq!(name, "alpha");
        assert_eq!(rows.len(), 25);
        for row in rows {
            assert!(row.d_value.unwrap().abs() <= 1e-10);
        }
    }

    #[test]
    fn two_kernel_alpha_sweep_stays_nonpositive() {
        let config = SweepConfig {
            vary: SweepVariable::Alpha,
            grid: GridSpec {
                lo: 1.1,
                hi: 6.0,
                samples: 50,
            },
            alpha: 2.0,
            points: vec![[0.1, 0.0], [0.5, 0.0]],
            coeffs: vec![[0.9, 0.3], [0.7, 0.0]],
            fvals: vec![],
        };
        let (_, rows) = run_sweep(&config).unwrap();
        for row in rows {
            if let Some(d) = row.d_value {
                assert!(d <= 1e-10, "k=2 sweep row with D = {d:e}");
            }
        }
    }

    #[test]
    fn value_sweep_emits_flagged_rows_instead_of_dropping() {
        // Re f_1 crosses into the left half-plane: those rows must appear
        // flagged, not vanish
        let config = SweepConfig {
            vary: SweepVariable::ReF1,
            grid: GridSpec {
                lo: -1.0,
                hi: 1.0,
                samples: 21,
            },
            alpha: 2.0,
            points: vec![[-0.3, 0.0], [0.2, 0.0], [0.6, 0.0]],
            coeffs: vec![],
            fvals: vec![[1.0, 0.2], [1.5, 0.0], [2.0, -0.4]],
        };
        let (name, rows) = run_sweep(&config).unwrap();
        assert_eq!(name, "re_f1");
        assert_eq!(rows.len(), 21);
        let flagged = rows.iter().filter(|r| !r.flags.is_empty()).count();
        assert!(flagged > 0, "expected some flagged rows");
        let valued = rows.iter().filter(|r| r.d_value.is_some()).count();
        assert!(valued > 0, "expected some valued rows");
        assert_eq!(flagged + valued, 21);
        // evidence rows stay nonpositive when f_2, f_3 sit in the half-plane
        for row in &rows {
            if let Some(d) = row.d_value {
                assert!(d <= 1e-10, "value sweep row with D = {d:e}");
            }
        }
    }

    #[test]
    fn csv_schema_is_bit_exact() {
        let rows = vec![SweepRow {
            swept_parameter: 0.5,
            d_value: Some(-0.125),
            n_value: Some(2.0),
            branch_ok: true,
            flags: String::new(),
        }];
        let mut buf = Vec::new();
        write_csv(&mut buf, "alpha", &rows, false).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "param,value,d,n,branch_ok,flags\nalpha,0.5,-0.125,2,true,\n"
        );
    }
}
