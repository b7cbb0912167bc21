//! Path traces as CSV: the exponent homotopy, the rank-one interpolation,
//! and the two-kernel norm path, with the monotonicity verdict in a
//! trailing summary row.

use std::io::Write;

use anyhow::{bail, Context, Result};
use bergman_core::homotopy::{
    mobius_reduce, normalize_two_kernel, path_a, path_b, refine_until_stable,
    two_kernel_norm_path, uniform_grid, PathKind, PathTrace, DEFAULT_GRID_SAMPLES, DEFAULT_SLACK,
};

use crate::config::{PathConfig, PathKindConfig};
use crate::fmt_f64;

pub fn run_path(config: &PathConfig) -> Result<PathTrace> {
    let combo = config.combo()?;
    let alpha = config.alpha;
    let (lo, hi) = match config.kind {
        PathKindConfig::PathA => (0.0, alpha),
        PathKindConfig::PathB => (0.0, 1.0),
        PathKindConfig::NormPath => (1.0, alpha),
    };
    let (lo, hi, samples) = match config.grid {
        Some(g) => (g.lo, g.hi, g.samples),
        None => (lo, hi, DEFAULT_GRID_SAMPLES),
    };
    if samples == 0 {
        bail!("path grid needs at least one sample");
    }
    let sample_trace = |n: usize| -> bergman_core::Result<PathTrace> {
        let grid = uniform_grid(lo, hi, n);
        match config.kind {
            PathKindConfig::PathA => {
                // the exponent homotopy needs the first node at the origin
                let reduced = if combo.points()[0].value().norm() == 0.0 {
                    combo.clone()
                } else {
                    mobius_reduce(&combo)?
                };
                path_a(&reduced, &grid)
            }
            PathKindConfig::PathB => path_b(&combo, &grid),
            PathKindConfig::NormPath => {
                let normalized = normalize_two_kernel(&combo)?;
                two_kernel_norm_path(&normalized, &grid)
            }
        }
    };
    let trace = if config.grid.is_some() {
        sample_trace(samples).context("path trace failed")?
    } else {
        // default grids refine until the monotonicity verdict is stable
        // across two refinements
        refine_until_stable(sample_trace, samples, 4).context("path trace failed")?
    };
    Ok(trace)
}

/// CSV: `t,value` rows, then a summary row with the verdicts.
pub fn write_csv<W: Write>(out: &mut W, trace: &PathTrace, timestamp: bool) -> Result<()> {
    if timestamp {
        out.write_all(crate::timestamp_header().as_bytes())?;
    }
    writeln!(out, "t,value")?;
    for (t, v) in trace.grid().iter().zip(trace.values()) {
        writeln!(out, "{},{}", fmt_f64(*t), fmt_f64(*v))?;
    }
    let kind = match trace.kind() {
        PathKind::PathA => "path_a",
        PathKind::PathB => "path_b",
        PathKind::NormPath => "norm_path",
    };
    writeln!(
        out,
        "verdict,kind={};nonincreasing={};nondecreasing={}",
        kind,
        trace.monotone_nonincreasing(),
        trace.nondecreasing_within(DEFAULT_SLACK)
    )?;
    Ok(())
}

pub fn write_csv_file(path: &std::path::Path, trace: &PathTrace, timestamp: bool) -> Result<()> {
    let mut file = std::io::BufWriter::new(
        std::fs::File::create(path)
            .with_context(|| format!("cannot create {}", path.display()))?,
    );
    write_csv(&mut file, trace, timestamp)
}
