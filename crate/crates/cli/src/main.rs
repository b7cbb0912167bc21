use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use bergman_cli::config::{load_json, PathConfig, ScanSpec, ScanTarget, SweepConfig, VerifyConfig};
use bergman_cli::{counterexample, pathcmd, scan, sweep, verify};

/// Numerical explorer for norms of reproducing-kernel combinations on the
/// unit disc: verification suites, seeded scans, sweeps and path traces.
#[derive(Parser)]
#[command(name = "bergman", version, about)]
struct Cli {
    /// Worker threads for scans and sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,

    /// Omit the timestamp header line from CSV outputs (makes identical
    /// runs byte-identical).
    #[arg(long, global = true)]
    no_timestamp: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the cross-validation suites and write a JSON report.
    Verify {
        /// Run a single suite by name.
        #[arg(long)]
        suite: Option<String>,
        /// JSON config with quadrature settings and suite selection.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Sample a conjecture or theorem target and record the extremes.
    Scan {
        #[arg(long, value_enum)]
        target: ScanTarget,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of kernels, as MIN..MAX.
        #[arg(long, value_parser = parse_usize_range)]
        k: Option<(usize, usize)>,
        /// Exponent range, as LO..HI.
        #[arg(long, value_parser = parse_f64_range)]
        alpha: Option<(f64, f64)>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep one parameter of a fixed instance into CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Trace a homotopy path into CSV.
    Path {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reproduce the indefinite -B counterexample.
    Counterexample {
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
    },
}

fn parse_usize_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected MIN..MAX, got {s}"))?;
    Ok((
        lo.parse().map_err(|e| format!("bad MIN: {e}"))?,
        hi.parse().map_err(|e| format!("bad MAX: {e}"))?,
    ))
}

fn parse_f64_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got {s}"))?;
    Ok((
        lo.parse().map_err(|e| format!("bad LO: {e}"))?,
        hi.parse().map_err(|e| format!("bad HI: {e}"))?,
    ))
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

fn exit_for_error(e: &anyhow::Error) -> u8 {
    if let Some(core) = e.downcast_ref::<bergman_core::Error>() {
        return match core {
            bergman_core::Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
            bergman_core::Error::Precondition(_) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        };
    }
    EXIT_CONFIG
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("cannot size the worker pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let timestamp = !cli.no_timestamp;
    let quiet = cli.quiet;

    let code = match run(cli.command, timestamp, quiet) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_for_error(&e)
        }
    };
    ExitCode::from(code)
}

fn run(command: Command, timestamp: bool, quiet: bool) -> Result<u8> {
    match command {
        Command::Verify { suite, config } => {
            let cfg: VerifyConfig = match config {
                Some(path) => load_json(&path)?,
                None => VerifyConfig::default(),
            };
            let report = verify::run_verify(&cfg, suite.as_deref())?;
            for s in &report.suites {
                if !quiet {
                    println!(
                        "{:<24} {}  checks={} max_rel_error={:.3e}{}",
                        s.name,
                        if s.passed { "PASS" } else { "FAIL" },
                        s.checks_run,
                        s.max_rel_error,
                        if s.details.is_empty() {
                            String::new()
                        } else {
                            format!("  [{}]", s.details)
                        }
                    );
                }
            }
            let report_path = PathBuf::from(
                cfg.report
                    .clone()
                    .unwrap_or_else(|| "verify_report.json".into()),
            );
            verify::write_report(&report_path, &report)?;
            if !quiet {
                println!(
                    "report written to {} ({})",
                    report_path.display(),
                    if report.all_passed {
                        "all passed"
                    } else {
                        "FAILURES"
                    }
                );
            }
            if report.all_passed {
                Ok(0)
            } else if report
                .suites
                .iter()
                .filter(|s| !s.passed)
                .all(|s| s.non_convergence)
            {
                Ok(EXIT_NONCONVERGENCE)
            } else {
                Ok(EXIT_FAILURE)
            }
        }
        Command::Scan {
            target,
            samples,
            seed,
            k,
            alpha,
            out,
        } => {
            let mut spec = ScanSpec::defaults_for(target);
            spec.samples = samples;
            spec.seed = seed;
            if let Some(k) = k {
                spec.k_range = k;
            }
            if let Some(alpha) = alpha {
                spec.alpha_range = alpha;
            }
            spec.validate()?;
            let outcome = scan::run_scan(&spec)?;
            scan::write_csv_file(&out, &outcome, timestamp)?;
            if !quiet {
                println!(
                    "{}: {} samples, {} positive, {} flagged, max D = {}; rows -> {}",
                    spec.target.name(),
                    outcome.samples_run,
                    outcome.positive_count,
                    outcome.flagged_count,
                    outcome
                        .max_d()
                        .map(|d| format!("{d:e}"))
                        .unwrap_or_else(|| "n/a".into()),
                    out.display()
                );
            }
            Ok(if outcome.passed() { 0 } else { EXIT_FAILURE })
        }
        Command::Sweep { config, out } => {
            let cfg: SweepConfig = load_json(&config)?;
            let (param, rows) = sweep::run_sweep(&cfg)?;
            sweep::write_csv_file(&out, &param, &rows, timestamp)?;
            if !quiet {
                let flagged = rows.iter().filter(|r| !r.flags.is_empty()).count();
                println!(
                    "swept {param}: {} rows ({flagged} flagged) -> {}",
                    rows.len(),
                    out.display()
                );
            }
            Ok(0)
        }
        Command::Path { config, out } => {
            let cfg: PathConfig = load_json(&config)?;
            let trace = pathcmd::run_path(&cfg).context("path trace failed")?;
            pathcmd::write_csv_file(&out, &trace, timestamp)?;
            if !quiet {
                println!(
                    "path with {} samples, endpoints {:?} -> {}",
                    trace.values().len(),
                    trace.endpoint_values(),
                    out.display()
                );
            }
            Ok(0)
        }
        Command::Counterexample { alpha } => {
            let report = counterexample::run(alpha)?;
            print!("{}", counterexample::render(&report));
            Ok(if report.reproduced() { 0 } else { EXIT_FAILURE })
        }
    }
}
