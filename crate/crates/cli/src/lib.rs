//! Batch front end for the kernel-combination toolkit: verification
//! suites, seeded conjecture scans, parameter sweeps, path traces and the
//! counterexample reproduction, with JSON configs and CSV outputs.

pub mod config;
pub mod counterexample;
pub mod pathcmd;
pub mod sampling;
pub mod scan;
pub mod sweep;
pub mod verify;

use num_complex::Complex64;

/// Shortest round-trip decimal for a float (std formatting guarantees the
/// shortest representation that parses back exactly).
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// `re;im` with shortest round-trip components; lists join with `|`.
pub fn fmt_complex(z: Complex64) -> String {
    format!("{};{}", z.re, z.im)
}

pub fn fmt_complex_list(zs: &[Complex64]) -> String {
    zs.iter()
        .map(|&z| fmt_complex(z))
        .collect::<Vec<_>>()
        .join("|")
}

pub fn parse_complex(s: &str) -> Option<Complex64> {
    let (re, im) = s.split_once(';')?;
    Some(Complex64::new(re.parse().ok()?, im.parse().ok()?))
}

pub fn parse_complex_list(s: &str) -> Option<Vec<Complex64>> {
    if s.is_empty() {
        return Some(Vec::new());
    }
    s.split('|').map(parse_complex).collect()
}

/// Timestamp header line for CSV outputs; suppressed by the
/// `--no-timestamp` flag so that identical runs are byte-identical.
pub fn timestamp_header() -> String {
    format!("# generated={}\n", chrono::Utc::now().to_rfc3339())
}
