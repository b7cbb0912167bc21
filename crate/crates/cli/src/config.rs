//! JSON-facing configuration types for scans, sweeps, path traces and the
//! verification suites.

use std::path::Path;

use anyhow::{bail, Context, Result};
use bergman_core::quadrature::QuadratureConfig;
use bergman_core::KernelCombo;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScanTarget {
    Conjecture4,
    Conjecture6,
    Question7,
    Theorem31,
    Theorem32,
    Theorem34,
}

impl ScanTarget {
    pub fn name(&self) -> &'static str {
        match self {
            ScanTarget::Conjecture4 => "conjecture4",
            ScanTarget::Conjecture6 => "conjecture6",
            ScanTarget::Question7 => "question7",
            ScanTarget::Theorem31 => "theorem31",
            ScanTarget::Theorem32 => "theorem32",
            ScanTarget::Theorem34 => "theorem34",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeDistribution {
    /// Uniform on the real interval `(-0.9, 0.9)`.
    UniformReal,
    /// Area-uniform on the disc of radius 0.9.
    UniformDisc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffDistribution {
    /// Uniform on the complex disc of the given radius.
    ComplexBall(f64),
    /// Uniform on `[0, radius]`.
    Nonneg(f64),
    /// Uniform on `[-radius, radius]`.
    Real(f64),
}

/// One conjecture/theorem scan: what to sample, how much, and from where.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanSpec {
    pub target: ScanTarget,
    pub samples: usize,
    pub k_range: (usize, usize),
    pub alpha_range: (f64, f64),
    pub seed: u64,
    pub node_distribution: NodeDistribution,
    pub coeff_distribution: CoeffDistribution,
}

impl ScanSpec {
    /// Target-appropriate defaults; ranges keep the quadratic form small
    /// enough that the 1e-10 sign thresholds sit far above roundoff.
    pub fn defaults_for(target: ScanTarget) -> Self {
        let (k_range, alpha_range, node, coeff) = match target {
            ScanTarget::Theorem31 => (
                (1, 5),
                (0.1, 6.0),
                NodeDistribution::UniformReal,
                CoeffDistribution::Nonneg(1.0),
            ),
            ScanTarget::Theorem32 => (
                (2, 5),
                (0.2, 4.0),
                NodeDistribution::UniformReal,
                CoeffDistribution::ComplexBall(1.0),
            ),
            ScanTarget::Theorem34 => (
                (2, 2),
                (0.2, 4.0),
                NodeDistribution::UniformReal,
                CoeffDistribution::ComplexBall(1.2),
            ),
            ScanTarget::Conjecture4 => (
                (1, 5),
                (0.2, 4.0),
                NodeDistribution::UniformReal,
                CoeffDistribution::ComplexBall(1.0),
            ),
            ScanTarget::Conjecture6 => (
                (1, 4),
                (0.2, 4.0),
                NodeDistribution::UniformReal,
                CoeffDistribution::ComplexBall(1.5),
            ),
            ScanTarget::Question7 => (
                (2, 5),
                (0.2, 4.0),
                NodeDistribution::UniformReal,
                CoeffDistribution::ComplexBall(1.0),
            ),
        };
        Self {
            target,
            samples: 1000,
            k_range,
            alpha_range,
            seed: 1,
            node_distribution: node,
            coeff_distribution: coeff,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            bail!("samples must be >= 1");
        }
        if self.k_range.0 == 0 || self.k_range.0 > self.k_range.1 {
            bail!("k range {:?} is empty", self.k_range);
        }
        if !(self.alpha_range.0 > 0.0) || self.alpha_range.0 > self.alpha_range.1 {
            bail!("alpha range {:?} is empty or nonpositive", self.alpha_range);
        }
        if self.target == ScanTarget::Theorem34 && self.k_range != (2, 2) {
            bail!("theorem34 scans need k = 2");
        }
        if self.target == ScanTarget::Question7 && self.k_range.0 < 2 {
            bail!("question7 scans need k >= 2 (rank-deficient matrices)");
        }
        if self.target == ScanTarget::Conjecture6
            && !matches!(self.coeff_distribution, CoeffDistribution::ComplexBall(_))
        {
            bail!("conjecture6 samples half-plane values; use a complex_ball distribution");
        }
        Ok(())
    }
}

/// A complex number in configs: `[re, im]`.
pub type Cplx = [f64; 2];

pub fn to_complex(c: Cplx) -> Complex64 {
    Complex64::new(c[0], c[1])
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepVariable {
    /// Vary the exponent of a fixed combination.
    Alpha,
    /// Vary `Re f_1` of fixed prescribed values (inverse-problem form).
    ReF1,
    /// Vary `Im f_1` of fixed prescribed values.
    ImF1,
    /// Vary one real coefficient of a real-data instance.
    Coeff { index: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub vary: SweepVariable,
    pub grid: GridSpec,
    pub alpha: f64,
    pub points: Vec<Cplx>,
    #[serde(default)]
    pub coeffs: Vec<Cplx>,
    #[serde(default)]
    pub fvals: Vec<Cplx>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKindConfig {
    PathA,
    PathB,
    NormPath,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathConfig {
    pub kind: PathKindConfig,
    pub alpha: f64,
    pub points: Vec<Cplx>,
    pub coeffs: Vec<Cplx>,
    /// Defaults per kind: `[0, alpha]` / `[0, 1]` / `[1, alpha]` with 201
    /// samples.
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

impl PathConfig {
    pub fn combo(&self) -> Result<KernelCombo> {
        build_combo(self.alpha, &self.points, &self.coeffs)
    }
}

pub fn build_combo(alpha: f64, points: &[Cplx], coeffs: &[Cplx]) -> Result<KernelCombo> {
    let ws: Vec<Complex64> = points.iter().map(|&p| to_complex(p)).collect();
    let cs: Vec<Complex64> = coeffs.iter().map(|&c| to_complex(c)).collect();
    KernelCombo::from_raw(alpha, &ws, &cs).context("invalid kernel combination")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSettings {
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    pub max_refinements: u32,
    pub rel_tol: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        Self {
            radial_nodes: q.radial_nodes,
            angular_nodes: q.angular_nodes,
            max_refinements: q.max_refinements,
            rel_tol: q.rel_tol,
        }
    }
}

impl QuadratureSettings {
    pub fn to_config(&self) -> QuadratureConfig {
        QuadratureConfig {
            radial_nodes: self.radial_nodes,
            angular_nodes: self.angular_nodes,
            max_refinements: self.max_refinements,
            rel_tol: self.rel_tol,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub quadrature: QuadratureSettings,
    /// Suites to run; empty means all.
    pub suites: Vec<String>,
    pub seed: u64,
    /// Where the machine-readable report goes.
    pub report: Option<String>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            quadrature: QuadratureSettings::default(),
            suites: Vec::new(),
            seed: 7,
            report: None,
        }
    }
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse config {}", path.display()))
}
