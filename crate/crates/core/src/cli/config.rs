//! Experiment configuration files (TOML, one experiment per file).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::covmodels::{CovarianceFamily, CovarianceModel, SlowlyVarying};
use crate::error::{Error, Result};
use crate::functionals::{WeightFamily, WeightFunction};
use crate::hermite::TestFunction;
use crate::limitdist::{RectDomain, StudyKind};

/// Experiment kinds; each is also a subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    HermiteCoeffs,
    FieldValidate,
    MsdRatio,
    L12,
    KernelCheck,
    LimitSample,
    ConvergenceStudy,
    Theorem1Demo,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::HermiteCoeffs => "hermite-coeffs",
            Self::FieldValidate => "field-validate",
            Self::MsdRatio => "msd-ratio",
            Self::L12 => "l12",
            Self::KernelCheck => "kernel-check",
            Self::LimitSample => "limit-sample",
            Self::ConvergenceStudy => "convergence-study",
            Self::Theorem1Demo => "theorem1-demo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    /// Output directory, overridden by `--out`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub weight: Option<WeightFamily>,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub hermite: Option<HermiteSection>,
    #[serde(default)]
    pub field: Option<FieldSection>,
    #[serde(default)]
    pub msd: Option<MsdSection>,
    #[serde(default)]
    pub l12: Option<L12Section>,
    #[serde(default)]
    pub kernel: Option<KernelSection>,
    #[serde(default)]
    pub lemma1: Option<Lemma1Section>,
    #[serde(default)]
    pub limit: Option<LimitSection>,
    #[serde(default)]
    pub study: Option<StudySection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n: usize,
    pub alpha: f64,
    #[serde(flatten)]
    pub family: CovarianceFamily,
    /// Slowly varying factor; defaults to the one the family carries
    /// (`cauchy-factor(alpha)` for `cauchy`, the constant 1 otherwise).
    #[serde(default)]
    pub l: Option<SlowlyVarying>,
}

impl ModelSpec {
    pub fn build(&self) -> Result<CovarianceModel> {
        let l = self.l.clone().unwrap_or(match self.family {
            CovarianceFamily::Cauchy => SlowlyVarying::CauchyFactor { alpha: self.alpha },
            _ => SlowlyVarying::Constant { c: 1.0 },
        });
        CovarianceModel::new(self.n, self.alpha, self.family.clone(), l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl DomainSpec {
    pub fn build(&self) -> Result<RectDomain> {
        RectDomain::new(self.a.clone(), self.b.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HermiteSection {
    pub functions: Vec<TestFunction>,
    #[serde(default = "d_jmax")]
    pub jmax: usize,
    #[serde(default = "d_nodes")]
    pub nodes: usize,
    #[serde(default = "d_rank_tol")]
    pub rank_tol: f64,
    /// Largest order of the quadrature orthogonality table.
    #[serde(default)]
    pub orthogonality_max: Option<usize>,
    #[serde(default)]
    pub mc: Option<HermiteMc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HermiteMc {
    /// Order pairs `(m1, m2)`.
    pub pairs: Vec<[usize; 2]>,
    pub lags: Vec<f64>,
    pub reps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldMethod {
    Exact,
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub method: FieldMethod,
    pub counts: Vec<usize>,
    #[serde(default)]
    pub spacing: Option<Vec<f64>>,
    pub replicates: usize,
    pub lags: Vec<Vec<i64>>,
    #[serde(default = "d_cutoff")]
    pub cutoff: f64,
    #[serde(default = "d_cells")]
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MsdSection {
    pub m: usize,
    /// Isotropic extents `T` (the same on every axis).
    pub t_ladder: Vec<f64>,
    #[serde(default = "d_ppu")]
    pub points_per_unit: usize,
    #[serde(default = "d_depth")]
    pub subdivision_depth: usize,
    /// Monte Carlo replicates of `E[(integral - sum)^2]`; 0 disables.
    #[serde(default)]
    pub mc_replicates: usize,
    #[serde(default = "d_mc_q")]
    pub mc_q: usize,
    /// Quasi-random cross-check of `D1`; 0 disables.
    #[serde(default)]
    pub qmc_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct L12Section {
    pub m: usize,
    pub a: Vec<f64>,
    #[serde(default = "d_l12_points")]
    pub points: usize,
    #[serde(default = "d_depth")]
    pub subdivision_depth: usize,
    /// Extents at which `D1 / (m! T^{2n - m alpha} L^m(T) g^2(T 1))` is compared with the constant.
    #[serde(default)]
    pub d1_ladder: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    #[serde(default = "d_kernel_points")]
    pub points: usize,
    #[serde(default = "d_range")]
    pub range: f64,
    #[serde(default = "d_kernel_quad")]
    pub quad_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma1Section {
    pub kappa: usize,
    pub tau: Vec<f64>,
    pub r_ladder: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSection {
    pub kappa: usize,
    pub nsamples: usize,
    #[serde(default = "d_cutoff")]
    pub cutoff: f64,
    #[serde(default)]
    pub cells: Option<usize>,
    /// Truncation radius of the spectral variance integral.
    #[serde(default = "d_radius")]
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    /// Limit targeted by a convergence study.
    #[serde(default)]
    pub target: Option<StudyKind>,
    pub t_ladder: Vec<f64>,
    pub reps: usize,
    #[serde(default = "d_limit_samples")]
    pub limit_samples: usize,
    /// Reduction demo: cells per unit length.
    #[serde(default = "d_q")]
    pub q: usize,
    /// Reduction demo: Hermite rank of the test function.
    #[serde(default)]
    pub kappa: Option<usize>,
    #[serde(default)]
    pub test_function: Option<TestFunction>,
    #[serde(default)]
    pub cutoff: Option<f64>,
    #[serde(default)]
    pub cells: Option<usize>,
}

fn d_jmax() -> usize {
    20
}
fn d_nodes() -> usize {
    200
}
fn d_rank_tol() -> f64 {
    1e-8
}
fn d_cutoff() -> f64 {
    40.0
}
fn d_cells() -> usize {
    64
}
fn d_ppu() -> usize {
    8
}
fn d_depth() -> usize {
    4
}
fn d_mc_q() -> usize {
    8
}
fn d_l12_points() -> usize {
    12
}
fn d_kernel_points() -> usize {
    100
}
fn d_range() -> f64 {
    10.0
}
fn d_kernel_quad() -> usize {
    8
}
fn d_radius() -> f64 {
    64.0
}
fn d_limit_samples() -> usize {
    20_000
}
fn d_q() -> usize {
    2
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub(crate) fn model(&self) -> Result<CovarianceModel> {
        self.model.as_ref().ok_or_else(|| missing("model"))?.build()
    }

    pub(crate) fn domain(&self) -> Result<RectDomain> {
        self.domain.as_ref().ok_or_else(|| missing("domain"))?.build()
    }

    /// Weight function; `g = 1` when the section is absent.
    pub(crate) fn weight(&self, n: usize) -> Result<WeightFunction> {
        match &self.weight {
            Some(f) => WeightFunction::new(n, f.clone()),
            None => Ok(WeightFunction::constant(n, 1.0)),
        }
    }
}

pub(crate) fn missing(section: &str) -> Error {
    Error::Input(format!("missing [{section}] section"))
}
