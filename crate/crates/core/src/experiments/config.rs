//! Declarative experiment description, read from TOML or JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{ExogenousDrive, MemoryKernel, SpatialFunction, SpatialKernel, SynapticResponse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Check,
    Macro,
    Stability,
    FiniteTime,
    Phase,
    NoiseScaling,
    GraphDiag,
}

/// A function on [0, 1]: a constant, ascending polynomial coefficients, or
/// a two-column CSV table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Constant(f64),
    Polynomial(Vec<f64>),
    Table { csv: PathBuf },
}

impl FunctionSpec {
    pub fn build(&self) -> Result<SpatialFunction> {
        match self {
            Self::Constant(c) => Ok(SpatialFunction::Constant(*c)),
            Self::Polynomial(coeffs) => SpatialFunction::polynomial(coeffs.clone()),
            Self::Table { csv } => SpatialFunction::from_csv(csv),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Constant { value: f64 },
    ExpDistance { sigma: f64 },
    Edd { f: FunctionSpec, g: FunctionSpec },
    PNearest { r: f64 },
    Sbm { boundaries: Vec<f64>, probs: Vec<Vec<f64>> },
}

impl KernelSpec {
    pub fn build(&self) -> Result<SpatialKernel> {
        match self {
            Self::Constant { value } => SpatialKernel::constant(*value),
            Self::ExpDistance { sigma } => SpatialKernel::exp_distance(*sigma),
            Self::Edd { f, g } => SpatialKernel::edd(f.build()?, g.build()?),
            Self::PNearest { r } => SpatialKernel::p_nearest(*r),
            Self::Sbm { boundaries, probs } => SpatialKernel::sbm(boundaries.clone(), probs.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ResponseSpec {
    Linear { mu: f64 },
    Sigmoid { max_rate: f64, slope: f64, threshold: f64 },
    Constant { rate: f64 },
}

impl ResponseSpec {
    pub fn build(&self) -> Result<SynapticResponse> {
        match *self {
            Self::Linear { mu } => SynapticResponse::linear(mu),
            Self::Sigmoid { max_rate, slope, threshold } => SynapticResponse::sigmoid(max_rate, slope, threshold),
            Self::Constant { rate } => SynapticResponse::constant(rate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MemorySpec {
    Exponential { alpha: f64 },
    Tabulated { samples: Vec<f64>, step: f64 },
    TabulatedExponential { alpha: f64, step: f64 },
}

impl MemorySpec {
    pub fn build(&self) -> Result<MemoryKernel> {
        match self {
            Self::Exponential { alpha } => MemoryKernel::exponential(*alpha),
            Self::Tabulated { samples, step } => MemoryKernel::tabulated(samples.clone(), *step),
            Self::TabulatedExponential { alpha, step } => MemoryKernel::tabulate_exponential(*alpha, *step),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    #[serde(default = "zero_function")]
    pub eta_inf: FunctionSpec,
    /// Defaults to `eta_inf` (a constant drive).
    #[serde(default)]
    pub eta_zero: Option<FunctionSpec>,
    #[serde(default)]
    pub beta: f64,
}

fn zero_function() -> FunctionSpec {
    FunctionSpec::Constant(0.0)
}

impl Default for DriveSpec {
    fn default() -> Self {
        Self {
            eta_inf: zero_function(),
            eta_zero: None,
            beta: 0.0,
        }
    }
}

impl DriveSpec {
    pub fn build(&self) -> Result<ExogenousDrive> {
        let inf = self.eta_inf.build()?;
        match &self.eta_zero {
            None => Ok(ExogenousDrive::autonomous(inf)),
            Some(zero) => ExogenousDrive::new(inf, zero.build()?, self.beta),
        }
    }
}

/// `ρ_N`: a constant, or `N^{−exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhoRule {
    Constant { value: f64 },
    Power { exponent: f64 },
}

impl RhoRule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::Power { exponent } => (n as f64).powf(-exponent),
        }
    }
}

impl Default for RhoRule {
    fn default() -> Self {
        Self::Constant { value: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSettings {
    /// Values of `‖h‖₁` swept through `α = 1/‖h‖₁`.
    pub norms: Vec<f64>,
    /// Simulated horizon in units of `1/α`.
    pub horizon_alpha_units: f64,
    /// Blow-up is flagged once the mean intensity exceeds this multiple of `μ`.
    pub blow_up_factor: f64,
    /// Network size used by the sweep.
    pub n: usize,
}

impl Default for PhaseSettings {
    fn default() -> Self {
        Self {
            norms: vec![0.25, 0.5, 0.8, 1.25, 2.0],
            horizon_alpha_units: 200.0,
            blow_up_factor: 50.0,
            n: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDiagSettings {
    /// Pairs evaluated by the `S_max` statistic; exact when it covers all pairs.
    pub pair_budget: u64,
    /// Quadrature nodes per cell for the regularity sums.
    pub cell_points: usize,
    /// Nodes of the inner integral over [0, 1] in `S^W_N`.
    pub inner_points: usize,
}

impl Default for GraphDiagSettings {
    fn default() -> Self {
        Self {
            pair_budget: u64::MAX,
            cell_points: 8,
            inner_points: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub kernel: KernelSpec,
    pub response: ResponseSpec,
    pub memory: MemorySpec,
    #[serde(default)]
    pub drive: DriveSpec,
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub rho: RhoRule,
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Exponent `m` of the horizon `⌈(Nρ_N)^m⌉ t_f`.
    #[serde(default = "one_u32")]
    pub horizon_exponent: u32,
    #[serde(default = "one_f64")]
    pub t_f: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Horizon of finite-time, noise and macro runs.
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "one_usize")]
    pub replicas: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Operator grid size.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Fine quadrature nodes per neuron in profile distances.
    #[serde(default = "default_fine")]
    pub fine_factor: usize,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    /// Also write one trajectory CSV per simulated replica.
    #[serde(default)]
    pub write_trajectories: bool,
    #[serde(default)]
    pub phase: PhaseSettings,
    #[serde(default)]
    pub graph_diag: GraphDiagSettings,
}

fn default_tau() -> f64 {
    0.25
}
fn one_u32() -> u32 {
    1
}
fn one_f64() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_eps() -> f64 {
    0.25
}
fn default_t_final() -> f64 {
    10.0
}
fn default_grid() -> usize {
    512
}
fn default_fine() -> usize {
    4
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Smallest network size accepted in a config.
pub const MIN_SIZE: usize = 16;

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a `.json` or `.toml` file, or a shipped preset named
    /// `preset:<name>`.
    pub fn load(source: &str) -> Result<Self> {
        if let Some(name) = source.strip_prefix("preset:") {
            return super::presets::preset(name);
        }
        let path = Path::new(source);
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {source}: {e}")))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.eps > 0.0) {
            return fail(format!("eps must be positive, got {}", self.eps));
        }
        if self.replicas == 0 {
            return fail("replicas must be at least 1".into());
        }
        if self.sizes.is_empty() {
            return fail("sizes must list at least one network size".into());
        }
        if let Some(n) = self.sizes.iter().find(|&&n| n < MIN_SIZE) {
            return fail(format!("network sizes must be at least {MIN_SIZE}, got {n}"));
        }
        for &n in &self.sizes {
            let rho = self.rho.at(n);
            if !(rho > 0.0 && rho <= 1.0) {
                return fail(format!("rho rule gives {rho} at N = {n}, outside (0, 1]"));
            }
        }
        if !(self.tau > 0.0 && self.tau < 0.5) {
            return fail(format!("tau must lie in (0, 1/2), got {}", self.tau));
        }
        if self.horizon_exponent == 0 || !(self.t_f > 0.0) || !(self.t_final > 0.0) {
            return fail("horizon exponent, t_f and t_final must be positive".into());
        }
        if self.grid < 2 || self.fine_factor == 0 {
            return fail("grid must be at least 2 and fine_factor at least 1".into());
        }
        if self.phase.norms.iter().any(|v| !(*v > 0.0)) || !(self.phase.horizon_alpha_units > 0.0) || self.phase.n < MIN_SIZE {
            return fail("phase sweep needs positive norms and horizon and n >= 16".into());
        }
        self.build_model().map(|_| ()).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build_model(&self) -> Result<Model> {
        Ok(Model {
            w: self.kernel.build()?,
            f: self.response.build()?,
            h: self.memory.build()?,
            drive: self.drive.build()?,
        })
    }
}

/// Runtime objects built from a config.
#[derive(Debug, Clone)]
pub struct Model {
    pub w: SpatialKernel,
    pub f: SynapticResponse,
    pub h: MemoryKernel,
    pub drive: ExogenousDrive,
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "check"
sizes = [100]
kernel = { type = "constant", value = 1.0 }
response = { type = "linear", mu = 1.0 }
memory = { type = "exponential", alpha = 2.0 }
"#;

    #[test]
    fn minimal_toml_gets_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Check);
        assert_eq!(cfg.rho, RhoRule::Constant { value: 1.0 });
        assert_eq!((cfg.eps, cfg.replicas, cfg.grid), (0.25, 1, 512));
        assert_eq!(cfg.drive, DriveSpec::default());
    }

    #[test]
    fn json_and_toml_agree() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&json).unwrap(), cfg);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for patch in [
            "eps = 0.0",
            "replicas = 0",
            "tau = 0.6",
            "rho = { rule = \"constant\", value = 1.5 }",
        ] {
            let text = format!("{patch}\n{MINIMAL}");
            assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))), "{patch}");
        }
        let small = MINIMAL.replace("sizes = [100]", "sizes = [8]");
        assert!(ExperimentConfig::from_toml(&small).is_err());
        let bad_kernel = MINIMAL.replace("value = 1.0 }", "value = 1.5 }");
        assert!(ExperimentConfig::from_toml(&bad_kernel).is_err());
        assert!(ExperimentConfig::from_toml("experiment = \"nope\"").is_err());
    }

    #[test]
    fn rho_rules() {
        assert_eq!(RhoRule::Constant { value: 0.3 }.at(1000), 0.3);
        assert!((RhoRule::Power { exponent: 0.5 }.at(100) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn function_specs() {
        let drive: DriveSpec = toml::from_str("eta_inf = [0.0, 1.0]\neta_zero = 2.0\nbeta = 1.0").unwrap();
        let built = drive.build().unwrap();
        assert!((built.eta(0.0, 0.5) - 2.0).abs() < 1e-15);
        assert!(built.is_nonincreasing());
    }
}
