//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::forms::{BcMode, MaterialParams, StabilizationLength, DEFAULT_GAMMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Compressible,
    Incompressible,
    NearlyIncompressible,
    Cook,
}

impl Problem {
    pub fn as_str(&self) -> &'static str {
        match self {
            Problem::Compressible => "compressible",
            Problem::Incompressible => "incompressible",
            Problem::NearlyIncompressible => "nearly_incompressible",
            Problem::Cook => "cook",
        }
    }
}

/// Displacement formulation used on Cook's membrane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    #[default]
    Compressible,
    NearlyIncompressible,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub young: Option<f64>,
    pub poisson: Option<f64>,
    pub gamma: Option<f64>,
    #[serde(default)]
    pub stabilization_length: StabilizationLength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Degree of the error-norm quadrature.
    #[serde(default = "default_error_degree")]
    pub error: usize,
}

fn default_error_degree() -> usize {
    crate::diagnostics::ERROR_QUADRATURE_DEGREE
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { error: default_error_degree() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for all outputs; the CLI `--out` flag overrides it.
    pub dir: Option<PathBuf>,
    #[serde(default = "default_csv")]
    pub csv: String,
    /// Optional SVG file name for a convergence plot.
    pub plot: Option<String>,
}

fn default_csv() -> String {
    "results.csv".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, csv: default_csv(), plot: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Also compute inf-sup and Korn constants for every mesh of a `run`.
    #[serde(default)]
    pub enabled: bool,
    /// Include the discrete Korn constant.
    #[serde(default)]
    pub korn: bool,
}

/// Thresholds evaluated by `run --check` on the finest pair of meshes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub slope_l2: Option<[f64; 2]>,
    pub slope_h1: Option<[f64; 2]>,
    pub slope_p_l2_min: Option<f64>,
    /// Largest admissible ratio of the last two QoI increments.
    pub increment_ratio_max: Option<f64>,
    /// Largest admissible max/min ratio of the inf-sup constants.
    pub beta_ratio_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    #[serde(default = "default_order")]
    pub order: usize,
    /// Subdivisions per side; empty selects the defaults for `order`.
    #[serde(default)]
    pub mesh_sizes: Vec<usize>,
    #[serde(default)]
    pub bc_mode: BcMode,
    #[serde(default)]
    pub formulation: Formulation,
    #[serde(default)]
    pub deterministic: bool,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    pub check: Option<CheckConfig>,
}

fn default_order() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(problem: Problem, order: usize) -> Self {
        ExperimentConfig {
            problem,
            order,
            mesh_sizes: Vec::new(),
            bc_mode: BcMode::Weak,
            formulation: Formulation::Compressible,
            deterministic: false,
            params: ParamsConfig::default(),
            quadrature: QuadratureConfig::default(),
            output: OutputConfig::default(),
            diagnostics: DiagnosticsConfig::default(),
            check: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if !(1..=2).contains(&self.order) {
            return Err(ExperimentError::Config(format!("order must be 1 or 2, got {}", self.order)));
        }
        if self.mesh_sizes.contains(&0) {
            return Err(ExperimentError::Config("mesh sizes must be positive".into()));
        }
        self.material()?;
        Ok(())
    }

    /// Mesh sizes in run order.
    pub fn sizes(&self) -> Vec<usize> {
        if !self.mesh_sizes.is_empty() {
            return self.mesh_sizes.clone();
        }
        match self.order {
            1 => vec![8, 16, 32, 64],
            _ => vec![4, 8, 16, 32],
        }
    }

    /// Material parameters: explicit Lamé values win over `young`/`poisson`.
    /// Defaults are `mu = lambda = 1`, or `E = 1e5, nu = 0.3333` on Cook's membrane.
    pub fn material(&self) -> Result<MaterialParams, ExperimentError> {
        let p = &self.params;
        let gamma = p.gamma.unwrap_or(DEFAULT_GAMMA);
        let base = match (p.mu, p.lambda, p.young, p.poisson) {
            (Some(mu), Some(lambda), _, _) => MaterialParams::with_gamma(mu, lambda, gamma)?,
            (Some(_), None, _, _) | (None, Some(_), _, _) => {
                return Err(ExperimentError::Config("give both mu and lambda".into()))
            }
            (None, None, Some(e), Some(nu)) => MaterialParams::from_young_poisson(e, nu)?,
            (None, None, None, None) if self.problem == Problem::Cook => {
                MaterialParams::from_young_poisson(1e5, 0.3333)?
            }
            (None, None, None, None) => MaterialParams::new(1.0, 1.0)?,
            _ => return Err(ExperimentError::Config("give both young and poisson".into())),
        };
        Ok(MaterialParams::with_gamma(base.mu, base.lambda, gamma)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text = r#"
problem = "cook"
order = 2
mesh_sizes = [2, 4]
bc_mode = "strong"
formulation = "nearly_incompressible"

[params]
young = 250.0
poisson = 0.4999

[output]
csv = "cook.csv"

[check]
increment_ratio_max = 0.25
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.problem, Problem::Cook);
        assert_eq!(cfg.bc_mode, BcMode::Strong);
        assert_eq!(cfg.sizes(), vec![2, 4]);
        let m = cfg.material().unwrap();
        assert_eq!(m.mu.round(), 83.0);
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn defaults_and_errors() {
        let cfg = ExperimentConfig::from_toml("problem = \"compressible\"").unwrap();
        assert_eq!(cfg.sizes(), vec![8, 16, 32, 64]);
        assert_eq!(cfg.material().unwrap(), MaterialParams::new(1.0, 1.0).unwrap());
        let cook = ExperimentConfig::new(Problem::Cook, 2);
        assert_eq!(cook.sizes(), vec![4, 8, 16, 32]);
        assert_eq!(cook.material().unwrap().lambda.round(), 74979.0);
        assert!(ExperimentConfig::from_toml("problem = \"compressible\"\norder = 3").is_err());
        assert!(ExperimentConfig::from_toml("problem = \"compressible\"\n[params]\nmu = 1.0").is_err());
        assert!(ExperimentConfig::from_toml("problem = \"bogus\"").is_err());
        assert!(ExperimentConfig::from_toml("problem = \"compressible\"\nunknown = 1").is_err());
    }
}
