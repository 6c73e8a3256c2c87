//! Strict JSON run configuration. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use fragility::families::{DensityTable, FamilyKind};
use fragility::heuristic::{ModelKind, ModelUnderTest, Parameter, PerturbedParameter, ResponseTable};
use fragility::numerics::{McSpec, QuadratureSpec};
use fragility::payoff::{PayoffKind, PayoffMap, PayoffTable};
use fragility::ParametricFamily;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub family: Option<FamilyConfig>,
    pub payoff: Option<PayoffConfig>,
    #[serde(default)]
    pub stress_levels: Vec<f64>,
    /// Finite-difference step on `s⁻` (default `1e-4 s⁻`).
    pub delta_s: Option<f64>,
    pub sweep: Option<SweepConfig>,
    pub transfer: Option<TransferConfig>,
    pub robustness: Option<RobustnessConfig>,
    pub antifragility: Option<AntifragilityConfig>,
    pub heuristic: Option<HeuristicConfig>,
    pub stress: Option<StressConfig>,
    pub quadrature: Option<QuadratureSpec>,
    pub monte_carlo: Option<McSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    GaussianScaling {
        #[serde(default)]
        omega: f64,
        lambda: Option<f64>,
        s_minus: Option<f64>,
    },
    GaussianShifting {
        #[serde(default)]
        omega: f64,
        sigma: f64,
        lambda: Option<f64>,
        s_minus: Option<f64>,
    },
    StudentTScaling {
        #[serde(default)]
        omega: f64,
        nu: f64,
        lambda: Option<f64>,
        s_minus: Option<f64>,
    },
    LognormalShifted {
        #[serde(default)]
        omega: f64,
        sigma: f64,
        shift: Option<f64>,
        #[serde(default)]
        mirrored: bool,
        lambda: Option<f64>,
        s_minus: Option<f64>,
    },
    Tabulated {
        #[serde(default)]
        omega: f64,
        path: PathBuf,
        lambda: Option<f64>,
        s_minus: Option<f64>,
    },
}

/// A map kind plus optional `floor`/`cap`, all in one flat object.
#[derive(Debug, Clone)]
pub struct PayoffConfig {
    pub kind: PayoffKindConfig,
    pub floor: Option<f64>,
    pub cap: Option<f64>,
}

// serde's flatten cannot be combined with deny_unknown_fields, so the bounds
// are split off by hand and the rest is parsed strictly.
impl<'de> Deserialize<'de> for PayoffConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let mut map = serde_json::Map::<String, serde_json::Value>::deserialize(d)?;
        let mut bound = |key: &str| match map.remove(key) {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(v) => v.as_f64().map(Some).ok_or_else(|| D::Error::custom(format!("payoff `{key}` must be a number"))),
        };
        let floor = bound("floor")?;
        let cap = bound("cap")?;
        let kind = PayoffKindConfig::deserialize(serde_json::Value::Object(map)).map_err(D::Error::custom)?;
        Ok(Self { kind, floor, cap })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffKindConfig {
    Identity,
    Affine { slope: f64, #[serde(default)] intercept: f64 },
    QuadraticConcave { beta: f64 },
    QuadraticConvex { beta: f64 },
    RightQuadratic { beta: f64, convex: bool },
    PowerSigmoid { c: f64, p: f64 },
    KahnemanTversky {
        #[serde(default = "kt_a")]
        a: f64,
        #[serde(default = "kt_a")]
        b: f64,
        #[serde(default = "kt_gamma")]
        gamma: f64,
    },
    Polynomial { coefficients: Vec<f64> },
    Tabulated { path: PathBuf },
}

fn kt_a() -> f64 {
    0.88
}

fn kt_gamma() -> f64 {
    2.25
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferConfig {
    pub k: Option<f64>,
    #[serde(default = "transfer_points")]
    pub points: usize,
    /// Require the crossing point; refused when `K` lies above the threshold.
    #[serde(default)]
    pub kappa: bool,
}

fn transfer_points() -> usize {
    201
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessConfig {
    pub k: Option<f64>,
    pub b: f64,
    #[serde(default = "grid_count")]
    pub grid_count: usize,
    pub interval: Option<[f64; 2]>,
    #[serde(default)]
    pub exp_weights: Vec<f64>,
    #[serde(default)]
    pub pow_weights: Vec<f64>,
}

fn grid_count() -> usize {
    32
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntifragilityConfig {
    pub l: f64,
    /// Upper window edge; omitted means the whole right tail.
    pub h: Option<f64>,
    pub b: f64,
    #[serde(default = "grid_count")]
    pub grid_count: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterConfig {
    pub name: String,
    pub base: f64,
    pub delta: f64,
    /// `param_value,valuation` CSV, for external table models.
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    BuiltinDeficit,
    BuiltinGaussianSigma {
        #[serde(default)]
        omega: f64,
        k: f64,
        sigma: f64,
        delta: f64,
    },
    Expression {
        expression: String,
        parameters: Vec<ParameterConfig>,
    },
    ExternalTable {
        parameters: Vec<ParameterConfig>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaBConfig {
    pub k: f64,
    pub delta_alpha: f64,
    #[serde(default = "perturbed_lambda")]
    pub parameter: PerturbedParameterConfig,
}

fn perturbed_lambda() -> PerturbedParameterConfig {
    PerturbedParameterConfig::Lambda
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbedParameterConfig {
    Lambda,
    Nu,
}

impl From<PerturbedParameterConfig> for PerturbedParameter {
    fn from(p: PerturbedParameterConfig) -> Self {
        match p {
            PerturbedParameterConfig::Lambda => PerturbedParameter::Lambda,
            PerturbedParameterConfig::Nu => PerturbedParameter::Nu,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeficitMcConfig {
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "bins")]
    pub bins: usize,
}

fn one() -> f64 {
    1.0
}

fn bins() -> usize {
    60
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeuristicConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub serial: bool,
    #[serde(default = "ratio_tolerance")]
    pub ratio_tolerance: f64,
    #[serde(default = "significance_fraction")]
    pub significance_fraction: f64,
    #[serde(default = "multipliers")]
    pub multipliers: Vec<f64>,
    /// Two-point half width for `ω_A`, per parameter default `Δp/2`.
    pub omega_a_half_width: Option<f64>,
    pub omega_b: Option<OmegaBConfig>,
    pub deficit_mc: Option<DeficitMcConfig>,
}

fn ratio_tolerance() -> f64 {
    fragility::heuristic::RATIO_TOLERANCE
}

fn significance_fraction() -> f64 {
    fragility::heuristic::SIGNIFICANCE_FRACTION
}

fn multipliers() -> Vec<f64> {
    fragility::heuristic::DEFAULT_MULTIPLIERS.to_vec()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StressConfig {
    /// Defaults to the model's first parameter.
    pub parameter: Option<String>,
    pub base: f64,
    pub milder: f64,
    pub harsher: f64,
    #[serde(default = "widenings")]
    pub widenings: Vec<f64>,
}

fn widenings() -> Vec<f64> {
    vec![1.0, 1.5, 2.0]
}

/// A parsed config plus what is needed to report it.
pub struct LoadedConfig {
    pub config: RunConfig,
    pub raw: serde_json::Value,
    pub sha256: String,
    pub base_dir: PathBuf,
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let config: RunConfig = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let raw: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| CliError::Config(e.to_string()))?;
    let sha256 = {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(&bytes))
    };
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, raw, sha256, base_dir })
}

impl LoadedConfig {
    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec, CliError> {
        let q = self.config.quadrature.unwrap_or_default();
        q.validate()?;
        Ok(q)
    }

    pub fn family(&self) -> Result<ParametricFamily, CliError> {
        let fc = self.config.family.as_ref().ok_or_else(|| CliError::Config("`family` is required".into()))?;
        let quad = self.quadrature()?;
        let (kind, omega, lambda, s_minus) = match fc {
            FamilyConfig::GaussianScaling { omega, lambda, s_minus } => {
                (FamilyKind::GaussianScaling, *omega, *lambda, *s_minus)
            }
            FamilyConfig::GaussianShifting { omega, sigma, lambda, s_minus } => {
                (FamilyKind::GaussianShifting { sigma: *sigma }, *omega, *lambda, *s_minus)
            }
            FamilyConfig::StudentTScaling { omega, nu, lambda, s_minus } => {
                (FamilyKind::StudentTScaling { nu: *nu }, *omega, *lambda, *s_minus)
            }
            FamilyConfig::LognormalShifted { omega, sigma, shift, mirrored, lambda, s_minus } => (
                FamilyKind::LognormalShifted { sigma: *sigma, shift: *shift, mirrored: *mirrored },
                *omega,
                *lambda,
                *s_minus,
            ),
            FamilyConfig::Tabulated { omega, path, lambda, s_minus } => {
                let table = DensityTable::from_csv_path(&self.resolve(path))?;
                (FamilyKind::Tabulated(Arc::new(table)), *omega, *lambda, *s_minus)
            }
        };
        let start = if kind.is_scaling() { 1.0 } else { 0.0 };
        match (lambda, s_minus) {
            (Some(l), None) => Ok(ParametricFamily::new(kind, omega, l, quad)?),
            (None, Some(s)) => {
                let f = ParametricFamily::new(kind, omega, start, quad)?;
                Ok(f.with_lambda(f.lambda_from_s(s)?)?)
            }
            _ => Err(CliError::Config("family needs exactly one of `lambda` and `s_minus`".into())),
        }
    }

    /// The configured payoff, if any.
    pub fn payoff(&self, omega: f64) -> Result<Option<PayoffMap>, CliError> {
        let Some(pc) = &self.config.payoff else { return Ok(None) };
        let kind = match &pc.kind {
            PayoffKindConfig::Identity => PayoffKind::Identity,
            PayoffKindConfig::Affine { slope, intercept } => PayoffKind::Affine { slope: *slope, intercept: *intercept },
            PayoffKindConfig::QuadraticConcave { beta } => PayoffKind::QuadraticConcave { beta: *beta },
            PayoffKindConfig::QuadraticConvex { beta } => PayoffKind::QuadraticConvex { beta: *beta },
            PayoffKindConfig::RightQuadratic { beta, convex } => {
                PayoffKind::RightQuadratic { beta: *beta, convex: *convex }
            }
            PayoffKindConfig::PowerSigmoid { c, p } => PayoffKind::PowerSigmoid { c: *c, p: *p },
            PayoffKindConfig::KahnemanTversky { a, b, gamma } => {
                PayoffKind::KahnemanTversky { a: *a, b: *b, gamma: *gamma }
            }
            PayoffKindConfig::Polynomial { coefficients } => PayoffKind::Polynomial(coefficients.clone()),
            PayoffKindConfig::Tabulated { path } => {
                PayoffKind::Tabulated(Arc::new(PayoffTable::from_csv_path(&self.resolve(path))?))
            }
        };
        Ok(Some(PayoffMap::with_bounds(kind, omega, pc.floor, pc.cap)?))
    }

    pub fn model(&self) -> Result<ModelUnderTest, CliError> {
        let hc = self.heuristic()?;
        let params = |ps: &[ParameterConfig]| -> Vec<Parameter> {
            ps.iter().map(|p| Parameter::new(p.name.clone(), p.base, p.delta)).collect()
        };
        let model = match &hc.model {
            ModelConfig::BuiltinDeficit => ModelUnderTest::builtin_deficit(),
            ModelConfig::BuiltinGaussianSigma { omega, k, sigma, delta } => {
                ModelUnderTest::builtin_gaussian_sigma(*omega, *k, *sigma, *delta)?
            }
            ModelConfig::Expression { expression, parameters } => {
                if parameters.iter().any(|p| p.table.is_some()) {
                    return Err(CliError::Config("`table` only applies to external_table models".into()));
                }
                ModelUnderTest::expression(expression, params(parameters))?
            }
            ModelConfig::ExternalTable { parameters } => {
                let tables = parameters
                    .iter()
                    .map(|p| {
                        let path = p.table.as_ref().ok_or_else(|| {
                            CliError::Config(format!("parameter `{}` needs a `table`", p.name))
                        })?;
                        Ok(ResponseTable::from_csv_path(&self.resolve(path))?)
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                ModelUnderTest::new(ModelKind::ExternalTable(tables), params(parameters))?
            }
        };
        Ok(model.with_serial(hc.serial))
    }

    pub fn heuristic(&self) -> Result<&HeuristicConfig, CliError> {
        self.config.heuristic.as_ref().ok_or_else(|| CliError::Config("`heuristic` section is required".into()))
    }

    /// Configured stress levels; at least one is required.
    pub fn stress_levels(&self) -> Result<Vec<f64>, CliError> {
        if self.config.stress_levels.is_empty() {
            return Err(CliError::Config("`stress_levels` must list at least one K".into()));
        }
        Ok(self.config.stress_levels.clone())
    }

    /// Monte Carlo spec with an optional seed override.
    pub fn monte_carlo(&self, seed: Option<u64>) -> Result<Option<McSpec>, CliError> {
        let Some(mut spec) = self.config.monte_carlo else { return Ok(None) };
        if spec.sample_count == 0 {
            return Err(CliError::Config("monte_carlo.sample_count must be positive".into()));
        }
        if let Some(s) = seed {
            spec.seed = s;
        }
        Ok(Some(spec))
    }
}
