use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use super::expr::Expression;
use crate::error::{Error, Result};
use crate::families::normal_cdf;

/// Quadratic through `B(8) = -75`, `B(9) = -200`, `B(10) = -550`
/// (billions; `u` is the unemployment rate in percent).
pub fn deficit(u: f64) -> f64 {
    let d = u - 9.0;
    -200.0 - 237.5 * d - 112.5 * d * d
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Parameter {
    pub name: String,
    pub base: f64,
    /// Full perturbation width `Δp`; the screen probes `p ± Δp/2`.
    pub delta: f64,
}

impl Parameter {
    pub fn new(name: impl Into<String>, base: f64, delta: f64) -> Self {
        Self { name: name.into(), base, delta }
    }
}

/// Valuation sampled against one parameter, the others held at base.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl ResponseTable {
    pub fn new(mut rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.len() < 2 || rows.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::invalid("response table needs at least two finite rows"));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        if rows.windows(2).any(|w| w[1].0 == w[0].0) {
            return Err(Error::invalid("response table has duplicate parameter values"));
        }
        let (xs, ys) = rows.into_iter().unzip();
        Ok(Self { xs, ys })
    }

    /// CSV with header `param_value,valuation`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::invalid(format!("response table: {e}")))?.clone();
        if headers.len() != 2 || &headers[0] != "param_value" || &headers[1] != "valuation" {
            return Err(Error::invalid("response table header must be `param_value,valuation`"));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::invalid(format!("response table: {e}")))?;
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::invalid(format!("response table: bad number `{s}`")))
            };
            rows.push((parse(&rec[0])?, parse(&rec[1])?));
        }
        Self::new(rows)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
        Self::from_csv_reader(file)
    }

    /// Linear interpolation; no extrapolation outside the sampled hull.
    pub fn value(&self, x: f64) -> Result<f64> {
        let (lo, hi) = (self.xs[0], *self.xs.last().unwrap());
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfDomain { x, lo, hi });
        }
        let i = match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return Ok(self.ys[i]),
            Err(i) => i - 1,
        };
        let t = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        Ok(self.ys[i] + t * (self.ys[i + 1] - self.ys[i]))
    }
}

pub type ValuationFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ModelKind {
    BuiltinDeficit,
    /// `ψ(σ) = Φ((K - Ω)/σ)`: Gaussian left-tail probability below `K`.
    BuiltinGaussianSigma { omega: f64, k: f64 },
    Expression(Expression),
    /// One response table per parameter, in parameter order.
    ExternalTable(Vec<ResponseTable>),
    Function(ValuationFn),
}

impl fmt::Debug for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::BuiltinDeficit => f.write_str("BuiltinDeficit"),
            ModelKind::BuiltinGaussianSigma { omega, k } => {
                f.debug_struct("BuiltinGaussianSigma").field("omega", omega).field("k", k).finish()
            }
            ModelKind::Expression(e) => f.debug_tuple("Expression").field(&e.source()).finish(),
            ModelKind::ExternalTable(t) => f.debug_tuple("ExternalTable").field(&t.len()).finish(),
            ModelKind::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::BuiltinDeficit => "builtin_deficit",
            ModelKind::BuiltinGaussianSigma { .. } => "builtin_gaussian_sigma",
            ModelKind::Expression(_) => "expression",
            ModelKind::ExternalTable(_) => "external_table",
            ModelKind::Function(_) => "function",
        }
    }
}

/// A valuation `ψ` of a parameter vector, with base values and widths.
#[derive(Debug, Clone)]
pub struct ModelUnderTest {
    kind: ModelKind,
    params: Vec<Parameter>,
    serial: bool,
}

impl ModelUnderTest {
    pub fn new(kind: ModelKind, params: Vec<Parameter>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::invalid("model needs at least one parameter"));
        }
        for (i, p) in params.iter().enumerate() {
            if !(p.delta > 0.0 && p.delta.is_finite() && p.base.is_finite()) {
                return Err(Error::invalid(format!("parameter `{}` needs finite base and delta > 0", p.name)));
            }
            if params[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::invalid(format!("duplicate parameter `{}`", p.name)));
            }
        }
        match &kind {
            ModelKind::BuiltinDeficit | ModelKind::BuiltinGaussianSigma { .. } if params.len() != 1 => {
                return Err(Error::invalid(format!("{} takes exactly one parameter", kind.name())));
            }
            ModelKind::ExternalTable(t) if t.len() != params.len() => {
                return Err(Error::invalid("external table model needs one table per parameter"));
            }
            _ => {}
        }
        let model = Self { kind, params, serial: false };
        for i in 0..model.params.len() {
            let p = &model.params[i];
            for m in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                model.eval_at(i, p.base + m * p.delta).map_err(|e| {
                    Error::invalid(format!("parameter `{}` is not evaluable within base ± delta: {e}", p.name))
                })?;
            }
        }
        Ok(model)
    }

    /// Parse `source` over the given parameters.
    pub fn expression(source: &str, params: Vec<Parameter>) -> Result<Self> {
        let names: Vec<String> = params.iter().map(|p| p.name.clone()).collect();
        Self::new(ModelKind::Expression(Expression::parse(source, &names)?), params)
    }

    pub fn function<F: Fn(&[f64]) -> f64 + Send + Sync + 'static>(f: F, params: Vec<Parameter>) -> Result<Self> {
        Self::new(ModelKind::Function(Arc::new(f)), params)
    }

    /// Unemployment at 9% with a two-point width of 2 points.
    pub fn builtin_deficit() -> Self {
        Self::new(ModelKind::BuiltinDeficit, vec![Parameter::new("unemployment", 9.0, 2.0)]).unwrap()
    }

    /// `σ` at `sigma` with full width `delta`.
    pub fn builtin_gaussian_sigma(omega: f64, k: f64, sigma: f64, delta: f64) -> Result<Self> {
        Self::new(ModelKind::BuiltinGaussianSigma { omega, k }, vec![Parameter::new("sigma", sigma, delta)])
    }

    /// Declare the valuation unsafe to call from several threads at once.
    pub fn with_serial(mut self, serial: bool) -> Self {
        self.serial = serial;
        self
    }

    pub fn serial(&self) -> bool {
        self.serial
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn parameters(&self) -> &[Parameter] {
        &self.params
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.params
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| Error::invalid(format!("model has no parameter `{name}`")))
    }

    pub fn parameter(&self, name: &str) -> Result<&Parameter> {
        Ok(&self.params[self.index_of(name)?])
    }

    pub fn base_values(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.base).collect()
    }

    /// `ψ` at a full parameter vector.
    pub fn evaluate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.params.len() {
            return Err(Error::invalid("parameter vector has the wrong length"));
        }
        let v = match &self.kind {
            ModelKind::BuiltinDeficit => deficit(values[0]),
            ModelKind::BuiltinGaussianSigma { omega, k } => {
                let s = values[0];
                if !(s > 0.0) {
                    return Err(Error::EvaluationFailure(format!("sigma must be positive, got {s}")));
                }
                normal_cdf((k - omega) / s)
            }
            ModelKind::Expression(e) => e.eval(values)?,
            ModelKind::ExternalTable(tables) => {
                let moved: Vec<usize> =
                    (0..values.len()).filter(|&i| values[i] != self.params[i].base).collect();
                match moved.as_slice() {
                    [] => tables[0].value(values[0])?,
                    [i] => tables[*i].value(values[*i])?,
                    _ => {
                        return Err(Error::EvaluationFailure(
                            "external tables only vary one parameter at a time".into(),
                        ))
                    }
                }
            }
            ModelKind::Function(f) => f(values),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::EvaluationFailure(format!("valuation is not finite at {values:?}")))
        }
    }

    /// `ψ` with parameter `index` set to `value` and the rest at base.
    pub fn eval_at(&self, index: usize, value: f64) -> Result<f64> {
        let mut v = self.base_values();
        v[index] = value;
        self.evaluate(&v)
    }
}
