//! Left-tail shortfall `ξ(K, s⁻)` and its sensitivities to the left
//! semi-deviation.

mod transfer;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{FamilyKind, ParametricFamily};

pub use transfer::{
    kappa_crossing, mu_inflexion, theta_threshold, transfer_profile, TransferFunction,
    TransferProfile,
};

/// Below this `|∂s⁻/∂λ|` the parameter does not move the left tail.
pub const DEGENERATE_SENSITIVITY: f64 = 1e-12;

/// Cross-agreement demanded between the ratio and the closed form of `V`.
pub const CLOSED_FORM_AGREEMENT: f64 = 1e-6;

/// The three routes to `ξ(K, s⁻)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailShortfall {
    /// Put plus digital put: `(Ω - K) F(K) + P(K)`.
    pub value: f64,
    /// `∫_{-inf}^K (Ω - x) f(x) dx` by quadrature.
    pub direct: f64,
    /// `∫_{-inf}^Ω min(F(x), F(K)) dx` by quadrature.
    pub by_parts: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FragilityReport {
    #[serde(rename = "K")]
    pub k: f64,
    pub s_minus: f64,
    pub xi: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "V_fd")]
    pub v_fd: f64,
    pub delta_s: f64,
    pub drift: f64,
    pub second_order: f64,
}

/// `∂/∂λ` of the barrier-capped and of the plain left integral at `Ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VegaParts {
    /// `∫_{-inf}^Ω ∂F^K/∂λ = ∂P(K)/∂λ + (Ω - K) ∂F(K)/∂λ`.
    pub barrier: f64,
    /// `∫_{-inf}^Ω ∂F/∂λ = ∂s⁻/∂λ`.
    pub plain: f64,
}

fn require_below_omega(family: &ParametricFamily, k: f64) -> Result<()> {
    if !k.is_finite() {
        return Err(Error::invalid("stress level K must be finite"));
    }
    if k > family.omega() {
        return Err(Error::precondition(format!(
            "stress level K = {k} lies above the reference point {}",
            family.omega()
        )));
    }
    Ok(())
}

/// `ξ(K, s⁻)`. The three routes must agree within ten times the quadrature
/// tolerance.
pub fn xi(family: &ParametricFamily, k: f64) -> Result<TailShortfall> {
    require_below_omega(family, k)?;
    let om = family.omega();
    let fk = family.cdf(k);
    let value = (om - k) * fk + family.put_price(k);
    let direct = family.integrate_below(|x| (om - x) * family.pdf(x), k, &[])?;
    let by_parts = family.integrate_below(|x| family.cdf(x).min(fk), om, &[k])?;
    let quad = family.quadrature();
    let allowed = 10.0 * (quad.tolerance_for(value) + direct.error + by_parts.error);
    for (name, est) in [("direct", direct.value), ("by-parts", by_parts.value)] {
        if (est - value).abs() > allowed {
            return Err(Error::SelfCheck(format!(
                "tail shortfall at K = {k}: {name} route {est} vs decomposition {value}"
            )));
        }
    }
    Ok(TailShortfall { value, direct: direct.value, by_parts: by_parts.value })
}

/// `ξ(K, s)` along the family, re-parameterised by the left semi-deviation.
pub fn xi_at_s(family: &ParametricFamily, k: f64, s: f64) -> Result<f64> {
    if k >= family.omega() {
        require_below_omega(family, k)?;
        // ξ(Ω, s) = s identically.
        return Ok(s);
    }
    let lambda = family.lambda_from_s(s)?;
    Ok(xi(&family.with_lambda(lambda)?, k)?.value)
}

/// `∂_λ P(x)` by quadrature of `∂F/∂λ`.
pub(crate) fn d_put(family: &ParametricFamily, x: f64) -> Result<f64> {
    Ok(family.d_put_d_lambda_quadrature(x)?.value)
}

pub fn vega_parts(family: &ParametricFamily, k: f64) -> Result<VegaParts> {
    require_below_omega(family, k)?;
    let om = family.omega();
    let plain = d_put(family, om)?;
    let barrier = if k == om { plain } else { d_put(family, k)? + (om - k) * family.d_cdf_d_lambda(k) };
    if plain.abs() < DEGENERATE_SENSITIVITY {
        return Err(Error::DegenerateParameter(format!(
            "ds-/dlambda = {plain:e} at lambda = {}",
            family.lambda()
        )));
    }
    Ok(VegaParts { barrier, plain })
}

/// Scaling-family closed form `(P(K) + (Ω-K)F(K) + (Ω-K)² f(K)) / s⁻`.
pub fn vega_sensitivity_closed_form(family: &ParametricFamily, k: f64) -> Result<f64> {
    require_below_omega(family, k)?;
    if !family.kind().is_scaling() {
        return Err(Error::precondition("closed-form vega needs a scaling family"));
    }
    let d = family.omega() - k;
    let s = family.s_minus();
    Ok((family.put_price(k) + d * family.cdf(k) + d * d * family.pdf(k)) / s)
}

/// `V(X, f_λ, K, s⁻)`: ratio of the barrier-capped to the plain λ-vega.
/// Analytic scaling kinds are cross-checked against the closed form.
pub fn vega_sensitivity(family: &ParametricFamily, k: f64) -> Result<f64> {
    let parts = vega_parts(family, k)?;
    let v = parts.barrier / parts.plain;
    let analytic_scaling = family.kind().is_scaling() && !matches!(family.kind(), FamilyKind::Tabulated(_));
    if analytic_scaling {
        let closed = vega_sensitivity_closed_form(family, k)?;
        if (v - closed).abs() > CLOSED_FORM_AGREEMENT * closed.abs().max(1e-300) {
            return Err(Error::SelfCheck(format!(
                "vega at K = {k}: ratio {v} vs closed form {closed}"
            )));
        }
    }
    Ok(v)
}

fn check_delta_s(s: f64, delta_s: f64) -> Result<f64> {
    let d = delta_s.abs();
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::OutOfRange { value: delta_s, context: "delta_s must be non-zero and finite".into() });
    }
    if d >= s {
        return Err(Error::OutOfRange {
            value: delta_s,
            context: format!("delta_s must be smaller than s- = {s}"),
        });
    }
    Ok(d)
}

/// `(ξ(K, s⁻ + Δs) - ξ(K, s⁻ - Δs)) / (2Δs)`.
pub fn vega_sensitivity_fd(family: &ParametricFamily, k: f64, delta_s: f64) -> Result<f64> {
    require_below_omega(family, k)?;
    let s = family.s_minus();
    let d = check_delta_s(s, delta_s)?;
    if k == family.omega() {
        // ξ(Ω, s) = s makes the quotient identically one.
        return Ok(1.0);
    }
    Ok((xi_at_s(family, k, s + d)? - xi_at_s(family, k, s - d)?) / (2.0 * d))
}

/// `∂V/∂K = ∂²ξ/∂K∂s⁻` by central difference in `K` (one-sided against the
/// anchor `V(Ω) = 1` at the money).
pub fn fragility_drift(family: &ParametricFamily, k: f64) -> Result<f64> {
    require_below_omega(family, k)?;
    let om = family.omega();
    let h = 1e-4 * (om - k + 1.0);
    if k + h > om {
        let v0 = if k == om { 1.0 } else { vega_sensitivity(family, k)? };
        let v1 = vega_sensitivity(family, k - h)?;
        let v2 = vega_sensitivity(family, k - 2.0 * h)?;
        return Ok((3.0 * v0 - 4.0 * v1 + v2) / (2.0 * h));
    }
    Ok((vega_sensitivity(family, k + h)? - vega_sensitivity(family, k - h)?) / (2.0 * h))
}

/// `∂²ξ/∂(s⁻)²` by the symmetric second difference.
pub fn second_order_fragility(family: &ParametricFamily, k: f64, delta_s: f64) -> Result<f64> {
    require_below_omega(family, k)?;
    let s = family.s_minus();
    let d = check_delta_s(s, delta_s)?;
    let up = xi_at_s(family, k, s + d)?;
    let mid = xi_at_s(family, k, s)?;
    let down = xi_at_s(family, k, s - d)?;
    Ok((up - 2.0 * mid + down) / (d * d))
}

/// All local fragility measures at `K`; `delta_s` defaults to `1e-4 s⁻`.
pub fn fragility_report(family: &ParametricFamily, k: f64, delta_s: Option<f64>) -> Result<FragilityReport> {
    let s_minus = family.s_minus();
    let delta_s = delta_s.unwrap_or(1e-4 * s_minus);
    Ok(FragilityReport {
        k,
        s_minus,
        xi: xi(family, k)?.value,
        v: vega_sensitivity(family, k)?,
        v_fd: vega_sensitivity_fd(family, k, delta_s)?,
        delta_s,
        drift: fragility_drift(family, k)?,
        second_order: second_order_fragility(family, k, delta_s.max(1e-2 * s_minus))?,
    })
}
