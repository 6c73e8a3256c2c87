//! Four-way payoff taxonomy from measured left and right tail responses.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::ParametricFamily;
use crate::fragility::{theta_threshold, vega_sensitivity};
use crate::payoff::{inherited_fragility, u_plus, PayoffMap};
use crate::robustness::{
    antifragility_w, antifragility_w_x, left_tail_class, right_tail_class, TailClass,
};

/// Profile entries within this of zero count as neutral.
pub const PROFILE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffType {
    /// Fat left and right tails.
    FragileType1,
    /// Fat left, thin right: concave.
    FragileType2,
    /// Thin on both sides.
    Robust,
    /// Thin left, fat right: convex.
    Antifragile,
}

impl PayoffType {
    pub fn label(&self) -> &'static str {
        match self {
            PayoffType::FragileType1 => "Fragile (type 1)",
            PayoffType::FragileType2 => "Fragile (type 2)",
            PayoffType::Robust => "Robust",
            PayoffType::Antifragile => "Antifragile",
        }
    }

    pub fn number(&self) -> u8 {
        match self {
            PayoffType::FragileType1 => 1,
            PayoffType::FragileType2 => 2,
            PayoffType::Robust => 3,
            PayoffType::Antifragile => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSign {
    Positive,
    Negative,
    Neutral,
}

fn profile_sign(values: &[f64], what: &str) -> Result<ProfileSign> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EvaluationFailure(format!("{what} profile has non-finite entries")));
    }
    let pos = values.iter().filter(|v| **v > PROFILE_TOLERANCE).count();
    let neg = values.iter().filter(|v| **v < -PROFILE_TOLERANCE).count();
    match (pos, neg) {
        (0, 0) => Ok(ProfileSign::Neutral),
        (_, 0) if pos == values.len() => Ok(ProfileSign::Positive),
        (0, _) if neg == values.len() => Ok(ProfileSign::Negative),
        _ => Err(Error::Ambiguous(format!("{what} profile changes sign ({pos} above, {neg} below zero)"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub payoff_type: PayoffType,
    pub label: &'static str,
    pub left_sign: ProfileSign,
    pub right_sign: ProfileSign,
    pub left_tail: TailClass,
    pub right_tail: TailClass,
}

/// `V(Y) - V(X)` at each stress level.
pub fn left_v_profile(map: &PayoffMap, family: &ParametricFamily, ks: &[f64]) -> Result<Vec<(f64, f64)>> {
    ks.iter()
        .map(|&k| Ok((k, inherited_fragility(map, family, k)? - vega_sensitivity(family, k)?)))
        .collect()
}

/// `W_X - (u⁺/s⁺) W` on each window.
pub fn right_w_profile(
    map: &PayoffMap,
    family: &ParametricFamily,
    windows: &[(f64, f64)],
) -> Result<Vec<((f64, f64), f64)>> {
    let a = u_plus(map, family)? / family.s_plus();
    windows
        .iter()
        .map(|&(l, h)| Ok(((l, h), antifragility_w_x(map, family, l, h)? - a * antifragility_w(family, l, h)?)))
        .collect()
}

/// A more fragile left side (`V(Y) > V(X)`) fattens the left tail, and a
/// convex right side (`W_X > aW`) fattens the right one; neutral profiles
/// defer to the source tail classes. Mixed-sign profiles are refused.
pub fn classify_payoff(
    left_profile: &[(f64, f64)],
    right_profile: &[((f64, f64), f64)],
    left_tail: TailClass,
    right_tail: TailClass,
) -> Result<Classification> {
    let left_sign = profile_sign(&left_profile.iter().map(|p| p.1).collect::<Vec<_>>(), "left")?;
    let right_sign = profile_sign(&right_profile.iter().map(|p| p.1).collect::<Vec<_>>(), "right")?;
    let left = match left_sign {
        ProfileSign::Positive => TailClass::Fat,
        ProfileSign::Negative => TailClass::Thin,
        ProfileSign::Neutral => left_tail,
    };
    let right = match right_sign {
        ProfileSign::Positive => TailClass::Fat,
        ProfileSign::Negative => TailClass::Thin,
        ProfileSign::Neutral => right_tail,
    };
    let payoff_type = match (left, right) {
        (TailClass::Fat, TailClass::Fat) => PayoffType::FragileType1,
        (TailClass::Fat, TailClass::Thin) => PayoffType::FragileType2,
        (TailClass::Thin, TailClass::Thin) => PayoffType::Robust,
        (TailClass::Thin, TailClass::Fat) => PayoffType::Antifragile,
    };
    Ok(Classification {
        payoff_type,
        label: payoff_type.label(),
        left_sign,
        right_sign,
        left_tail: left,
        right_tail: right,
    })
}

/// Default probes: stress levels `Θ - j·scale` for `j = 1..5`, and
/// right windows of width `2s⁺` starting `2s⁺` above `Ω`, clipped to a cap.
pub fn default_probes(map: &PayoffMap, family: &ParametricFamily) -> Result<(Vec<f64>, Vec<(f64, f64)>)> {
    let theta = theta_threshold(family)?;
    let scale = family.scale();
    let ks = (1..=5).map(|j| theta - j as f64 * scale).collect();
    let om = family.omega();
    let w = 2.0 * family.s_plus();
    let cap = map.cap().unwrap_or(f64::INFINITY);
    let windows: Vec<(f64, f64)> = (1..=4)
        .map(|j| (om + j as f64 * w, (om + (j + 1) as f64 * w).min(cap)))
        .filter(|(l, h)| h > l)
        .collect();
    Ok((ks, windows))
}

/// Profile an exposure with the default probes and classify it.
pub fn classify_exposure(map: &PayoffMap, family: &ParametricFamily) -> Result<Classification> {
    let (ks, windows) = default_probes(map, family)?;
    classify_payoff(
        &left_v_profile(map, family, &ks)?,
        &right_w_profile(map, family, &windows)?,
        left_tail_class(family)?,
        right_tail_class(family)?,
    )
}
