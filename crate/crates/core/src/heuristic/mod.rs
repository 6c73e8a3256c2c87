//! Fast detection heuristic for hidden convexity in a valuation, plus the
//! convexity-bias estimators and stress asymmetry probes.
//!
//! The screen perturbs by half steps (`p ± Δp/2`), while the bias
//! estimators `ω_A`/`ω_B` probe full steps (`ᾱ ± Δα`). The two conventions
//! are kept as they are; with `Δα = Δp/2` they coincide.

mod classify;
mod expr;
mod model;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{FamilyKind, ParametricFamily};
use crate::fragility::vega_sensitivity_fd;
use crate::numerics::{draw_samples, histogram, HistogramBin, McSpec, SampleSummary};

pub use classify::{
    classify_exposure, classify_payoff, left_v_profile, right_w_profile, Classification, PayoffType,
    ProfileSign, PROFILE_TOLERANCE,
};
pub use expr::Expression;
pub use model::{deficit, ModelKind, ModelUnderTest, Parameter, ResponseTable, ValuationFn};

/// Default `|H - 1|` band treated as robust.
pub const RATIO_TOLERANCE: f64 = 0.01;
/// Default fraction of `|ψ(p)|` a first-order move must exceed to matter.
pub const SIGNIFICANCE_FRACTION: f64 = 0.05;

fn half_step_pair(model: &ModelUnderTest, index: usize, delta: f64) -> Result<(f64, f64)> {
    let p = model.parameters()[index].base;
    Ok((model.eval_at(index, p - 0.5 * delta)?, model.eval_at(index, p + 0.5 * delta)?))
}

/// `(ψ(p + Δp/2) - ψ(p - Δp/2)) / Δp`.
pub fn first_order_screen(model: &ModelUnderTest, name: &str) -> Result<f64> {
    let i = model.index_of(name)?;
    let delta = model.parameters()[i].delta;
    let (lo, hi) = half_step_pair(model, i, delta)?;
    Ok((hi - lo) / delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondOrder {
    pub mu: f64,
    pub mu_prime: f64,
    /// `μ'/μ`, or `μ' - μ` when `difference_form` is set (`μ = 0`).
    #[serde(rename = "H_ratio")]
    pub h_ratio: f64,
    pub difference_form: bool,
}

fn second_order_with(model: &ModelUnderTest, index: usize, delta: f64) -> Result<SecondOrder> {
    let mu = model.eval_at(index, model.parameters()[index].base)?;
    let (lo, hi) = half_step_pair(model, index, delta)?;
    let mu_prime = 0.5 * (lo + hi);
    let (h_ratio, difference_form) = if mu == 0.0 { (mu_prime - mu, true) } else { (mu_prime / mu, false) };
    Ok(SecondOrder { mu, mu_prime, h_ratio, difference_form })
}

/// `μ = ψ(p)`, `μ' = ½(ψ(p + Δp/2) + ψ(p - Δp/2))`, `H = μ'/μ`.
pub fn second_order_ratio(model: &ModelUnderTest, name: &str) -> Result<SecondOrder> {
    let i = model.index_of(name)?;
    second_order_with(model, i, model.parameters()[i].delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Fragile,
    Robust,
    AntifragileBias,
}

/// Robust inside the tolerance band around `H = 1` (around `0` in
/// difference form). Outside it, the sign of `μ' - μ` decides: averaging over
/// the perturbation lowering the valuation is fragility.
pub fn verdict(so: &SecondOrder, tolerance: f64) -> Verdict {
    let centre = if so.difference_form { 0.0 } else { 1.0 };
    if (so.h_ratio - centre).abs() <= tolerance {
        Verdict::Robust
    } else if so.mu_prime < so.mu {
        Verdict::Fragile
    } else {
        Verdict::AntifragileBias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BroadnessScan {
    pub multipliers: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `H - 1` (or the difference) keeps one sign across the scan.
    pub consistent: bool,
    /// `H ≥ 1` at every width.
    pub broad: bool,
}

/// `H` recomputed at `Δp · m` for each multiplier.
pub fn broadness_scan(model: &ModelUnderTest, name: &str, multipliers: &[f64]) -> Result<BroadnessScan> {
    if multipliers.is_empty() || multipliers.iter().any(|m| !(*m > 0.0)) || multipliers.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::invalid("multipliers must be positive and increasing"));
    }
    let i = model.index_of(name)?;
    let delta = model.parameters()[i].delta;
    let results =
        multipliers.iter().map(|m| second_order_with(model, i, delta * m)).collect::<Result<Vec<_>>>()?;
    let signs: Vec<f64> = results
        .iter()
        .map(|so| {
            let d = if so.difference_form { so.h_ratio } else { so.h_ratio - 1.0 };
            if d == 0.0 {
                0.0
            } else {
                d.signum()
            }
        })
        .collect();
    let consistent = signs.iter().all(|s| *s == signs[0]);
    let broad = signs.iter().all(|s| *s >= 0.0);
    Ok(BroadnessScan { multipliers: multipliers.to_vec(), ratios: results.iter().map(|s| s.h_ratio).collect(), consistent, broad })
}

/// Distribution of the stochastic parameter for `ω_A`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaDistribution {
    /// `ᾱ ± half_width` with weights ½, ½ around the base value.
    TwoPoint { half_width: f64 },
    /// `(α_i, w_i)` with weights summing to one.
    Weighted { points: Vec<(f64, f64)> },
}

impl AlphaDistribution {
    /// Two points at `p ± Δp/2`, matching the screen's `μ'`.
    pub fn default_for(p: &Parameter) -> Self {
        AlphaDistribution::TwoPoint { half_width: 0.5 * p.delta }
    }
}

/// `ω_A = E[ψ(α)] - ψ(ᾱ)`.
pub fn omega_a(model: &ModelUnderTest, name: &str, dist: &AlphaDistribution) -> Result<f64> {
    let i = model.index_of(name)?;
    let base = model.parameters()[i].base;
    let points = match dist {
        AlphaDistribution::TwoPoint { half_width } => {
            if !(*half_width >= 0.0 && half_width.is_finite()) {
                return Err(Error::invalid("two-point half width must be finite and non-negative"));
            }
            vec![(base - half_width, 0.5), (base + half_width, 0.5)]
        }
        AlphaDistribution::Weighted { points } => {
            let total: f64 = points.iter().map(|p| p.1).sum();
            if points.is_empty() || points.iter().any(|p| !(p.1 >= 0.0) || !p.0.is_finite()) || (total - 1.0).abs() > 1e-9
            {
                return Err(Error::invalid("alpha weights must be non-negative and sum to one"));
            }
            points.clone()
        }
    };
    let mean: f64 = points.iter().map(|(a, w)| a * w).sum();
    let mut expected = 0.0;
    for (a, w) in &points {
        expected += w * model.eval_at(i, *a)?;
    }
    Ok(expected - model.eval_at(i, mean)?)
}

/// Which family parameter plays the role of `α` in `ω_B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbedParameter {
    Lambda,
    /// Tail exponent of a Student-t family.
    Nu,
}

fn perturbed(family: &ParametricFamily, which: PerturbedParameter, delta: f64) -> Result<(ParametricFamily, ParametricFamily)> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::OutOfRange { value: delta, context: "delta alpha must be finite and non-negative".into() });
    }
    match which {
        PerturbedParameter::Lambda => {
            let l = family.lambda();
            Ok((family.with_lambda(l + delta)?, family.with_lambda(l - delta)?))
        }
        PerturbedParameter::Nu => {
            let FamilyKind::StudentTScaling { nu } = *family.kind() else {
                return Err(Error::invalid("only student_t_scaling has a tail exponent to perturb"));
            };
            let make = |n: f64| {
                if !(n > 1.0) {
                    return Err(Error::OutOfRange { value: n, context: "perturbed nu must exceed 1".into() });
                }
                ParametricFamily::new(
                    FamilyKind::StudentTScaling { nu: n },
                    family.omega(),
                    family.lambda(),
                    *family.quadrature(),
                )
            };
            Ok((make(nu + delta)?, make(nu - delta)?))
        }
    }
}

fn check_k(family: &ParametricFamily, k: f64) -> Result<()> {
    if !(k <= family.omega()) {
        return Err(Error::OutOfRange { value: k, context: "K must not exceed omega".into() });
    }
    Ok(())
}

/// `ω_B(K) = ½(F_{ᾱ+Δα}(K) + F_{ᾱ-Δα}(K)) - F_ᾱ(K)`.
pub fn omega_b_with(family: &ParametricFamily, k: f64, delta: f64, which: PerturbedParameter) -> Result<f64> {
    check_k(family, k)?;
    let (up, down) = perturbed(family, which, delta)?;
    Ok(0.5 * (up.cdf(k) + down.cdf(k)) - family.cdf(k))
}

pub fn omega_b(family: &ParametricFamily, k: f64, delta: f64) -> Result<f64> {
    omega_b_with(family, k, delta, PerturbedParameter::Lambda)
}

/// `ω'_B(x) = ½(f_{ᾱ+Δα}(x) + f_{ᾱ-Δα}(x)) - f_ᾱ(x)`.
pub fn omega_b_pointwise_with(family: &ParametricFamily, x: f64, delta: f64, which: PerturbedParameter) -> Result<f64> {
    let (up, down) = perturbed(family, which, delta)?;
    Ok(0.5 * (up.pdf(x) + down.pdf(x)) - family.pdf(x))
}

pub fn omega_b_pointwise(family: &ParametricFamily, x: f64, delta: f64) -> Result<f64> {
    omega_b_pointwise_with(family, x, delta, PerturbedParameter::Lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignScan {
    /// `(x, ω'_B(x))` on `[K - 10·scale, K]`.
    pub grid: Vec<(f64, f64)>,
    pub constant_sign: bool,
    /// Common sign when constant, else 0.
    pub sign: i8,
}

/// Scan `ω'_B` below `K`; a constant sign carries over to `ω_B(K)`.
pub fn omega_b_sign_scan(family: &ParametricFamily, k: f64, delta: f64, points: usize) -> Result<SignScan> {
    check_k(family, k)?;
    if points < 2 {
        return Err(Error::invalid("sign scan needs at least two points"));
    }
    let lo = k - 10.0 * family.scale();
    let grid = (0..points)
        .map(|i| {
            let x = lo + (k - lo) * i as f64 / (points - 1) as f64;
            Ok((x, omega_b_pointwise(family, x, delta)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let pos = grid.iter().all(|p| p.1 > 0.0);
    let neg = grid.iter().all(|p| p.1 < 0.0);
    Ok(SignScan { grid, constant_sign: pos || neg, sign: if pos { 1 } else if neg { -1 } else { 0 } })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StressAsymmetry {
    pub base: f64,
    pub milder: f64,
    pub harsher: f64,
    /// `ψ(base) - ψ(harsher)`.
    pub worsening: f64,
    /// `ψ(milder) - ψ(base)`.
    pub improvement: f64,
    pub asymmetry: f64,
    pub flagged: bool,
}

/// Compare the loss from a harsher shock with the gain from a milder one.
pub fn stress_asymmetry(
    model: &ModelUnderTest,
    name: &str,
    base: f64,
    milder: f64,
    harsher: f64,
) -> Result<StressAsymmetry> {
    let i = model.index_of(name)?;
    if !((milder < base && base < harsher) || (harsher < base && base < milder)) {
        return Err(Error::invalid("milder and harsher shocks must bracket the base shock"));
    }
    let at_base = model.eval_at(i, base)?;
    let worsening = at_base - model.eval_at(i, harsher)?;
    let improvement = model.eval_at(i, milder)? - at_base;
    let asymmetry = worsening - improvement;
    Ok(StressAsymmetry { base, milder, harsher, worsening, improvement, asymmetry, flagged: asymmetry > 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StressEscalation {
    pub steps: Vec<StressAsymmetry>,
    /// Asymmetry strictly grows as the shocks widen.
    pub accelerating: bool,
}

/// Repeat the probe with both offsets from `base` scaled by each widening
/// factor (1 is the original pair).
pub fn stress_escalation(
    model: &ModelUnderTest,
    name: &str,
    base: f64,
    milder: f64,
    harsher: f64,
    widenings: &[f64],
) -> Result<StressEscalation> {
    if widenings.is_empty() || widenings.iter().any(|w| !(*w > 0.0)) || widenings.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("widening factors must be positive and increasing"));
    }
    let steps = widenings
        .iter()
        .map(|w| stress_asymmetry(model, name, base, base + w * (milder - base), base + w * (harsher - base)))
        .collect::<Result<Vec<_>>>()?;
    let accelerating = steps.windows(2).all(|s| s[1].asymmetry > s[0].asymmetry);
    Ok(StressEscalation { steps, accelerating })
}

/// Second-order check applied to the vega itself:
/// `[V(1.5Δs) + V(0.5Δs)] / (2 V(Δs))` with finite-difference `V`.
pub fn vvol_on_v(family: &ParametricFamily, k: f64, delta_s: f64) -> Result<f64> {
    let d = delta_s.abs();
    let hi = vega_sensitivity_fd(family, k, 1.5 * d)?;
    let lo = vega_sensitivity_fd(family, k, 0.5 * d)?;
    let mid = vega_sensitivity_fd(family, k, d)?;
    if mid == 0.0 {
        return Err(Error::DegenerateParameter("finite-difference vega vanishes".into()));
    }
    Ok((hi + lo) / (2.0 * mid))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeuristicSettings {
    pub ratio_tolerance: f64,
    pub significance_fraction: f64,
}

impl Default for HeuristicSettings {
    fn default() -> Self {
        Self { ratio_tolerance: RATIO_TOLERANCE, significance_fraction: SIGNIFICANCE_FRACTION }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterReport {
    pub name: String,
    pub base: f64,
    pub delta: f64,
    pub first_order: f64,
    /// `|sensitivity · Δp| > fraction · |ψ(p)|`: escalate to the second step.
    pub significant: bool,
    pub mu: f64,
    pub mu_prime: f64,
    #[serde(rename = "H_ratio")]
    pub h_ratio: f64,
    pub difference_form: bool,
    pub verdict: Verdict,
    pub broadness: BroadnessScan,
    #[serde(rename = "omega_A")]
    pub omega_a: f64,
}

pub const DEFAULT_MULTIPLIERS: [f64; 4] = [1.0, 2.0, 3.0, 4.0];

fn screen_one(model: &ModelUnderTest, p: &Parameter, settings: &HeuristicSettings, multipliers: &[f64]) -> Result<ParameterReport> {
    let first_order = first_order_screen(model, &p.name)?;
    let so = second_order_ratio(model, &p.name)?;
    Ok(ParameterReport {
        name: p.name.clone(),
        base: p.base,
        delta: p.delta,
        first_order,
        significant: (first_order * p.delta).abs() > settings.significance_fraction * so.mu.abs(),
        mu: so.mu,
        mu_prime: so.mu_prime,
        h_ratio: so.h_ratio,
        difference_form: so.difference_form,
        verdict: verdict(&so, settings.ratio_tolerance),
        broadness: broadness_scan(model, &p.name, multipliers)?,
        omega_a: omega_a(model, &p.name, &AlphaDistribution::default_for(p))?,
    })
}

/// Steps one to three for every parameter. Parameters are screened
/// concurrently unless the model is serial; results keep parameter order.
pub fn run_heuristic(
    model: &ModelUnderTest,
    settings: &HeuristicSettings,
    multipliers: &[f64],
) -> Result<Vec<ParameterReport>> {
    let params = model.parameters();
    if model.serial() {
        params.iter().map(|p| screen_one(model, p, settings, multipliers)).collect()
    } else {
        params.par_iter().map(|p| screen_one(model, p, settings, multipliers)).collect::<Vec<_>>().into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeficitSimulation {
    pub mean_unemployment: f64,
    pub sigma: f64,
    pub summary: SampleSummary,
    pub histogram: Vec<HistogramBin>,
}

/// Deficit under Gaussian unemployment around 9% with standard deviation
/// `sigma`.
pub fn deficit_monte_carlo(spec: &McSpec, sigma: f64, bins: usize) -> Result<DeficitSimulation> {
    let normal = Normal::new(9.0, sigma)
        .map_err(|e| Error::invalid(format!("unemployment sigma {sigma}: {e}")))?;
    let draws = draw_samples(&|rng: &mut crate::numerics::McRng| deficit(normal.sample(rng)), spec)?;
    Ok(DeficitSimulation {
        mean_unemployment: 9.0,
        sigma,
        summary: SampleSummary::from_samples(&draws)?,
        histogram: histogram(&draws, bins)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{normal_cdf, normal_pdf};

    fn square() -> ModelUnderTest {
        ModelUnderTest::expression("p^2", vec![Parameter::new("p", 1.0, 1.0)]).unwrap()
    }

    #[test]
    fn deficit_case() {
        let m = ModelUnderTest::builtin_deficit();
        assert_eq!(first_order_screen(&m, "unemployment").unwrap(), -237.5);
        let so = second_order_ratio(&m, "unemployment").unwrap();
        assert_eq!((so.mu, so.mu_prime, so.h_ratio), (-200.0, -312.5, 1.5625));
        assert_eq!(verdict(&so, RATIO_TOLERANCE), Verdict::Fragile);
        assert_eq!(omega_a(&m, "unemployment", &AlphaDistribution::TwoPoint { half_width: 1.0 }).unwrap(), -112.5);
        let s = stress_asymmetry(&m, "unemployment", 9.0, 8.0, 10.0).unwrap();
        assert_eq!((s.worsening, s.improvement, s.asymmetry), (350.0, 125.0, 225.0));
        assert!(s.flagged);
        let e = stress_escalation(&m, "unemployment", 9.0, 8.0, 10.0, &[1.0, 2.0, 3.0]).unwrap();
        assert!(e.accelerating);
    }

    #[test]
    fn linear_and_constant_models() {
        let m = ModelUnderTest::expression("3*p", vec![Parameter::new("p", 0.7, 0.2)]).unwrap();
        assert!((first_order_screen(&m, "p").unwrap() - 3.0).abs() < 1e-12);
        let so = second_order_ratio(&m, "p").unwrap();
        assert!((so.h_ratio - 1.0).abs() < 1e-12);
        assert_eq!(verdict(&so, RATIO_TOLERANCE), Verdict::Robust);
        assert!(omega_a(&m, "p", &AlphaDistribution::TwoPoint { half_width: 0.3 }).unwrap().abs() < 1e-12);
        let s = stress_asymmetry(&m, "p", 0.0, 1.0, -1.0).unwrap();
        assert!(s.asymmetry.abs() < 1e-12 && !s.flagged);
        let c = ModelUnderTest::expression("4", vec![Parameter::new("p", 0.0, 1.0)]).unwrap();
        assert_eq!(first_order_screen(&c, "p").unwrap(), 0.0);
    }

    #[test]
    fn zero_valuation_uses_difference_form() {
        let m = ModelUnderTest::expression("p^2", vec![Parameter::new("p", 0.0, 2.0)]).unwrap();
        let so = second_order_ratio(&m, "p").unwrap();
        assert!(so.difference_form);
        assert_eq!(so.h_ratio, 1.0);
        assert_eq!(verdict(&so, RATIO_TOLERANCE), Verdict::AntifragileBias);
    }

    #[test]
    fn quadratic_ratio_and_broadness() {
        let so = second_order_ratio(&square(), "p").unwrap();
        assert_eq!((so.mu, so.mu_prime, so.h_ratio), (1.0, 1.25, 1.25));
        let b = broadness_scan(&square(), "p", &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(b.ratios, vec![1.25, 2.0, 3.25]);
        assert!(b.broad && b.consistent);
        assert!(broadness_scan(&square(), "p", &[2.0, 1.0]).is_err());
    }

    #[test]
    fn pseudo_convexity_is_flagged() {
        // convex near 0, concave once (Δp/2)² > 10
        let m = ModelUnderTest::expression("100 + x^2 - x^4/10", vec![Parameter::new("x", 0.0, 1.0)]).unwrap();
        let b = broadness_scan(&m, "x", &[1.0, 2.0, 4.0, 8.0]).unwrap();
        assert!(b.ratios[0] > 1.0 && b.ratios[3] < 1.0);
        assert!(!b.consistent && !b.broad);
    }

    #[test]
    fn omega_a_matches_second_difference_sign() {
        let sq = ModelUnderTest::expression("a^2", vec![Parameter::new("a", 0.0, 2.0)]).unwrap();
        assert_eq!(omega_a(&sq, "a", &AlphaDistribution::TwoPoint { half_width: 1.0 }).unwrap(), 1.0);
        for src in ["a^3", "-a^4", "exp(a)", "log(a + 5)"] {
            let m = ModelUnderTest::expression(src, vec![Parameter::new("a", 0.5, 1.0)]).unwrap();
            let d = 0.4;
            let w = omega_a(&m, "a", &AlphaDistribution::TwoPoint { half_width: d }).unwrap();
            let sd = m.eval_at(0, 0.9).unwrap() - 2.0 * m.eval_at(0, 0.5).unwrap() + m.eval_at(0, 0.1).unwrap();
            assert_eq!(w.signum(), sd.signum(), "{src}");
        }
        let weighted = AlphaDistribution::Weighted { points: vec![(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)] };
        assert_eq!(omega_a(&sq, "a", &weighted).unwrap(), 0.5);
        let bad = AlphaDistribution::Weighted { points: vec![(0.0, 0.3)] };
        assert!(omega_a(&sq, "a", &bad).is_err());
    }

    #[test]
    fn omega_b_values() {
        let g = ParametricFamily::gaussian_scaling(0.0, 1.0).unwrap();
        let oracle = 0.5 * (normal_cdf(-2.0) + normal_cdf(-6.0)) - normal_cdf(-3.0);
        assert!((omega_b(&g, -3.0, 0.5).unwrap() - oracle).abs() < 1e-15);
        assert!((oracle - 0.0100252).abs() < 1e-7);
        let pw = 0.5 * (normal_pdf(2.0) / 1.5 + 2.0 * normal_pdf(6.0)) - normal_pdf(3.0);
        assert!((omega_b_pointwise(&g, -3.0, 0.5).unwrap() - pw).abs() < 1e-15);
        assert!((pw - 0.0135652).abs() < 1e-7);
        assert_eq!(omega_b(&g, -3.0, 0.0).unwrap(), 0.0);
        assert_eq!(omega_b_pointwise(&g, -3.0, 0.0).unwrap(), 0.0);
        assert!(omega_b(&g, 0.0, 0.5).unwrap().abs() < 1e-15);
        let centre = omega_b_pointwise(&g, 0.0, 0.5).unwrap();
        assert!((centre - normal_pdf(0.0) / 3.0).abs() < 1e-15);
        assert!(omega_b(&g, -3.0, 1.0).is_err());
        assert!(omega_b(&g, 0.5, 0.1).is_err());
    }

    #[test]
    fn omega_b_integrates_the_pointwise_bias() {
        let g = ParametricFamily::gaussian_scaling(0.0, 1.0).unwrap();
        for k in [-2.0, -3.0, -4.0, -1.0] {
            let direct = omega_b(&g, k, 0.5).unwrap();
            let integral = g.integrate_below(|x| omega_b_pointwise(&g, x, 0.5).unwrap(), k, &[]).unwrap().value;
            assert!((direct - integral).abs() < 1e-10, "{k}");
        }
        let mut k = -2.0;
        while k >= -8.0 {
            assert!(omega_b(&g, k, 0.5).unwrap() > 0.0);
            k -= 0.25;
        }
        let scan = omega_b_sign_scan(&g, -3.0, 0.5, 64).unwrap();
        assert!(scan.constant_sign && scan.sign == 1);
        let near = omega_b_sign_scan(&g, 0.0, 0.5, 64).unwrap();
        assert!(!near.constant_sign);
    }

    #[test]
    fn tail_exponent_perturbation() {
        let t = ParametricFamily::student_t_scaling(0.0, 3.0, 1.0).unwrap();
        // a thinner exponent on one side does not offset the fatter one
        assert!(omega_b_with(&t, -6.0, 1.0, PerturbedParameter::Nu).unwrap() > 0.0);
        assert!(omega_b_with(&t, -6.0, 2.5, PerturbedParameter::Nu).is_err());
        let g = ParametricFamily::gaussian_scaling(0.0, 1.0).unwrap();
        assert!(omega_b_with(&g, -2.0, 0.5, PerturbedParameter::Nu).is_err());
    }

    #[test]
    fn mirrored_convex_gains_are_not_flagged() {
        let m = ModelUnderTest::expression("x + x^2", vec![Parameter::new("x", 0.0, 1.0)]).unwrap();
        let s = stress_asymmetry(&m, "x", 0.0, 1.0, -1.0).unwrap();
        assert!(s.asymmetry < 0.0 && !s.flagged);
        // currency units do not matter
        let d = ModelUnderTest::builtin_deficit();
        let scaled = ModelUnderTest::function(|v| 1e3 * deficit(v[0]) + 7.0, vec![Parameter::new("u", 9.0, 2.0)]).unwrap();
        assert_eq!(
            stress_asymmetry(&d, "unemployment", 9.0, 8.0, 10.0).unwrap().flagged,
            stress_asymmetry(&scaled, "u", 9.0, 8.0, 10.0).unwrap().flagged
        );
        assert!(stress_asymmetry(&d, "unemployment", 9.0, 10.0, 11.0).is_err());
    }

    #[test]
    fn vvol_values() {
        let g = ParametricFamily::gaussian_scaling(0.0, 1.0).unwrap();
        assert_eq!(vvol_on_v(&g, 0.0, 0.05 * g.s_minus()).unwrap(), 1.0);
        let d = 0.05 * g.s_minus();
        let dev = vvol_on_v(&g, -2.0, d).unwrap() - 1.0;
        let dev_half = vvol_on_v(&g, -2.0, 0.5 * d).unwrap() - 1.0;
        assert!(dev.abs() < 1e-2 && dev != 0.0);
        // O(Δs²) deviation: halving the step quarters it
        assert!((dev / dev_half - 4.0).abs() < 0.1, "{dev} {dev_half}");
    }

    #[test]
    fn run_is_deterministic_and_ordered() {
        let m = ModelUnderTest::expression(
            "a^2 + 3*b - exp(c)",
            vec![Parameter::new("a", 1.0, 1.0), Parameter::new("b", 2.0, 0.5), Parameter::new("c", 0.0, 0.2)],
        )
        .unwrap();
        let s = HeuristicSettings::default();
        let par = run_heuristic(&m, &s, &DEFAULT_MULTIPLIERS).unwrap();
        let ser = run_heuristic(&m.clone().with_serial(true), &s, &DEFAULT_MULTIPLIERS).unwrap();
        assert_eq!(par, ser);
        assert_eq!(par.iter().map(|p| p.name.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
        assert_eq!(par[1].verdict, Verdict::Robust);
    }

    #[test]
    fn deficit_simulation() {
        let sim = deficit_monte_carlo(&McSpec::new(200_000, 7), 1.0, 40).unwrap();
        assert!((sim.summary.mean + 312.5).abs() < 4.0 * sim.summary.std_error);
        assert!(sim.summary.third_central_moment < 0.0);
        assert_eq!(sim.histogram.iter().map(|b| b.count).sum::<u64>(), 200_000);
        assert_eq!(sim, deficit_monte_carlo(&McSpec::new(200_000, 7), 1.0, 40).unwrap());
    }
}
