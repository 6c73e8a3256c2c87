//! Upper controls on left-tail fragility and the right-tail antifragility
//! measure.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::ParametricFamily;
use crate::fragility::{vega_sensitivity, DEGENERATE_SENSITIVITY};
use crate::numerics::refine_root;
use crate::payoff::{inherited_fragility, u_plus, PayoffMap};

/// Probed stress levels stop `GRID_DEPTH · scale` below `Ω`.
pub const GRID_DEPTH: f64 = 40.0;
/// Consecutive increasing doublings that flag an unbounded weighted vega.
pub const DIVERGENCE_RUN: usize = 3;
/// Relative slack on the antifragility inequality, so exact equality (the
/// linear case) never fails on rounding.
pub const CONDITION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeRange {
    LeftRay { k: f64 },
    Interval { k1: f64, k2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AsymptoticWeight {
    Exponential { a: f64 },
    Power { alpha: f64 },
}

impl AsymptoticWeight {
    fn weight(&self, distance: f64) -> f64 {
        match *self {
            AsymptoticWeight::Exponential { a } => (a * distance).exp(),
            AsymptoticWeight::Power { alpha } => distance.powf(alpha - 2.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            AsymptoticWeight::Exponential { a } => a,
            AsymptoticWeight::Power { alpha } => alpha,
        };
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("asymptotic weight parameter must be positive, got {v}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticRobustness {
    pub weight: AsymptoticWeight,
    pub finite: bool,
    /// Largest weighted vega seen on the grid (a lower bound when infinite).
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub range: ProbeRange,
    #[serde(rename = "R")]
    pub r: f64,
    /// Stress level at which `R` is attained.
    pub argmax: f64,
    pub b_bound: f64,
    pub passes: bool,
    pub asymptotic: Option<AsymptoticRobustness>,
    /// `(K', V(K'))` per probed level.
    pub grid: Vec<(f64, f64)>,
}

/// Left-ray grid: `K` and then geometrically spaced distances from `Ω` down
/// to `GRID_DEPTH · scale`.
fn left_ray_grid(family: &ParametricFamily, k: f64, n: usize) -> Vec<f64> {
    let om = family.omega();
    let d_max = GRID_DEPTH * family.scale();
    let d0 = om - k;
    if d0 >= d_max {
        return vec![k];
    }
    let start = if d0 > 0.0 { d0 } else { 1e-3 * family.scale() };
    let mut out = vec![k];
    for i in 0..n {
        let d = start * (d_max / start).powf(i as f64 / (n - 1) as f64);
        let kp = om - d;
        if kp < k {
            out.push(kp);
        }
    }
    out
}

fn uniform_grid(k1: f64, k2: f64, n: usize) -> Vec<f64> {
    // end points exact, not reconstructed
    (0..n).map(|i| if i == n - 1 { k2 } else { k1 + (k2 - k1) * i as f64 / (n - 1) as f64 }).collect()
}

fn check_grid_count(n: usize) -> Result<()> {
    if n < 16 {
        Err(Error::invalid("robustness grid needs at least 16 points"))
    } else {
        Ok(())
    }
}

fn report<F: Fn(f64) -> Result<f64>>(
    range: ProbeRange,
    ks: Vec<f64>,
    v: F,
    b_bound: f64,
) -> Result<RobustnessReport> {
    if !b_bound.is_finite() {
        return Err(Error::invalid("b must be finite"));
    }
    let grid = ks.into_iter().map(|k| Ok((k, v(k)?))).collect::<Result<Vec<_>>>()?;
    // first maximum in grid order, so ties resolve deterministically
    let (argmax, r) = grid.iter().fold((f64::NAN, f64::NEG_INFINITY), |acc, &(k, x)| if x > acc.1 { (k, x) } else { acc });
    Ok(RobustnessReport { range, r, argmax, b_bound, passes: r <= b_bound, asymptotic: None, grid })
}

/// `R_(-inf, K] = max_{K' ≤ K} V(K')` and whether it stays below `b`.
pub fn robustness(family: &ParametricFamily, k: f64, b_bound: f64, grid_count: usize) -> Result<RobustnessReport> {
    check_grid_count(grid_count)?;
    let ks = left_ray_grid(family, k, grid_count);
    report(ProbeRange::LeftRay { k }, ks, |kp| vega_sensitivity(family, kp), b_bound)
}

/// `R_[K1, K2]` on a uniform grid.
pub fn robustness_interval(
    family: &ParametricFamily,
    k1: f64,
    k2: f64,
    b_bound: f64,
    grid_count: usize,
) -> Result<RobustnessReport> {
    check_grid_count(grid_count)?;
    if !(k1 < k2) {
        return Err(Error::invalid("interval needs K1 < K2"));
    }
    report(
        ProbeRange::Interval { k1, k2 },
        uniform_grid(k1, k2, grid_count),
        |kp| vega_sensitivity(family, kp),
        b_bound,
    )
}

/// Left-ray robustness of an exposure `Y = φ(X)`, using its inherited
/// fragility.
pub fn payoff_robustness(
    map: &PayoffMap,
    family: &ParametricFamily,
    k: f64,
    b_bound: f64,
    grid_count: usize,
) -> Result<RobustnessReport> {
    check_grid_count(grid_count)?;
    let ks = left_ray_grid(family, k, grid_count);
    report(ProbeRange::LeftRay { k }, ks, |kp| inherited_fragility(map, family, kp), b_bound)
}

/// Weighted vega on a doubling grid of distances `(Ω - K)·2^j` reaching at
/// least `GRID_DEPTH · scale`; infinite when it keeps increasing over the
/// last doublings.
fn asymptotic<F: Fn(f64) -> Result<f64>>(
    family: &ParametricFamily,
    k: f64,
    weight: AsymptoticWeight,
    v: F,
) -> Result<AsymptoticRobustness> {
    weight.validate()?;
    let om = family.omega();
    if k > om {
        return Err(Error::precondition(format!("K = {k} lies above omega")));
    }
    let scale = family.scale();
    let mut d = (om - k).max(1e-3 * scale);
    let d_max = (GRID_DEPTH * scale).max(8.0 * d);
    let mut values = Vec::new();
    loop {
        values.push(weight.weight(d) * v(om - d)?);
        if d >= d_max {
            break;
        }
        d *= 2.0;
    }
    let n = values.len();
    let rising = n > DIVERGENCE_RUN && values[n - DIVERGENCE_RUN - 1..].windows(2).all(|w| w[1] > w[0]);
    let value = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(AsymptoticRobustness { weight, finite: !rising && value.is_finite(), value })
}

/// `max_{K' ≤ K} e^{a(Ω-K')} V(K')`.
pub fn asymptotic_robustness_exp(family: &ParametricFamily, k: f64, a: f64) -> Result<AsymptoticRobustness> {
    asymptotic(family, k, AsymptoticWeight::Exponential { a }, |kp| vega_sensitivity(family, kp))
}

/// `max_{K' ≤ K} (Ω-K')^{α-2} V(K')`.
pub fn asymptotic_robustness_pow(family: &ParametricFamily, k: f64, alpha: f64) -> Result<AsymptoticRobustness> {
    asymptotic(family, k, AsymptoticWeight::Power { alpha }, |kp| vega_sensitivity(family, kp))
}

// ---- right tail -------------------------------------------------------------

fn check_window(family: &ParametricFamily, l: f64, h: f64) -> Result<()> {
    if !(l >= family.omega() && h > l) || l.is_nan() {
        return Err(Error::precondition(format!(
            "right window needs H > L >= omega, got L = {l}, H = {h}"
        )));
    }
    Ok(())
}

/// `ξ⁺(L, H) = ∫_L^H (x - Ω) f_λ(x) dx`; `H` may be infinite.
pub fn xi_plus(family: &ParametricFamily, l: f64, h: f64) -> Result<f64> {
    if l == h {
        return Ok(0.0);
    }
    check_window(family, l, h)?;
    let om = family.omega();
    let g = |x: f64| (x - om) * family.pdf(x);
    if h.is_infinite() {
        Ok(family.integrate_above(g, l, &[])?.value)
    } else {
        Ok(integrate_with_kinks(family, g, l, h)?)
    }
}

fn integrate_with_kinks<G: Fn(f64) -> f64>(family: &ParametricFamily, g: G, a: f64, b: f64) -> Result<f64> {
    let mut pts = vec![a];
    pts.extend(family.breakpoints().into_iter().filter(|p| *p > a && *p < b));
    pts.push(b);
    Ok(crate::numerics::integrate_breakpoints(g, &pts, family.quadrature())?.value)
}

/// `∂s⁺/∂λ = ∫_Ω^inf (x - Ω) ∂f/∂λ = -∫_Ω^inf ∂F/∂λ`.
pub fn d_s_plus_d_lambda(family: &ParametricFamily) -> Result<f64> {
    let v = -family.integrate_above(|x| family.d_cdf_d_lambda(x), family.omega(), &[])?.value;
    if v.abs() < DEGENERATE_SENSITIVITY {
        return Err(Error::DegenerateParameter(format!("ds+/dlambda = {v:e}")));
    }
    Ok(v)
}

/// `∫_L^H (ψ(x) - Ω) ∂f/∂λ dx` through `∂F/∂λ`, for an increasing `ψ` with
/// derivative `dpsi`.
fn window_vega<P, D>(family: &ParametricFamily, psi: P, dpsi: D, l: f64, h: f64) -> Result<f64>
where
    P: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let om = family.omega();
    let inner = |x: f64| dpsi(x) * family.d_cdf_d_lambda(x);
    let (boundary_h, integral) = if h.is_infinite() {
        (0.0, family.integrate_above(inner, l, &[])?.value)
    } else {
        ((psi(h) - om) * family.d_cdf_d_lambda(h), integrate_with_kinks(family, inner, l, h)?)
    };
    Ok(boundary_h - (psi(l) - om) * family.d_cdf_d_lambda(l) - integral)
}

/// `W = ∂ξ⁺(L, H)/∂s⁺`.
pub fn antifragility_w(family: &ParametricFamily, l: f64, h: f64) -> Result<f64> {
    check_window(family, l, h)?;
    let den = d_s_plus_d_lambda(family)?;
    if l == family.omega() && h.is_infinite() {
        return Ok(1.0);
    }
    Ok(window_vega(family, |x| x, |_| 1.0, l, h)? / den)
}

/// `W_X = ∫_{φ(L)}^{φ(H)} (y - Ω) ∂g/∂λ dy / ∫_Ω^inf (x - Ω) ∂f/∂λ dx`.
pub fn antifragility_w_x(map: &PayoffMap, family: &ParametricFamily, l: f64, h: f64) -> Result<f64> {
    check_window(family, l, h)?;
    map.check_on_support(family)?;
    let den = d_s_plus_d_lambda(family)?;
    Ok(window_vega(family, |x| map.value(x), |x| map.d1(x), l, h)? / den)
}

/// `λ` at which `s⁺ = target`.
pub fn lambda_from_s_plus(family: &ParametricFamily, target: f64) -> Result<f64> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::OutOfRange { value: target, context: "target s+ must be positive".into() });
    }
    if family.kind().is_scaling() {
        return Ok(target / family.with_lambda(1.0)?.s_plus());
    }
    // s⁺ falls as the shifting family moves left.
    let f = |l: f64| Ok(family.with_lambda(l)?.s_plus() - target);
    let step = family.spread();
    let (mut lo, mut hi) = (family.lambda() - step, family.lambda() + step);
    let mut k = 0;
    while f(lo)? < 0.0 && k < 60 {
        lo -= step * 2f64.powi(k);
        k += 1;
    }
    k = 0;
    while f(hi)? > 0.0 && k < 60 {
        hi += step * 2f64.powi(k);
        k += 1;
    }
    refine_root(f, lo, hi, 1e-14 * step.max(family.lambda().abs()))
}

/// `(ξ⁺(s⁺ + Δ) - ξ⁺(s⁺ - Δ)) / (2Δ)`.
pub fn antifragility_w_fd(family: &ParametricFamily, l: f64, h: f64, delta: f64) -> Result<f64> {
    check_window(family, l, h)?;
    let s = family.s_plus();
    let d = delta.abs();
    if !(d > 0.0 && d < s) {
        return Err(Error::OutOfRange { value: delta, context: format!("need 0 < |delta| < s+ = {s}") });
    }
    let up = family.with_lambda(lambda_from_s_plus(family, s + d)?)?;
    let down = family.with_lambda(lambda_from_s_plus(family, s - d)?)?;
    Ok((xi_plus(&up, l, h)? - xi_plus(&down, l, h)?) / (2.0 * d))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AntifragilityReport {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "H_upper")]
    pub h_upper: f64,
    pub s_plus: f64,
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "W_X")]
    pub w_x: f64,
    pub a_scale: f64,
    /// `R` of the exposure on the left ray below `Ω`.
    pub left_r: f64,
    pub b_bound: f64,
    pub robust_below: bool,
    pub condition_two: bool,
    pub antifragile: bool,
}

/// Local antifragility over `[L, H]`: b-robust below `Ω` and
/// `W_X ≥ (u⁺/s⁺) W`.
pub fn antifragile_check(
    map: &PayoffMap,
    family: &ParametricFamily,
    l: f64,
    h: f64,
    b_bound: f64,
    grid_count: usize,
) -> Result<AntifragilityReport> {
    let om = family.omega();
    if !(l > om) {
        return Err(Error::precondition("antifragility window needs L > omega"));
    }
    let w = antifragility_w(family, l, h)?;
    let w_x = antifragility_w_x(map, family, l, h)?;
    let s_plus = family.s_plus();
    let a_scale = u_plus(map, family)? / s_plus;
    let left = payoff_robustness(map, family, om, b_bound, grid_count)?;
    let target = a_scale * w;
    let condition_two = w_x >= target - CONDITION_SLACK * target.abs().max(w_x.abs());
    Ok(AntifragilityReport {
        l,
        h_upper: h,
        s_plus,
        w,
        w_x,
        a_scale,
        left_r: left.r,
        b_bound,
        robust_below: left.passes,
        condition_two,
        antifragile: left.passes && condition_two,
    })
}

/// Tail weight class from the exponential asymptotic robustness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailClass {
    Thin,
    Fat,
}

/// Left tail: finite `e^{a(Ω-K')} V` (a = 1) means thin.
pub fn left_tail_class(family: &ParametricFamily) -> Result<TailClass> {
    let k = family.omega() - family.scale();
    let r = asymptotic_robustness_exp(family, k, 1.0 / family.scale())?;
    Ok(if r.finite { TailClass::Thin } else { TailClass::Fat })
}

/// Right tail: the same test on `e^{a(L-Ω)} W(L, inf)`.
pub fn right_tail_class(family: &ParametricFamily) -> Result<TailClass> {
    let om = family.omega();
    let scale = family.s_plus();
    let mut d = scale;
    let d_max = GRID_DEPTH * scale;
    let mut values = Vec::new();
    loop {
        values.push((d / scale).exp() * antifragility_w(family, om + d, f64::INFINITY)?);
        if d >= d_max {
            break;
        }
        d *= 2.0;
    }
    let n = values.len();
    let rising = n > DIVERGENCE_RUN && values[n - DIVERGENCE_RUN - 1..].windows(2).all(|w| w[1] > w[0]);
    Ok(if rising { TailClass::Fat } else { TailClass::Thin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::normal_pdf;
    use crate::payoff::PayoffKind;

    fn gauss() -> ParametricFamily {
        ParametricFamily::gaussian_scaling(0.0, 1.0).unwrap()
    }

    fn t3() -> ParametricFamily {
        ParametricFamily::student_t_scaling(0.0, 3.0, 1.0).unwrap()
    }

    #[test]
    fn gaussian_left_ray_below_minus_two_is_one_robust() {
        let r = robustness(&gauss(), -2.0, 1.0, 32).unwrap();
        assert!(r.passes);
        assert_eq!(r.argmax, -2.0);
        assert!(r.grid.iter().all(|&(_, v)| v <= r.r));
        assert!(!robustness(&gauss(), -2.0, 0.0, 32).unwrap().passes);
    }

    #[test]
    fn enlarging_the_interval_never_lowers_r() {
        let g = gauss();
        let a = robustness_interval(&g, -3.0, -2.0, 1.0, 16).unwrap();
        let b = robustness_interval(&g, -3.0, -1.0, 1.0, 31).unwrap();
        assert!(b.r >= a.r);
        let c = robustness(&g, -1.0, 1.0, 32).unwrap();
        assert!(c.r >= robustness(&g, -2.0, 1.0, 32).unwrap().r);
    }

    #[test]
    fn bounded_payoff_is_impervious_below_the_floor() {
        let m = PayoffMap::with_bounds(PayoffKind::Identity, 0.0, Some(-1.0), None).unwrap();
        let r = payoff_robustness(&m, &gauss(), -1.5, 0.0, 32).unwrap();
        assert_eq!(r.r, 0.0);
        assert!(r.passes);
    }

    #[test]
    fn asymptotic_classes() {
        let g = gauss();
        for a in [0.5, 1.0, 2.0] {
            assert!(asymptotic_robustness_exp(&g, -1.0, a).unwrap().finite);
        }
        for alpha in [3.0, 6.0, 10.0] {
            assert!(asymptotic_robustness_pow(&g, -1.0, alpha).unwrap().finite);
        }
        assert!(!asymptotic_robustness_exp(&t3(), -1.0, 1.0).unwrap().finite);
        assert!(asymptotic_robustness_pow(&t3(), -1.0, 3.0).unwrap().finite);
        assert!(!asymptotic_robustness_pow(&t3(), -1.0, 6.0).unwrap().finite);
        let small = asymptotic_robustness_exp(&t3(), -1.0, 1e-9).unwrap();
        assert!(small.finite);
    }

    #[test]
    fn xi_plus_values() {
        let g = gauss();
        let v = xi_plus(&g, 1.0, 2.0).unwrap();
        assert!((v - (normal_pdf(1.0) - normal_pdf(2.0))).abs() < 1e-12);
        assert_eq!(xi_plus(&g, 1.0, 1.0).unwrap(), 0.0);
        assert!((xi_plus(&g, 0.0, f64::INFINITY).unwrap() - g.s_plus()).abs() < 1e-12);
    }

    #[test]
    fn w_values() {
        for f in [gauss(), t3(), ParametricFamily::gaussian_shifting(0.0, 1.0, 0.4).unwrap()] {
            assert_eq!(antifragility_w(&f, 0.0, f64::INFINITY).unwrap(), 1.0);
            let full = window_vega(&f, |x| x, |_| 1.0, 0.0, f64::INFINITY).unwrap() / d_s_plus_d_lambda(&f).unwrap();
            assert!((full - 1.0).abs() < 1e-9);
        }
        let g = gauss();
        let w = antifragility_w(&g, 1.0, 2.0).unwrap();
        // Scaling oracle: ∂ξ⁺/∂λ = ∫_1^2 x ∂f/∂λ = ∫ x (x² - 1) φ(x) dx over [1, 2], s⁺ = λ φ(0).
        // ∫ x³φ = -(x² + 2)φ, ∫ xφ = -φ.
        let num = (-(4.0 + 2.0) * normal_pdf(2.0) + 3.0 * normal_pdf(1.0)) - (normal_pdf(1.0) - normal_pdf(2.0));
        assert!((w - num / normal_pdf(0.0)).abs() < 1e-10, "{w}");
        assert!(w > 0.0 && w < 1.0);
        assert!(antifragility_w(&g, 10.0, 11.0).unwrap() < 1e-6);
        let fd = antifragility_w_fd(&g, 1.0, 2.0, 1e-4 * g.s_plus()).unwrap();
        assert!((fd - w).abs() < 1e-7);
    }

    #[test]
    fn identity_is_never_rejected_by_condition_two() {
        let g = gauss();
        for (l, h) in [(0.5, 1.0), (1.0, 3.0), (2.0, f64::INFINITY)] {
            let r = antifragile_check(&PayoffMap::identity(0.0), &g, l, h, 2.0, 32).unwrap();
            assert!(r.condition_two);
            assert!((r.a_scale - 1.0).abs() < 1e-12);
            assert!(r.antifragile);
        }
    }

    #[test]
    fn right_convexity_is_antifragile_and_concavity_is_not() {
        let g = gauss();
        let convex = PayoffMap::new(PayoffKind::RightQuadratic { beta: 0.1, convex: true }, 0.0).unwrap();
        let r = antifragile_check(&convex, &g, 1.0, 3.0, 1.25, 32).unwrap();
        assert!(r.condition_two && r.robust_below && r.antifragile, "{r:?}");
        // V peaks at 1.213 near K = -1, so b = 1 fails condition one.
        assert!(!antifragile_check(&convex, &g, 1.0, 3.0, 1.0, 32).unwrap().robust_below);
        let concave =
            PayoffMap::with_bounds(PayoffKind::RightQuadratic { beta: 0.1, convex: false }, 0.0, None, Some(5.0))
                .unwrap();
        let r = antifragile_check(&concave, &g, 1.0, 3.0, 1.25, 32).unwrap();
        assert!(!r.condition_two && !r.antifragile);
    }

    #[test]
    fn tail_classes() {
        assert_eq!(left_tail_class(&gauss()).unwrap(), TailClass::Thin);
        assert_eq!(left_tail_class(&t3()).unwrap(), TailClass::Fat);
        assert_eq!(right_tail_class(&gauss()).unwrap(), TailClass::Thin);
        assert_eq!(right_tail_class(&t3()).unwrap(), TailClass::Fat);
    }
}
