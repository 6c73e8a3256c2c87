//! Monotone exposures `Y = φ(X)` and the fragility they inherit from `X`.
//!
//! Every map is recentred so that `φ(Ω) = Ω`. An optional floor and cap make
//! the map flat outside `[floor, cap]`; that is how bounded payoffs are
//! expressed and how convex examples are kept increasing.

mod table;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::ParametricFamily;
use crate::fragility::{mu_inflexion, vega_sensitivity, TransferFunction};
use crate::numerics::{central_difference, refine_root, Estimate};

pub use table::PayoffTable;

/// Points of the increasing-map check.
pub const MONOTONE_GRID: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum PayoffKind {
    Identity,
    Affine { slope: f64, intercept: f64 },
    /// `x - βx²`.
    QuadraticConcave { beta: f64 },
    /// `x + βx²`; needs a floor at or above the vertex `-1/(2β)`.
    QuadraticConvex { beta: f64 },
    /// `x + β((x-Ω)⁺)²`, or minus when concave (then a cap is needed).
    RightQuadratic { beta: f64, convex: bool },
    /// `Ω + z / (1 + |z/c|^p)^{1/p}` with `z = x - Ω`: convex below `Ω`,
    /// concave above, bounded by `Ω ± c`.
    PowerSigmoid { c: f64, p: f64 },
    /// `z^a` for `z ≥ 0` and `-γ|z|^b` for `z < 0`, with `z = x - Ω`.
    KahnemanTversky { a: f64, b: f64, gamma: f64 },
    /// Coefficients in ascending degree.
    Polynomial(Vec<f64>),
    /// Monotone cubic through `(x, phi)` rows, flat beyond the table.
    Tabulated(Arc<PayoffTable>),
}

impl PayoffKind {
    pub fn name(&self) -> &'static str {
        match self {
            PayoffKind::Identity => "identity",
            PayoffKind::Affine { .. } => "affine",
            PayoffKind::QuadraticConcave { .. } => "quadratic_concave",
            PayoffKind::QuadraticConvex { .. } => "quadratic_convex",
            PayoffKind::RightQuadratic { .. } => "right_quadratic",
            PayoffKind::PowerSigmoid { .. } => "power_sigmoid",
            PayoffKind::KahnemanTversky { .. } => "kahneman_tversky",
            PayoffKind::Polynomial(_) => "polynomial",
            PayoffKind::Tabulated(_) => "tabulated",
        }
    }

    /// Standard prospect-theory calibration.
    pub fn kahneman_tversky_default() -> Self {
        PayoffKind::KahnemanTversky { a: 0.88, b: 0.88, gamma: 2.25 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMap {
    kind: PayoffKind,
    omega: f64,
    shift: f64,
    floor: Option<f64>,
    cap: Option<f64>,
}

impl PayoffMap {
    pub fn new(kind: PayoffKind, omega: f64) -> Result<Self> {
        Self::with_bounds(kind, omega, None, None)
    }

    /// A map that is flat below `floor` and above `cap`.
    pub fn with_bounds(kind: PayoffKind, omega: f64, floor: Option<f64>, cap: Option<f64>) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::invalid("omega must be finite"));
        }
        validate_kind(&kind)?;
        let (mut floor, mut cap) = (floor, cap);
        if let PayoffKind::Tabulated(t) = &kind {
            floor = Some(floor.map_or(t.lower(), |f| f.max(t.lower())));
            cap = Some(cap.map_or(t.upper(), |c| c.min(t.upper())));
        }
        if let Some(f) = floor {
            if !(f.is_finite() && f < omega) {
                return Err(Error::invalid(format!("floor {f} must be finite and below omega")));
            }
        }
        if let Some(c) = cap {
            if !(c.is_finite() && c > omega) {
                return Err(Error::invalid(format!("cap {c} must be finite and above omega")));
            }
        }
        let mut map = Self { kind, omega, shift: 0.0, floor, cap };
        map.shift = omega - map.inner(omega);
        let lo = floor.unwrap_or(omega - 10.0 * omega.abs().max(1.0));
        map.check_increasing(lo, omega)?;
        Ok(map)
    }

    pub fn identity(omega: f64) -> Self {
        Self { kind: PayoffKind::Identity, omega, shift: 0.0, floor: None, cap: None }
    }

    pub fn kind(&self) -> &PayoffKind {
        &self.kind
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn floor(&self) -> Option<f64> {
        self.floor
    }

    pub fn cap(&self) -> Option<f64> {
        self.cap
    }

    /// The interval on which the map is strictly increasing.
    pub fn domain(&self) -> (f64, f64) {
        (self.floor.unwrap_or(f64::NEG_INFINITY), self.cap.unwrap_or(f64::INFINITY))
    }

    fn clamp(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        x.max(lo).min(hi)
    }

    fn inside(&self, x: f64) -> bool {
        let (lo, hi) = self.domain();
        x >= lo && x <= hi
    }

    fn raw(&self, x: f64) -> f64 {
        let om = self.omega;
        match &self.kind {
            PayoffKind::Identity => x,
            PayoffKind::Affine { slope, intercept } => slope * x + intercept,
            PayoffKind::QuadraticConcave { beta } => x - beta * x * x,
            PayoffKind::QuadraticConvex { beta } => x + beta * x * x,
            PayoffKind::RightQuadratic { beta, convex } => {
                let z = (x - om).max(0.0);
                if *convex { x + beta * z * z } else { x - beta * z * z }
            }
            PayoffKind::PowerSigmoid { c, p } => {
                let z = x - om;
                om + z / (1.0 + (z / c).abs().powf(*p)).powf(1.0 / p)
            }
            PayoffKind::KahnemanTversky { a, b, gamma } => {
                let z = x - om;
                if z >= 0.0 { om + z.powf(*a) } else { om - gamma * (-z).powf(*b) }
            }
            PayoffKind::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci),
            PayoffKind::Tabulated(t) => t.value(x),
        }
    }

    fn raw_d1(&self, x: f64) -> f64 {
        let om = self.omega;
        match &self.kind {
            PayoffKind::Identity => 1.0,
            PayoffKind::Affine { slope, .. } => *slope,
            PayoffKind::QuadraticConcave { beta } => 1.0 - 2.0 * beta * x,
            PayoffKind::QuadraticConvex { beta } => 1.0 + 2.0 * beta * x,
            PayoffKind::RightQuadratic { beta, convex } => {
                let z = (x - om).max(0.0);
                if *convex { 1.0 + 2.0 * beta * z } else { 1.0 - 2.0 * beta * z }
            }
            PayoffKind::PowerSigmoid { c, p } => {
                let r = ((x - om) / c).abs().powf(*p);
                (1.0 + r).powf(-(1.0 + p) / p)
            }
            PayoffKind::KahnemanTversky { a, b, gamma } => {
                let z = x - om;
                if z > 0.0 {
                    a * z.powf(a - 1.0)
                } else if z < 0.0 {
                    gamma * b * (-z).powf(b - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            PayoffKind::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, &ci)| acc * x + i as f64 * ci),
            PayoffKind::Tabulated(t) => {
                let h = self.table_step(t);
                central_difference(|u| Ok(t.value(u)), x, h).unwrap_or(f64::NAN)
            }
        }
    }

    fn raw_d2(&self, x: f64) -> f64 {
        let om = self.omega;
        match &self.kind {
            PayoffKind::Identity | PayoffKind::Affine { .. } => 0.0,
            PayoffKind::QuadraticConcave { beta } => -2.0 * beta,
            PayoffKind::QuadraticConvex { beta } => 2.0 * beta,
            PayoffKind::RightQuadratic { beta, convex } => {
                if x <= om {
                    0.0
                } else if *convex {
                    2.0 * beta
                } else {
                    -2.0 * beta
                }
            }
            PayoffKind::PowerSigmoid { c, p } => {
                let z = x - om;
                let r = (z / c).abs().powf(*p);
                -(1.0 + p) * (1.0 + r).powf(-(1.0 + 2.0 * p) / p) * z.abs().powf(p - 1.0) * z.signum()
                    / c.abs().powf(*p)
            }
            PayoffKind::KahnemanTversky { a, b, gamma } => {
                let z = x - om;
                if z > 0.0 {
                    a * (a - 1.0) * z.powf(a - 2.0)
                } else if z < 0.0 {
                    -gamma * b * (b - 1.0) * (-z).powf(b - 2.0)
                } else {
                    f64::NAN
                }
            }
            PayoffKind::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (i, &ci)| acc * x + (i * (i - 1)) as f64 * ci),
            PayoffKind::Tabulated(t) => {
                let h = self.table_step(t);
                (t.value(x + h) - 2.0 * t.value(x) + t.value(x - h)) / (h * h)
            }
        }
    }

    fn table_step(&self, t: &PayoffTable) -> f64 {
        1e-5 * (t.upper() - t.lower())
    }

    fn inner(&self, x: f64) -> f64 {
        self.raw(self.clamp(x))
    }

    pub fn value(&self, x: f64) -> f64 {
        self.inner(x) + self.shift
    }

    /// `φ'(x)`; zero where the map is flat.
    pub fn d1(&self, x: f64) -> f64 {
        if self.inside(x) { self.raw_d1(x) } else { 0.0 }
    }

    /// `φ''(x)` away from the floor and cap (the jumps of `φ'` there are
    /// handled separately by the integrals that need them).
    pub fn d2(&self, x: f64) -> f64 {
        if self.inside(x) { self.raw_d2(x) } else { 0.0 }
    }

    /// Extra quadrature breakpoints: kinks of the map.
    fn kinks(&self) -> Vec<f64> {
        self.floor.into_iter().chain(self.cap).collect()
    }

    /// `φ' > 0` on a uniform grid over `[lo, hi]` (restricted to the
    /// increasing domain).
    pub fn check_increasing(&self, lo: f64, hi: f64) -> Result<()> {
        let (dlo, dhi) = self.domain();
        let (lo, hi) = (lo.max(dlo), hi.min(dhi));
        if !(hi > lo) {
            return Ok(());
        }
        let n = MONOTONE_GRID;
        for i in 0..n {
            // open at a floor, where a convex map may start with zero slope
            let t = (i as f64 + if dlo == lo { 0.5 } else { 0.0 }) / (n - 1) as f64;
            let x = lo + (hi - lo) * t.min(1.0);
            let d = self.raw_d1(x);
            if !(d > 0.0) {
                return Err(Error::invalid(format!(
                    "{} map is not increasing at x = {x} (slope {d})",
                    self.kind.name()
                )));
            }
        }
        Ok(())
    }

    /// Check the Theorem-1 precondition against a family: increasing on the
    /// family's left support.
    pub fn check_left_of(&self, family: &ParametricFamily) -> Result<()> {
        let (lo, _) = family.support_interval(1e-12);
        self.check_increasing(lo, self.omega)
    }

    pub fn check_on_support(&self, family: &ParametricFamily) -> Result<()> {
        let (lo, hi) = family.support_interval(1e-12);
        self.check_increasing(lo, hi)
    }

    fn same_omega(&self, family: &ParametricFamily) -> Result<()> {
        if self.omega != family.omega() {
            return Err(Error::precondition(format!(
                "payoff reference point {} differs from the family's {}",
                self.omega,
                family.omega()
            )));
        }
        Ok(())
    }

    /// `inf φ` and `sup φ`.
    pub fn range(&self) -> (f64, f64) {
        let lo = match (&self.kind, self.floor) {
            (_, Some(f)) => self.value(f),
            (PayoffKind::PowerSigmoid { c, .. }, None) => self.omega - c.abs(),
            _ => f64::NEG_INFINITY,
        };
        let hi = match (&self.kind, self.cap) {
            (_, Some(c)) => self.value(c),
            (PayoffKind::PowerSigmoid { c, .. }, None) => self.omega + c.abs(),
            _ => f64::INFINITY,
        };
        (lo, hi)
    }

    /// `φ⁻¹(y)` by bracketed refinement.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let (rlo, rhi) = self.range();
        if !y.is_finite() || y < rlo || y > rhi || (y == rlo && self.floor.is_none()) || (y == rhi && self.cap.is_none()) {
            return Err(Error::OutOfDomain { x: y, lo: rlo, hi: rhi });
        }
        let (dlo, dhi) = self.domain();
        let g = |x: f64| Ok(self.value(x) - y);
        let mut lo = if dlo.is_finite() { dlo } else { self.omega - 1.0 };
        let mut hi = if dhi.is_finite() { dhi } else { self.omega + 1.0 };
        let mut step = 1.0;
        while self.value(lo) > y {
            step *= 2.0;
            lo -= step;
            if step > 1e300 {
                return Err(Error::OutOfDomain { x: y, lo: rlo, hi: rhi });
            }
        }
        step = 1.0;
        while self.value(hi) < y {
            step *= 2.0;
            hi += step;
            if step > 1e300 {
                return Err(Error::OutOfDomain { x: y, lo: rlo, hi: rhi });
            }
        }
        let tol = 1e-14 * (1.0 + lo.abs().max(hi.abs()));
        refine_root(g, lo, hi, tol)
    }
}

fn validate_kind(kind: &PayoffKind) -> Result<()> {
    let pos = |name: &str, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
        }
    };
    match kind {
        PayoffKind::Identity | PayoffKind::Tabulated(_) => Ok(()),
        PayoffKind::Affine { slope, intercept } => {
            pos("slope", *slope)?;
            if intercept.is_finite() { Ok(()) } else { Err(Error::invalid("intercept must be finite")) }
        }
        PayoffKind::QuadraticConcave { beta }
        | PayoffKind::QuadraticConvex { beta }
        | PayoffKind::RightQuadratic { beta, .. } => pos("beta", *beta),
        PayoffKind::PowerSigmoid { c, p } => {
            pos("c", *c)?;
            if *p > 1.0 && p.is_finite() { Ok(()) } else { Err(Error::invalid("power_sigmoid needs p > 1")) }
        }
        PayoffKind::KahnemanTversky { a, b, gamma } => {
            pos("a", *a)?;
            pos("b", *b)?;
            pos("gamma", *gamma)
        }
        PayoffKind::Polynomial(c) => {
            if c.len() < 2 || c.iter().any(|v| !v.is_finite()) {
                Err(Error::invalid("polynomial needs at least two finite coefficients"))
            } else {
                Ok(())
            }
        }
    }
}

/// `G_λ(y) = Pr(φ(X) < y) = F_λ(φ⁻¹(y))`.
pub fn pushforward_cdf(map: &PayoffMap, family: &ParametricFamily, y: f64) -> Result<f64> {
    map.same_omega(family)?;
    let (rlo, _) = map.range();
    if map.floor.is_some() && y <= rlo {
        // Y has an atom at the floor value; Pr(Y < floor value) = 0.
        if y < rlo {
            return Err(Error::OutOfDomain { x: y, lo: rlo, hi: map.range().1 });
        }
        return Ok(0.0);
    }
    Ok(family.cdf(map.inverse(y)?))
}

/// `u⁻(λ) = ∫_{-inf}^Ω F_λ φ' dx`, the left semi-deviation of `Y`.
pub fn u_semideviation(map: &PayoffMap, family: &ParametricFamily) -> Result<f64> {
    map.same_omega(family)?;
    Ok(family.integrate_below(|x| family.cdf(x) * map.d1(x), map.omega, &map.kinks())?.value)
}

/// `u⁺(λ) = ∫_Ω^inf (1 - F_λ) φ' dx`, the right semi-deviation of `Y`.
pub fn u_plus(map: &PayoffMap, family: &ParametricFamily) -> Result<f64> {
    map.same_omega(family)?;
    Ok(family.integrate_above(|x| family.survival(x) * map.d1(x), map.omega, &map.kinks())?.value)
}

/// λ-derivatives of the inherited left integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InheritedParts {
    /// `I_Y^L = ∫ ∂F^K/∂λ φ'`.
    pub barrier: f64,
    /// `I_Y = ∫ ∂F/∂λ φ'`.
    pub plain: f64,
}

fn weighted_d_put(map: &PayoffMap, family: &ParametricFamily, upper: f64) -> Result<Estimate> {
    family.integrate_below(|x| family.d_cdf_d_lambda(x) * map.d1(x), upper, &map.kinks())
}

/// Whether the stress level sits on the flat part below the floor, where
/// `Pr(Y < φ(K)) = 0`.
fn below_floor(map: &PayoffMap, k: f64) -> bool {
    map.floor.is_some_and(|f| k <= f)
}

pub fn inherited_parts(map: &PayoffMap, family: &ParametricFamily, k: f64) -> Result<InheritedParts> {
    map.same_omega(family)?;
    if k > family.omega() || !k.is_finite() {
        return Err(Error::precondition(format!("stress level K = {k} must not exceed omega")));
    }
    let plain = weighted_d_put(map, family, map.omega)?.value;
    if plain.abs() < crate::fragility::DEGENERATE_SENSITIVITY {
        return Err(Error::DegenerateParameter(format!("du-/dlambda = {plain:e}")));
    }
    let barrier = if below_floor(map, k) {
        0.0
    } else if k == map.omega {
        plain
    } else {
        weighted_d_put(map, family, k)?.value + family.d_cdf_d_lambda(k) * (map.omega - map.value(k))
    };
    Ok(InheritedParts { barrier, plain })
}

/// `V(Y, g_λ, L, u⁻)` at `L = φ(K)`: `∫ ∂F^K/∂λ φ' / ∫ ∂F/∂λ φ'`.
pub fn inherited_fragility(map: &PayoffMap, family: &ParametricFamily, k: f64) -> Result<f64> {
    map.check_left_of(family)?;
    let parts = inherited_parts(map, family, k)?;
    Ok(parts.barrier / parts.plain)
}

/// `∂ζ/∂s⁻`: the inherited tail sensitivity measured per unit of the
/// source's left semi-deviation, `I_Y^L / I_X`.
pub fn inherited_fragility_wrt_source(map: &PayoffMap, family: &ParametricFamily, k: f64) -> Result<f64> {
    map.check_left_of(family)?;
    let parts = inherited_parts(map, family, k)?;
    Ok(parts.barrier / crate::fragility::vega_parts(family, family.omega())?.plain)
}

/// `ζ(L, u⁻) = E[(Ω - Y) 1{Y < L}]` with `L = φ(K)`.
pub fn zeta(map: &PayoffMap, family: &ParametricFamily, k: f64) -> Result<f64> {
    if below_floor(map, k) {
        return Ok(0.0);
    }
    let tail = family.integrate_below(|x| family.cdf(x) * map.d1(x), k, &map.kinks())?.value;
    Ok((map.omega - map.value(k)) * family.cdf(k) + tail)
}

/// Finite-difference inherited fragility: `Δζ / Δu` between the parameters
/// at `s⁻ ± Δs`, so that `Δu/u⁻` tracks `Δs/s⁻`.
pub fn inherited_fragility_fd(map: &PayoffMap, family: &ParametricFamily, k: f64, delta_s: f64) -> Result<f64> {
    map.check_left_of(family)?;
    let s = family.s_minus();
    let d = delta_s.abs();
    if !(d > 0.0 && d < s) {
        return Err(Error::OutOfRange { value: delta_s, context: format!("need 0 < |delta_s| < s- = {s}") });
    }
    let up = family.with_lambda(family.lambda_from_s(s + d)?)?;
    let down = family.with_lambda(family.lambda_from_s(s - d)?)?;
    let du = u_semideviation(map, &up)? - u_semideviation(map, &down)?;
    Ok((zeta(map, &up, k)? - zeta(map, &down, k)?) / du)
}

/// Left robustness below `φ(K)` (Definition 2a): `V_X(Y, L') ≤ a V(X, K') + b`
/// at every grid `K' ∈ [Ω - 40 scale, K]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeftRobustnessCheck {
    pub pass: bool,
    /// Stress level with the largest `lhs - rhs`.
    pub witness_k: f64,
    pub worst_margin: f64,
    /// `(K', V_X(Y), a V(X) + b)` per grid point.
    pub points: Vec<(f64, f64, f64)>,
}

pub fn check_left_robust_payoff(
    map: &PayoffMap,
    family: &ParametricFamily,
    k: f64,
    a: f64,
    b: f64,
    grid_count: usize,
) -> Result<LeftRobustnessCheck> {
    if grid_count < 8 {
        return Err(Error::invalid("robustness grid needs at least 8 points"));
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("a and b must be finite"));
    }
    mu_inflexion(family)?;
    let lo = family.omega() - 40.0 * family.scale();
    if k <= lo {
        return Err(Error::precondition(format!("K = {k} lies below the robustness grid start {lo}")));
    }
    let mut points = Vec::with_capacity(grid_count);
    let (mut witness_k, mut worst) = (k, f64::NEG_INFINITY);
    for i in 0..grid_count {
        let kp = lo + (k - lo) * i as f64 / (grid_count - 1) as f64;
        let lhs = inherited_fragility(map, family, kp)?;
        let rhs = a * vega_sensitivity(family, kp)? + b;
        if lhs - rhs > worst {
            worst = lhs - rhs;
            witness_k = kp;
        }
        points.push((kp, lhs, rhs));
    }
    let slack = 1e-12;
    let pass = points.iter().all(|&(_, l, r)| l <= r + slack * r.abs().max(1.0));
    Ok(LeftRobustnessCheck { pass, witness_k, worst_margin: worst, points })
}

/// Both sides of the transfer theorem at `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferCheck {
    /// `∫_{-inf}^Ω H φ''`, including jumps of `φ'` at a floor or cap.
    pub lhs_integral: f64,
    /// `V(Y, g_λ, L, u⁻) - V(X, f_λ, K, s⁻)`.
    pub direct_difference: f64,
    /// `(I_X^K / I_Y) (-∫ H φ'')`, which must equal the direct difference.
    pub identity_difference: f64,
}

impl TransferCheck {
    pub fn signs_agree(&self) -> bool {
        self.direct_difference.signum() == (-self.lhs_integral).signum()
    }
}

pub fn transfer_theorem_check(family: &ParametricFamily, k: f64, map: &PayoffMap) -> Result<TransferCheck> {
    map.check_left_of(family)?;
    let h = TransferFunction::new(family, k)?;
    let om = family.omega();
    let mut pts = map.kinks();
    pts.push(k);
    let curvature = family.integrate_below(
        |x| {
            let d2 = map.d2(x);
            if d2 == 0.0 || !d2.is_finite() {
                return 0.0;
            }
            d2 * h.eval(x).unwrap_or(f64::NAN)
        },
        om,
        &pts,
    )?;
    if curvature.value.is_nan() {
        return Err(Error::EvaluationFailure("transfer function failed inside the theorem integral".into()));
    }
    let mut lhs = curvature.value;
    if let Some(f) = map.floor {
        lhs += h.eval(f)? * map.raw_d1(f);
    }
    if let Some(c) = map.cap.filter(|&c| c < om) {
        lhs -= h.eval(c)? * map.raw_d1(c);
    }
    let vy = inherited_fragility(map, family, k)?;
    let vx = vega_sensitivity(family, k)?;
    let parts = inherited_parts(map, family, k)?;
    let identity_difference = h.barrier_norm() / parts.plain * (-lhs);
    Ok(TransferCheck { lhs_integral: lhs, direct_difference: vy - vx, identity_difference })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{normal_cdf, normal_pdf};

    fn gauss() -> ParametricFamily {
        ParametricFamily::gaussian_scaling(0.0, 1.0).unwrap()
    }

    fn concave(beta: f64) -> PayoffMap {
        PayoffMap::new(PayoffKind::QuadraticConcave { beta }, 0.0).unwrap()
    }

    fn convex(beta: f64) -> PayoffMap {
        PayoffMap::with_bounds(PayoffKind::QuadraticConvex { beta }, 0.0, Some(-0.5 / beta), None).unwrap()
    }

    #[test]
    fn quadratic_values_and_derivatives() {
        let m = concave(0.1);
        assert!((m.value(-2.0) + 2.4).abs() < 1e-15);
        assert!((m.d1(-2.0) - 1.4).abs() < 1e-15);
        assert!((m.d2(-2.0) + 0.2).abs() < 1e-15);
        assert_eq!(m.value(0.0), 0.0);
    }

    #[test]
    fn kahneman_tversky_values() {
        let m = PayoffMap::new(PayoffKind::kahneman_tversky_default(), 0.0).unwrap();
        assert!((m.value(-1.0) + 2.25).abs() < 1e-15);
        assert!(m.d2(-1.0) > 0.0);
        assert!(m.d2(1.0) < 0.0);
    }

    #[test]
    fn recentring_and_polynomial() {
        let m = PayoffMap::new(PayoffKind::Polynomial(vec![3.0, 2.0, -0.1]), 1.0).unwrap();
        assert!((m.value(1.0) - 1.0).abs() < 1e-15);
        assert!((m.d1(1.0) - 1.8).abs() < 1e-15);
        assert!((m.d2(0.0) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn power_sigmoid_derivatives_match_differences() {
        let m = PayoffMap::new(PayoffKind::PowerSigmoid { c: 2.0, p: 2.5 }, 0.0).unwrap();
        for &x in &[-3.0, -0.7, 0.4, 2.5] {
            let h = 1e-5;
            let d1 = (m.value(x + h) - m.value(x - h)) / (2.0 * h);
            let d2 = (m.d1(x + h) - m.d1(x - h)) / (2.0 * h);
            assert!((d1 - m.d1(x)).abs() < 1e-8);
            assert!((d2 - m.d2(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn decreasing_maps_are_rejected() {
        assert!(PayoffMap::new(PayoffKind::QuadraticConvex { beta: 0.2 }, 0.0).is_err());
        assert!(PayoffMap::new(PayoffKind::Affine { slope: -1.0, intercept: 0.0 }, 0.0).is_err());
    }

    #[test]
    fn pushforward_identity() {
        let g = gauss();
        let m = concave(0.1);
        assert!((pushforward_cdf(&m, &g, -2.4).unwrap() - normal_cdf(-2.0)).abs() < 1e-12);
        assert_eq!(pushforward_cdf(&m, &g, 0.0).unwrap(), 0.5);
        let id = PayoffMap::identity(0.0);
        assert!((pushforward_cdf(&id, &g, -1.3).unwrap() - g.cdf(-1.3)).abs() < 1e-12);
    }

    #[test]
    fn u_semideviation_cases() {
        let g = gauss();
        let id = PayoffMap::identity(0.0);
        assert!((u_semideviation(&id, &g).unwrap() - g.s_minus()).abs() < 1e-12);
        let aff = PayoffMap::new(PayoffKind::Affine { slope: 2.5, intercept: 7.0 }, 0.0).unwrap();
        assert!((u_semideviation(&aff, &g).unwrap() - 2.5 * g.s_minus()).abs() < 1e-11);
        // ∫_{-inf}^0 xΦ(x) dx = -1/4, so u⁻ = s⁻ + 0.05.
        let u = u_semideviation(&concave(0.1), &g).unwrap();
        assert!((u - (g.s_minus() + 0.05)).abs() < 1e-11);
    }

    #[test]
    fn inherited_fragility_of_identity_and_affine_is_v() {
        let g = gauss();
        let v = vega_sensitivity(&g, -2.0).unwrap();
        assert_eq!(inherited_fragility(&PayoffMap::identity(0.0), &g, -2.0).unwrap(), v);
        let aff = PayoffMap::new(PayoffKind::Affine { slope: 3.0, intercept: 1.0 }, 0.0).unwrap();
        assert!((inherited_fragility(&aff, &g, -2.0).unwrap() - v).abs() < 1e-9);
    }

    #[test]
    fn inherited_fragility_against_closed_form() {
        // For φ = x - βx² on the standard Gaussian:
        // ∫_{-inf}^K ∂F φ' = ∫ -x φ(x)(1 - 2βx) dx = φ(K) - 2β(KΦ... ) evaluated below.
        let g = gauss();
        let beta = 0.1;
        let k: f64 = -2.0;
        // ∫_{-inf}^K -x φ(x) dx = φ(K); ∫_{-inf}^K x² φ(x) dx = Φ(K) - Kφ(K).
        let tail = normal_pdf(k) + 2.0 * beta * (normal_cdf(k) - k * normal_pdf(k));
        let num = tail + (-k * normal_pdf(k)) * (0.0 - (k - beta * k * k));
        let den = normal_pdf(0.0) + 2.0 * beta * 0.5;
        let v = inherited_fragility(&concave(beta), &g, k).unwrap();
        assert!((v - num / den).abs() < 1e-10, "{v} vs {}", num / den);
        assert!(v > vega_sensitivity(&g, k).unwrap());
    }

    #[test]
    fn fd_inherited_matches_ratio() {
        let g = gauss();
        let m = concave(0.1);
        let exact = inherited_fragility(&m, &g, -2.0).unwrap();
        let fd = inherited_fragility_fd(&m, &g, -2.0, 1e-4 * g.s_minus()).unwrap();
        assert!((exact - fd).abs() < 1e-6, "{exact} {fd}");
    }

    #[test]
    fn theorem_identity_and_signs() {
        let g = gauss();
        for m in [concave(0.1), convex(0.05), convex(0.2)] {
            let c = transfer_theorem_check(&g, -2.0, &m).unwrap();
            assert!((c.direct_difference - c.identity_difference).abs() < 1e-8, "{c:?}");
            assert!(c.signs_agree());
        }
        let c = transfer_theorem_check(&g, -2.0, &PayoffMap::identity(0.0)).unwrap();
        assert_eq!(c.lhs_integral, 0.0);
        assert_eq!(c.direct_difference, 0.0);
        let up = transfer_theorem_check(&g, -2.0, &concave(0.1)).unwrap();
        let down = transfer_theorem_check(&g, -2.0, &convex(0.05)).unwrap();
        assert!(up.direct_difference > 0.0 && down.direct_difference < 0.0);
    }

    #[test]
    fn kahneman_tversky_lowers_left_fragility() {
        let g = gauss();
        let m = PayoffMap::new(PayoffKind::kahneman_tversky_default(), 0.0).unwrap();
        // Deep in the tail the convex branch wins; nearer Ω the infinite
        // curvature at the kink dominates and the ordering flips (near -2.6).
        for k in [-3.0, -4.0, -6.0] {
            assert!(inherited_fragility(&m, &g, k).unwrap() < vega_sensitivity(&g, k).unwrap());
        }
        assert!(inherited_fragility(&m, &g, -2.0).unwrap() > vega_sensitivity(&g, -2.0).unwrap());
    }

    #[test]
    fn left_robustness_cases() {
        let g = gauss();
        let id = check_left_robust_payoff(&PayoffMap::identity(0.0), &g, -1.0, 1.0, 0.0, 16).unwrap();
        assert!(id.pass);
        assert!(id.points.iter().all(|(_, l, r)| l == r));
        let bad = check_left_robust_payoff(&concave(0.1), &g, -2.0, 1.0, 0.0, 16).unwrap();
        assert!(!bad.pass);
        assert!(bad.witness_k <= -2.0);
        let floor = PayoffMap::with_bounds(PayoffKind::Identity, 0.0, Some(-1.0), None).unwrap();
        let bounded = check_left_robust_payoff(&floor, &g, -1.5, 0.0, 0.0, 16).unwrap();
        assert!(bounded.pass);
        assert!(bounded.points.iter().all(|(_, l, _)| *l == 0.0));
    }
}
