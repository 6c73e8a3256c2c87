//! One-parameter distribution families `f_λ` around a reference point `Ω`.
//!
//! Scaling kinds are written as `X = Ω + λ W` for a fixed standard variate
//! `W`, so every scaling quantity is a rescaled standard one (`P_λ(x) =
//! λ P_1(Ω + (x - Ω)/λ)`). The shifting kind moves a fixed Gaussian to the
//! left as `λ` grows: `F_λ(x) = F_0(x + λ)`.

mod special;
mod tabulated;

use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{
    central_difference, default_parameter_step, integrate_left_tail, integrate_right_tail,
    refine_root, Estimate, McRng, QuadratureSpec, Sampler, TailWitness,
};

pub use special::{
    normal_cdf, normal_pdf, normal_put, student_t_cdf, student_t_pdf, student_t_put,
};
pub use tabulated::DensityTable;

/// Total-mass tolerance checked at construction.
pub const MASS_CHECK_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    /// `N(Ω, λ²)`.
    GaussianScaling,
    /// `N(Ω - λ, σ²)`; `λ` ranges over the whole real line.
    GaussianShifting { sigma: f64 },
    /// `Ω + λ T_ν`.
    StudentTScaling { nu: f64 },
    /// `Ω + λ (Y - c)`, or `Ω - λ (Y - c)` when mirrored, with `Y ~ LN(0, σ²)`.
    /// `c = None` centres at the lognormal mean.
    LognormalShifted { sigma: f64, shift: Option<f64>, mirrored: bool },
    /// A tabulated density rescaled around `Ω`.
    Tabulated(Arc<DensityTable>),
}

impl FamilyKind {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::GaussianScaling => "gaussian_scaling",
            FamilyKind::GaussianShifting { .. } => "gaussian_shifting",
            FamilyKind::StudentTScaling { .. } => "student_t_scaling",
            FamilyKind::LognormalShifted { .. } => "lognormal_shifted",
            FamilyKind::Tabulated(_) => "tabulated",
        }
    }

    pub fn is_scaling(&self) -> bool {
        !matches!(self, FamilyKind::GaussianShifting { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemiDeviations {
    pub s_minus: f64,
    pub s_plus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametricFamily {
    kind: FamilyKind,
    omega: f64,
    lambda: f64,
    quad: QuadratureSpec,
}

impl ParametricFamily {
    /// Build and validate a family: parameters, total mass, and local
    /// monotonicity of `s⁻(λ)`.
    pub fn new(kind: FamilyKind, omega: f64, lambda: f64, quad: QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        if !omega.is_finite() {
            return Err(Error::invalid("omega must be finite"));
        }
        match &kind {
            FamilyKind::GaussianScaling | FamilyKind::Tabulated(_) => {}
            FamilyKind::GaussianShifting { sigma } => positive("sigma", *sigma)?,
            FamilyKind::StudentTScaling { nu } => {
                if !nu.is_finite() {
                    return Err(Error::invalid("nu must be finite"));
                }
                if *nu <= 1.0 {
                    return Err(Error::UndefinedMeasure(format!(
                        "student t with nu = {nu} has no finite first semi-moment"
                    )));
                }
            }
            FamilyKind::LognormalShifted { sigma, shift, .. } => {
                positive("sigma", *sigma)?;
                if let Some(c) = shift {
                    if !c.is_finite() {
                        return Err(Error::invalid("shift must be finite"));
                    }
                }
            }
        }
        let family = Self { kind, omega, lambda: 0.0, quad }.with_lambda(lambda)?;
        family.check_mass()?;
        family.check_monotone_s()?;
        Ok(family)
    }

    pub fn gaussian_scaling(omega: f64, lambda: f64) -> Result<Self> {
        Self::new(FamilyKind::GaussianScaling, omega, lambda, QuadratureSpec::default())
    }

    pub fn gaussian_shifting(omega: f64, sigma: f64, lambda: f64) -> Result<Self> {
        Self::new(FamilyKind::GaussianShifting { sigma }, omega, lambda, QuadratureSpec::default())
    }

    pub fn student_t_scaling(omega: f64, nu: f64, lambda: f64) -> Result<Self> {
        Self::new(FamilyKind::StudentTScaling { nu }, omega, lambda, QuadratureSpec::default())
    }

    pub fn tabulated_from_csv(path: &Path, omega: f64, lambda: f64, quad: QuadratureSpec) -> Result<Self> {
        let table = DensityTable::from_csv_path(path)?;
        Self::new(FamilyKind::Tabulated(Arc::new(table)), omega, lambda, quad)
    }

    /// Same family at another parameter value. Only the parameter domain is
    /// checked: mass and monotonicity are invariant along the family.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let (lo, hi) = self.lambda_domain();
        if !(lambda > lo && lambda < hi) {
            return Err(Error::OutOfRange {
                value: lambda,
                context: format!("lambda must lie in ({lo}, {hi})"),
            });
        }
        Ok(Self { lambda, ..self.clone() })
    }

    pub fn with_quadrature(&self, quad: QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        Ok(Self { quad, ..self.clone() })
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn lambda_domain(&self) -> (f64, f64) {
        if self.kind.is_scaling() {
            (0.0, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
    }

    // ---- standard variate of the scaling kinds -------------------------

    fn lognormal_parts(&self) -> Option<(f64, f64, bool)> {
        match self.kind {
            FamilyKind::LognormalShifted { sigma, shift, mirrored } => {
                Some((sigma, shift.unwrap_or((0.5 * sigma * sigma).exp()), mirrored))
            }
            _ => None,
        }
    }

    fn std_pdf(&self, z: f64) -> f64 {
        match &self.kind {
            FamilyKind::GaussianScaling => normal_pdf(z),
            FamilyKind::StudentTScaling { nu } => student_t_pdf(z, *nu),
            FamilyKind::Tabulated(t) => t.pdf(self.omega + z),
            FamilyKind::LognormalShifted { .. } => {
                let (sigma, c, mirrored) = self.lognormal_parts().unwrap();
                let k = if mirrored { c - z } else { z + c };
                if k <= 0.0 {
                    0.0
                } else {
                    normal_pdf(k.ln() / sigma) / (k * sigma)
                }
            }
            FamilyKind::GaussianShifting { .. } => unreachable!(),
        }
    }

    fn std_cdf(&self, z: f64) -> f64 {
        match &self.kind {
            FamilyKind::GaussianScaling => normal_cdf(z),
            FamilyKind::StudentTScaling { nu } => student_t_cdf(z, *nu),
            FamilyKind::Tabulated(t) => t.cdf(self.omega + z),
            FamilyKind::LognormalShifted { .. } => {
                let (sigma, c, mirrored) = self.lognormal_parts().unwrap();
                if mirrored {
                    let k = c - z;
                    if k <= 0.0 { 1.0 } else { normal_cdf(-k.ln() / sigma) }
                } else {
                    let k = z + c;
                    if k <= 0.0 { 0.0 } else { normal_cdf(k.ln() / sigma) }
                }
            }
            FamilyKind::GaussianShifting { .. } => unreachable!(),
        }
    }

    fn std_survival(&self, z: f64) -> f64 {
        match &self.kind {
            FamilyKind::GaussianScaling => normal_cdf(-z),
            FamilyKind::StudentTScaling { nu } => student_t_cdf(-z, *nu),
            FamilyKind::Tabulated(t) => 1.0 - t.cdf(self.omega + z),
            FamilyKind::LognormalShifted { .. } => {
                let (sigma, c, mirrored) = self.lognormal_parts().unwrap();
                if mirrored {
                    let k = c - z;
                    if k <= 0.0 { 0.0 } else { normal_cdf(k.ln() / sigma) }
                } else {
                    let k = z + c;
                    if k <= 0.0 { 1.0 } else { normal_cdf(-k.ln() / sigma) }
                }
            }
            FamilyKind::GaussianShifting { .. } => unreachable!(),
        }
    }

    fn std_put(&self, z: f64) -> f64 {
        match &self.kind {
            FamilyKind::GaussianScaling => normal_put(z),
            FamilyKind::StudentTScaling { nu } => student_t_put(z, *nu),
            FamilyKind::Tabulated(t) => t.cdf_integral(self.omega + z),
            FamilyKind::LognormalShifted { .. } => {
                let (sigma, c, mirrored) = self.lognormal_parts().unwrap();
                let m = (0.5 * sigma * sigma).exp();
                if mirrored {
                    // E[(Y - k)^+] with k = c - z
                    let k = c - z;
                    if k <= 0.0 {
                        m - k
                    } else {
                        let d = k.ln() / sigma;
                        m * normal_cdf(sigma - d) - k * normal_cdf(-d)
                    }
                } else {
                    // E[(k - Y)^+] with k = z + c
                    let k = z + c;
                    if k <= 0.0 {
                        0.0
                    } else {
                        let d = k.ln() / sigma;
                        k * normal_cdf(d) - m * normal_cdf(d - sigma)
                    }
                }
            }
            FamilyKind::GaussianShifting { .. } => unreachable!(),
        }
    }

    fn std_mean(&self) -> f64 {
        match &self.kind {
            FamilyKind::GaussianScaling | FamilyKind::StudentTScaling { .. } => 0.0,
            FamilyKind::Tabulated(t) => t.mean() - self.omega,
            FamilyKind::LognormalShifted { .. } => {
                let (sigma, c, mirrored) = self.lognormal_parts().unwrap();
                let m = (0.5 * sigma * sigma).exp();
                if mirrored { c - m } else { m - c }
            }
            FamilyKind::GaussianShifting { .. } => unreachable!(),
        }
    }

    // ---- primitives at an arbitrary parameter ---------------------------

    fn shift_arg(&self, lambda: f64, x: f64) -> (f64, f64) {
        let FamilyKind::GaussianShifting { sigma } = self.kind else { unreachable!() };
        ((x + lambda - self.omega) / sigma, sigma)
    }

    fn pdf_at(&self, lambda: f64, x: f64) -> f64 {
        if self.kind.is_scaling() {
            self.std_pdf((x - self.omega) / lambda) / lambda
        } else {
            let (u, sigma) = self.shift_arg(lambda, x);
            normal_pdf(u) / sigma
        }
    }

    fn cdf_at(&self, lambda: f64, x: f64) -> f64 {
        if self.kind.is_scaling() {
            self.std_cdf((x - self.omega) / lambda)
        } else {
            normal_cdf(self.shift_arg(lambda, x).0)
        }
    }

    fn put_at(&self, lambda: f64, x: f64) -> f64 {
        if self.kind.is_scaling() {
            lambda * self.std_put((x - self.omega) / lambda)
        } else {
            let (u, sigma) = self.shift_arg(lambda, x);
            sigma * normal_put(u)
        }
    }

    fn s_minus_at(&self, lambda: f64) -> f64 {
        self.put_at(lambda, self.omega)
    }

    // ---- public evaluation -----------------------------------------------

    pub fn pdf(&self, x: f64) -> f64 {
        self.pdf_at(self.lambda, x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_at(self.lambda, x)
    }

    pub fn survival(&self, x: f64) -> f64 {
        if self.kind.is_scaling() {
            self.std_survival((x - self.omega) / self.lambda)
        } else {
            normal_cdf(-self.shift_arg(self.lambda, x).0)
        }
    }

    /// `P_λ(x) = E[(x - X)^+] = ∫_{-inf}^x F_λ`.
    pub fn put_price(&self, x: f64) -> f64 {
        self.put_at(self.lambda, x)
    }

    /// `E[(X - x)^+]`.
    pub fn call_price(&self, x: f64) -> f64 {
        self.put_price(x) + self.mean() - x
    }

    /// `P^K_λ(x) = ∫_{-inf}^x min(F_λ(t), F_λ(K)) dt`.
    pub fn barrier_put_price(&self, x: f64, k: f64) -> f64 {
        if x <= k {
            self.put_price(x)
        } else {
            self.put_price(k) + (x - k) * self.cdf(k)
        }
    }

    pub fn mean(&self) -> f64 {
        if self.kind.is_scaling() {
            self.omega + self.lambda * self.std_mean()
        } else {
            self.omega - self.lambda
        }
    }

    /// Closed-form `s⁻(λ) = P_λ(Ω)`.
    pub fn s_minus(&self) -> f64 {
        self.s_minus_at(self.lambda)
    }

    /// Closed-form `s⁺(λ) = E[(X - Ω)^+]`.
    pub fn s_plus(&self) -> f64 {
        self.call_price(self.omega)
    }

    /// Natural unit of the family; used as the left-tail scale.
    pub fn scale(&self) -> f64 {
        self.s_minus()
    }

    /// First doubling step for tail integration.
    pub fn spread(&self) -> f64 {
        match self.kind {
            FamilyKind::GaussianShifting { sigma } => sigma,
            _ => {
                let s = self.s_minus() + self.s_plus();
                if s > 0.0 { s } else { self.lambda }
            }
        }
    }

    /// Kinks of the density in x-coordinates (support edges, table nodes).
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            FamilyKind::Tabulated(t) => t
                .nodes()
                .iter()
                .map(|n| self.omega + self.lambda * (n - self.omega))
                .collect(),
            FamilyKind::LognormalShifted { .. } => {
                let (_, c, mirrored) = self.lognormal_parts().unwrap();
                let edge = if mirrored { c } else { -c };
                vec![self.omega + self.lambda * edge]
            }
            _ => Vec::new(),
        }
    }

    /// Interval outside of which each tail carries less than `eps` mass.
    pub fn support_interval(&self, eps: f64) -> (f64, f64) {
        let step = self.spread();
        let centre = self.mean();
        let mut lo = centre.min(self.omega) - step;
        let mut k = 0;
        while self.cdf(lo) > eps && k < 200 {
            lo -= step * 2f64.powi(k);
            k += 1;
        }
        let mut hi = centre.max(self.omega) + step;
        k = 0;
        while self.survival(hi) > eps && k < 200 {
            hi += step * 2f64.powi(k);
            k += 1;
        }
        (lo, hi)
    }

    // ---- quadrature over the family -----------------------------------

    fn kinks_between(&self, lo: f64, hi: f64, extra: &[f64]) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .breakpoints()
            .into_iter()
            .chain(extra.iter().copied())
            .filter(|p| p.is_finite() && *p > lo && *p < hi)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// `∫_{-inf}^{upper} g`, truncated by the family's left-tail mass.
    pub fn integrate_below<G: Fn(f64) -> f64>(&self, g: G, upper: f64, extra: &[f64]) -> Result<Estimate> {
        let cdf = |x: f64| self.cdf(x);
        let witness = TailWitness { mass_beyond: &cdf, scale: self.spread() };
        let pts = self.kinks_between(f64::NEG_INFINITY, upper, extra);
        integrate_left_tail(g, upper, &pts, &witness, &self.quad)
    }

    /// `∫_{lower}^{inf} g`, truncated by the family's right-tail mass.
    pub fn integrate_above<G: Fn(f64) -> f64>(&self, g: G, lower: f64, extra: &[f64]) -> Result<Estimate> {
        let sf = |x: f64| self.survival(x);
        let witness = TailWitness { mass_beyond: &sf, scale: self.spread() };
        let pts = self.kinks_between(lower, f64::INFINITY, extra);
        integrate_right_tail(g, lower, &pts, &witness, &self.quad)
    }

    fn check_mass(&self) -> Result<()> {
        let left = self.integrate_below(|x| self.pdf(x), self.omega, &[])?;
        let right = self.integrate_above(|x| self.pdf(x), self.omega, &[])?;
        let mass = left.value + right.value;
        if (mass - 1.0).abs() > MASS_CHECK_TOLERANCE {
            return Err(Error::invalid(format!(
                "{} density integrates to {mass}, expected 1",
                self.kind.name()
            )));
        }
        Ok(())
    }

    fn check_monotone_s(&self) -> Result<()> {
        let probes = if self.kind.is_scaling() {
            [0.5 * self.lambda, self.lambda, 2.0 * self.lambda]
        } else {
            let step = self.spread();
            [self.lambda - step, self.lambda, self.lambda + step]
        };
        let s: Vec<f64> = probes.iter().map(|&l| self.s_minus_at(l)).collect();
        if !(s[0] < s[1] && s[1] < s[2]) {
            return Err(Error::invalid(format!(
                "s-(lambda) is not strictly increasing at probes {probes:?}: {s:?}"
            )));
        }
        Ok(())
    }

    /// Both semi-deviations by quadrature, with the left one cross-checked
    /// between the direct and the integrated-by-parts form, and both against
    /// the closed forms.
    pub fn semi_deviations(&self) -> Result<SemiDeviations> {
        let om = self.omega;
        let direct = self.integrate_below(|x| (om - x) * self.pdf(x), om, &[])?;
        let by_parts = self.integrate_below(|x| self.cdf(x), om, &[])?;
        let upper = self.integrate_above(|x| (x - om) * self.pdf(x), om, &[])?;
        let s_minus = self.s_minus();
        let s_plus = self.s_plus();
        let allowed = |a: &Estimate, b: f64| {
            10.0 * (self.quad.tolerance_for(b) + a.error).max(self.quad.absolute_tolerance)
        };
        if (direct.value - by_parts.value).abs() > allowed(&direct, s_minus) + by_parts.error {
            return Err(Error::SelfCheck(format!(
                "left semi-deviation: direct {} vs by parts {}",
                direct.value, by_parts.value
            )));
        }
        if (direct.value - s_minus).abs() > allowed(&direct, s_minus) {
            return Err(Error::SelfCheck(format!(
                "left semi-deviation: quadrature {} vs closed form {s_minus}",
                direct.value
            )));
        }
        if (upper.value - s_plus).abs() > allowed(&upper, s_plus) {
            return Err(Error::SelfCheck(format!(
                "right semi-deviation: quadrature {} vs closed form {s_plus}",
                upper.value
            )));
        }
        Ok(SemiDeviations { s_minus, s_plus })
    }

    /// `λ(s)`: the parameter at which `s⁻ = target_s`.
    pub fn lambda_from_s(&self, target_s: f64) -> Result<f64> {
        if !(target_s > 0.0) || !target_s.is_finite() {
            return Err(Error::OutOfRange {
                value: target_s,
                context: "target s- must be positive and finite".into(),
            });
        }
        if self.kind.is_scaling() {
            return Ok(target_s / self.s_minus_at(1.0));
        }
        let step = self.spread();
        let f = |l: f64| Ok(self.s_minus_at(l) - target_s);
        let (mut lo, mut hi) = (self.lambda - step, self.lambda + step);
        let mut k = 0;
        while f(lo)? > 0.0 {
            lo -= step * 2f64.powi(k);
            k += 1;
            if k > 60 || self.s_minus_at(lo) <= 0.0 && f(lo)? > 0.0 && k > 60 {
                break;
            }
        }
        k = 0;
        while f(hi)? < 0.0 && k <= 60 {
            hi += step * 2f64.powi(k);
            k += 1;
        }
        if f(lo)? > 0.0 || f(hi)? < 0.0 {
            return Err(Error::OutOfRange {
                value: target_s,
                context: "target s- is not spanned by the family".into(),
            });
        }
        let tol = 1e-14 * step.max(self.lambda.abs());
        refine_root(f, lo, hi, tol)
    }

    // ---- parameter sensitivities ---------------------------------------

    /// `∂F_λ/∂λ(x)`.
    pub fn d_cdf_d_lambda(&self, x: f64) -> f64 {
        match &self.kind {
            FamilyKind::GaussianShifting { .. } => self.pdf(x),
            FamilyKind::Tabulated(_) => {
                let h = default_parameter_step(self.lambda);
                central_difference(|l| Ok(self.cdf_at(l, x)), self.lambda, h)
                    .expect("cdf evaluation is infallible")
            }
            _ => (self.omega - x) / self.lambda * self.pdf(x),
        }
    }

    /// `∂f_λ/∂λ(x)`.
    pub fn d_pdf_d_lambda(&self, x: f64) -> f64 {
        let l = self.lambda;
        match &self.kind {
            FamilyKind::GaussianShifting { sigma } => {
                let (u, _) = self.shift_arg(l, x);
                -u * normal_pdf(u) / (sigma * sigma)
            }
            FamilyKind::GaussianScaling => {
                let z = (x - self.omega) / l;
                -normal_pdf(z) * (1.0 - z * z) / (l * l)
            }
            FamilyKind::StudentTScaling { nu } => {
                let z = (x - self.omega) / l;
                -student_t_pdf(z, *nu) * (1.0 - (nu + 1.0) * z * z / (nu + z * z)) / (l * l)
            }
            _ => {
                let h = default_parameter_step(l);
                central_difference(|p| Ok(self.pdf_at(p, x)), l, h)
                    .expect("pdf evaluation is infallible")
            }
        }
    }

    /// `∂P_λ/∂λ(x) = ∫_{-inf}^x ∂F_λ/∂λ`.
    pub fn d_put_d_lambda(&self, x: f64) -> f64 {
        if self.kind.is_scaling() {
            (self.put_price(x) + (self.omega - x) * self.cdf(x)) / self.lambda
        } else {
            self.cdf(x)
        }
    }

    /// `∂P_λ/∂λ(x)` by quadrature of `∂F_λ/∂λ`; an independent route to
    /// [`Self::d_put_d_lambda`].
    pub fn d_put_d_lambda_quadrature(&self, x: f64) -> Result<Estimate> {
        self.integrate_below(|t| self.d_cdf_d_lambda(t), x, &[])
    }

    /// `∂s⁻/∂λ`.
    pub fn d_s_minus_d_lambda(&self) -> f64 {
        self.d_put_d_lambda(self.omega)
    }

    pub fn sample(&self, rng: &mut McRng) -> f64 {
        match &self.kind {
            FamilyKind::GaussianShifting { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                self.omega - self.lambda + sigma * z
            }
            kind => {
                let w = match kind {
                    FamilyKind::GaussianScaling => rng.sample(StandardNormal),
                    FamilyKind::StudentTScaling { nu } => {
                        StudentT::new(*nu).expect("nu validated").sample(rng)
                    }
                    FamilyKind::Tabulated(t) => t.quantile(rng.random::<f64>()) - self.omega,
                    FamilyKind::LognormalShifted { .. } => {
                        let (sigma, c, mirrored) = self.lognormal_parts().unwrap();
                        let n: f64 = rng.sample(StandardNormal);
                        let y = (sigma * n).exp();
                        if mirrored { c - y } else { y - c }
                    }
                    FamilyKind::GaussianShifting { .. } => unreachable!(),
                };
                self.omega + self.lambda * w
            }
        }
    }
}

impl Sampler for ParametricFamily {
    fn draw(&self, rng: &mut McRng) -> f64 {
        self.sample(rng)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn lognormal(mirrored: bool) -> ParametricFamily {
        ParametricFamily::new(
            FamilyKind::LognormalShifted { sigma: 0.5, shift: None, mirrored },
            0.0,
            1.0,
            QuadratureSpec::default(),
        )
        .unwrap()
    }

    fn triangle_table() -> ParametricFamily {
        let xs: Vec<f64> = (0..=40).map(|i| -2.0 + 0.1 * i as f64).collect();
        let ps: Vec<f64> = xs.iter().map(|x| (2.0 - x.abs()) / 4.0).collect();
        let t = DensityTable::new(xs, ps).unwrap();
        ParametricFamily::new(FamilyKind::Tabulated(Arc::new(t)), 0.0, 1.5, QuadratureSpec::default())
            .unwrap()
    }

    fn all_families() -> Vec<ParametricFamily> {
        vec![
            ParametricFamily::gaussian_scaling(0.0, 1.3).unwrap(),
            ParametricFamily::gaussian_shifting(0.5, 1.0, 0.7).unwrap(),
            ParametricFamily::student_t_scaling(0.0, 3.0, 1.0).unwrap(),
            ParametricFamily::student_t_scaling(1.0, 1.5, 0.8).unwrap(),
            lognormal(false),
            lognormal(true),
            triangle_table(),
        ]
    }

    #[test]
    fn gaussian_reference_values() {
        let g = ParametricFamily::gaussian_scaling(0.0, 1.0).unwrap();
        assert_eq!(g.cdf(0.0), 0.5);
        assert!((g.put_price(0.0) - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!((g.put_price(-2.0) - 0.008_490_702_616_829_7).abs() < 1e-15);
        assert!((g.barrier_put_price(0.0, -2.0) - 0.053_990_966_513_188).abs() < 1e-14);
        assert_eq!(g.barrier_put_price(-2.0, -2.0), g.put_price(-2.0));
        assert!((g.d_cdf_d_lambda(-2.0) - 2.0 * normal_pdf(2.0)).abs() < 1e-15);
        assert_eq!(g.d_cdf_d_lambda(0.0), 0.0);
        let g2 = g.with_lambda(2.0).unwrap();
        assert!((g2.cdf(-2.0) - 0.158_655_253_931_457).abs() < 1e-14);
    }

    #[test]
    fn student_pdf_at_centre() {
        let t = ParametricFamily::student_t_scaling(0.0, 3.0, 1.0).unwrap();
        assert!((t.pdf(0.0) - 0.367_552_596_947_861).abs() < 1e-14);
    }

    #[test]
    fn cauchy_is_rejected() {
        let e = ParametricFamily::student_t_scaling(0.0, 1.0, 1.0).unwrap_err();
        assert!(matches!(e, Error::UndefinedMeasure(_)));
    }

    #[test]
    fn semi_deviations_for_gaussian() {
        let g = ParametricFamily::gaussian_scaling(0.0, 3.0).unwrap();
        let sd = g.semi_deviations().unwrap();
        assert!((sd.s_minus - 1.196_826_841_204_298).abs() < 1e-12);
        assert!((sd.s_minus - sd.s_plus).abs() < 1e-12);
    }

    #[test]
    fn semi_deviations_pass_self_check_for_every_kind() {
        for f in all_families() {
            let sd = f.semi_deviations().unwrap_or_else(|e| panic!("{}: {e}", f.kind().name()));
            assert!(sd.s_minus > 0.0 && sd.s_plus > 0.0);
        }
    }

    #[test]
    fn put_price_derivative_is_cdf() {
        for f in all_families() {
            let (lo, hi) = f.support_interval(1e-6);
            for i in 0..10 {
                let x = lo + (hi - lo) * (i as f64 + 0.37) / 10.0;
                let h = 1e-5 * f.spread();
                let d = (f.put_price(x + h) - f.put_price(x - h)) / (2.0 * h);
                assert!((d - f.cdf(x)).abs() < 1e-6, "{} at {x}: {d} vs {}", f.kind().name(), f.cdf(x));
            }
        }
    }

    #[test]
    fn scaling_homogeneity_of_put() {
        let g1 = ParametricFamily::gaussian_scaling(0.4, 1.0).unwrap();
        for &l in &[0.3, 2.0, 7.5] {
            let gl = g1.with_lambda(l).unwrap();
            for &x in &[-3.0, -0.5, 0.4, 2.0] {
                let expected = l * g1.put_price(0.4 + (x - 0.4) / l);
                assert!((gl.put_price(x) - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn shifting_derivative_of_s_minus_is_cdf_at_omega() {
        let f = ParametricFamily::gaussian_shifting(0.0, 1.0, 0.3).unwrap();
        let h = 1e-5;
        let d = (f.with_lambda(0.3 + h).unwrap().s_minus() - f.with_lambda(0.3 - h).unwrap().s_minus()) / (2.0 * h);
        assert!((d - f.cdf(0.0)).abs() < 1e-6);
        assert!((f.d_cdf_d_lambda(-0.8) - f.pdf(-0.8)).abs() < 1e-15);
    }

    #[test]
    fn lambda_from_s_inverts() {
        let g = ParametricFamily::gaussian_scaling(0.0, 1.0).unwrap();
        assert!((g.lambda_from_s(0.398_942_280_401_433).unwrap() - 1.0).abs() < 1e-12);
        let s = g.with_lambda(2.5).unwrap().s_minus();
        assert!((g.lambda_from_s(2.0 * s).unwrap() - 5.0).abs() < 1e-12);
        let sh = ParametricFamily::gaussian_shifting(0.0, 1.0, 0.0).unwrap();
        for &target in &[0.01, 0.3, 0.39, 2.0, 10.0] {
            let l = sh.lambda_from_s(target).unwrap();
            assert!((sh.with_lambda(l).unwrap().s_minus() - target).abs() < 1e-8);
        }
        assert!(g.lambda_from_s(-1.0).is_err());
    }

    #[test]
    fn d_cdf_d_lambda_matches_finite_difference() {
        for f in all_families() {
            let l = f.lambda();
            let h = 1e-6 * l.abs().max(1.0);
            for &x in &[f.omega() - 1.0, f.omega() - 0.3, f.omega() + 0.2] {
                let fd = (f.with_lambda(l + h).unwrap().cdf(x) - f.with_lambda(l - h).unwrap().cdf(x)) / (2.0 * h);
                assert!((fd - f.d_cdf_d_lambda(x)).abs() < 1e-6, "{}", f.kind().name());
                let fd_pdf =
                    (f.with_lambda(l + h).unwrap().pdf(x) - f.with_lambda(l - h).unwrap().pdf(x)) / (2.0 * h);
                assert!((fd_pdf - f.d_pdf_d_lambda(x)).abs() < 1e-5, "{}", f.kind().name());
            }
        }
    }

    #[test]
    fn d_put_d_lambda_closed_form_matches_quadrature() {
        for f in all_families() {
            let x = f.omega() - 0.5;
            let q = f.d_put_d_lambda_quadrature(x).unwrap();
            assert!((q.value - f.d_put_d_lambda(x)).abs() < 1e-7, "{}", f.kind().name());
        }
    }

    #[test]
    fn positivity_of_parameter_sensitivity_left_of_omega() {
        for f in all_families() {
            for i in 1..20 {
                let x = f.omega() - 0.2 * i as f64;
                if f.pdf(x) > 0.0 {
                    assert!(f.d_cdf_d_lambda(x) > 0.0, "{} at {x}", f.kind().name());
                }
            }
        }
    }

    #[test]
    fn sample_mean_matches() {
        use crate::numerics::{mc_expectation, McSpec};
        for f in all_families() {
            if matches!(f.kind(), FamilyKind::StudentTScaling { nu } if *nu < 2.0) {
                continue;
            }
            let est = mc_expectation(&f, |x| x, &McSpec::new(200_000, 11)).unwrap();
            assert!((est.mean - f.mean()).abs() < 5.0 * est.std_error, "{}", f.kind().name());
        }
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(ParametricFamily::gaussian_scaling(0.0, 0.0).is_err());
        assert!(ParametricFamily::gaussian_scaling(f64::NAN, 1.0).is_err());
        assert!(ParametricFamily::gaussian_shifting(0.0, -1.0, 0.0).is_err());
        let g = ParametricFamily::gaussian_scaling(0.0, 1.0).unwrap();
        assert!(g.with_lambda(-2.0).is_err());
    }
}
