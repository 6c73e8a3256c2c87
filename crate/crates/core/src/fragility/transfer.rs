//! The transfer function `H_λ^K` and its landmarks `Θ_λ`, `κ_λ`, `μ_λ`.

use serde::Serialize;

use super::{d_put, require_below_omega, vega_parts};
use crate::error::{Error, Result};
use crate::families::ParametricFamily;
use crate::numerics::{integrate, refine_root};

/// Grid size for locating `μ_λ` on `[Ω - 10 scale, Ω]`.
pub const MU_GRID: usize = 256;
/// Grid size for the uniqueness check of `κ_λ`.
pub const KAPPA_GRID: usize = 32;
/// Grid size for bracketing `Θ_λ` on `[Ω - 40 scale, Ω)`.
pub const THETA_GRID: usize = 400;

/// `H(x) = ∂P^K(x)/∂P^K(Ω) - ∂P(x)/∂P(Ω)` with all derivatives in `λ`.
#[derive(Debug, Clone)]
pub struct TransferFunction<'a> {
    family: &'a ParametricFamily,
    k: f64,
    d_f_at_k: f64,
    d_put_at_k: f64,
    barrier_norm: f64,
    plain_norm: f64,
}

impl<'a> TransferFunction<'a> {
    pub fn new(family: &'a ParametricFamily, k: f64) -> Result<Self> {
        let parts = vega_parts(family, k)?;
        Ok(Self {
            family,
            k,
            d_f_at_k: family.d_cdf_d_lambda(k),
            d_put_at_k: d_put(family, k)?,
            barrier_norm: parts.barrier,
            plain_norm: parts.plain,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `∂P^K(Ω)/∂λ`.
    pub fn barrier_norm(&self) -> f64 {
        self.barrier_norm
    }

    /// `∂P(Ω)/∂λ`.
    pub fn plain_norm(&self) -> f64 {
        self.plain_norm
    }

    /// `∂P^K(x)/∂λ = ∂P(min(x, K))/∂λ + (x - K)⁺ ∂F(K)/∂λ`.
    pub fn d_barrier_put(&self, x: f64) -> Result<f64> {
        if x <= self.k {
            d_put(self.family, x)
        } else {
            Ok(self.d_put_at_k + (x - self.k) * self.d_f_at_k)
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let om = self.family.omega();
        if x == om {
            return Ok(0.0);
        }
        let plain = d_put(self.family, x)?;
        let barrier = if x <= self.k { plain } else { self.d_put_at_k + (x - self.k) * self.d_f_at_k };
        Ok(barrier / self.barrier_norm - plain / self.plain_norm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferProfile {
    #[serde(rename = "K")]
    pub k: f64,
    pub grid: Vec<(f64, f64)>,
    pub theta: f64,
    /// `None` when `K > Θ_λ`, where the crossing is not guaranteed.
    pub kappa: Option<f64>,
    pub mu_inflexion: f64,
    #[serde(rename = "dP_dlambda_at_omega")]
    pub d_put_at_omega: f64,
    #[serde(rename = "dPK_dlambda_at_omega")]
    pub d_barrier_put_at_omega: f64,
}

/// A located sign change: either a bracket or a grid point where the
/// function is exactly zero between values of opposite sign.
enum Crossing {
    Bracket(f64, f64),
    Exact(f64),
}

fn crossings<F: FnMut(f64) -> Result<f64>>(mut f: F, grid: &[f64]) -> Result<Vec<Crossing>> {
    let mut out = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    let mut zero: Option<f64> = None;
    for &x in grid {
        let v = f(x)?;
        if v == 0.0 {
            zero.get_or_insert(x);
            continue;
        }
        if let Some((lx, lv)) = last {
            if lv.signum() != v.signum() {
                out.push(match zero {
                    Some(z) => Crossing::Exact(z),
                    None => Crossing::Bracket(lx, x),
                });
            }
        }
        last = Some((x, v));
        zero = None;
    }
    Ok(out)
}

fn refine<F: FnMut(f64) -> Result<f64>>(f: F, c: &Crossing, tol: f64) -> Result<f64> {
    match *c {
        Crossing::Bracket(a, b) => refine_root(f, a, b, tol),
        Crossing::Exact(x) => Ok(x),
    }
}

fn root_tol(family: &ParametricFamily) -> f64 {
    1e-12 * family.scale().max(family.omega().abs()).max(1e-300)
}

/// `μ_λ`: the single point left of `Ω` where `∂f/∂λ` changes sign.
pub fn mu_inflexion(family: &ParametricFamily) -> Result<f64> {
    let om = family.omega();
    let lo = om - 10.0 * family.scale();
    let grid: Vec<f64> = (0..MU_GRID).map(|i| lo + (om - lo) * i as f64 / (MU_GRID - 1) as f64).collect();
    let df = |x: f64| Ok(family.d_pdf_d_lambda(x));
    let found = crossings(df, &grid)?;
    if found.len() != 1 {
        return Err(Error::NotMonomodal(format!(
            "df/dlambda changes sign {} times on [{lo}, {om}]",
            found.len()
        )));
    }
    refine(df, &found[0], root_tol(family))
}

/// `g(K) = ∫_K^Ω ∂F/∂λ - (Ω - K) ∂F(K)/∂λ`; its root is `Θ_λ`.
fn theta_gap(family: &ParametricFamily, k: f64) -> Result<f64> {
    let om = family.omega();
    let inner = integrate(|x| family.d_cdf_d_lambda(x), k, om, family.quadrature())?;
    Ok(inner.value - (om - k) * family.d_cdf_d_lambda(k))
}

/// `Θ_λ`: the stress level at which the barrier and plain λ-vegas at `Ω`
/// coincide.
pub fn theta_threshold(family: &ParametricFamily) -> Result<f64> {
    mu_inflexion(family)?;
    let om = family.omega();
    let width = 40.0 * family.scale();
    // The grid stops short of Ω, where g vanishes identically.
    let grid: Vec<f64> = (0..THETA_GRID).map(|i| om - width + width * i as f64 / THETA_GRID as f64).collect();
    let g = |k: f64| theta_gap(family, k);
    let found = crossings(g, &grid)?;
    match found.len() {
        0 => Err(Error::NoBracket(format!("no threshold on [{}, {om})", om - width))),
        1 => refine(g, &found[0], root_tol(family)),
        n => Err(Error::Ambiguous(format!("{n} threshold candidates on [{}, {om})", om - width))),
    }
}

/// `κ_λ`: the unique zero of `H` in `(K, Ω)`; requires `K ≤ Θ_λ`.
pub fn kappa_crossing(family: &ParametricFamily, k: f64) -> Result<f64> {
    let theta = theta_threshold(family)?;
    kappa_with_theta(family, k, theta)
}

fn kappa_with_theta(family: &ParametricFamily, k: f64, theta: f64) -> Result<f64> {
    require_below_omega(family, k)?;
    if k > theta {
        return Err(Error::precondition(format!(
            "kappa needs K <= theta = {theta}, got K = {k}"
        )));
    }
    let h = TransferFunction::new(family, k)?;
    let om = family.omega();
    let grid: Vec<f64> = (0..KAPPA_GRID).map(|i| k + (om - k) * i as f64 / KAPPA_GRID as f64).collect();
    let f = |x: f64| h.eval(x);
    let found = crossings(f, &grid)?;
    match found.len() {
        0 => Err(Error::NoBracket(format!("H does not change sign on ({k}, {om})"))),
        1 => refine(f, &found[0], root_tol(family)),
        n => Err(Error::Ambiguous(format!("H changes sign {n} times on ({k}, {om})"))),
    }
}

/// `H` on `points` uniform points spanning `[Ω - 2(Ω - K) - 2 scale, Ω]`
/// (plus `K` itself), with the landmarks.
pub fn transfer_profile(family: &ParametricFamily, k: f64, points: usize) -> Result<TransferProfile> {
    if points < 2 {
        return Err(Error::invalid("transfer grid needs at least two points"));
    }
    let h = TransferFunction::new(family, k)?;
    let theta = theta_threshold(family)?;
    let mu = mu_inflexion(family)?;
    let kappa = if k <= theta { Some(kappa_with_theta(family, k, theta)?) } else { None };
    let om = family.omega();
    let lo = om - 2.0 * (om - k) - 2.0 * family.scale();
    let mut xs: Vec<f64> = (0..points).map(|i| lo + (om - lo) * i as f64 / (points - 1) as f64).collect();
    xs.push(k);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let grid = xs.into_iter().map(|x| Ok((x, h.eval(x)?))).collect::<Result<Vec<_>>>()?;
    Ok(TransferProfile {
        k,
        grid,
        theta,
        kappa,
        mu_inflexion: mu,
        d_put_at_omega: h.plain_norm(),
        d_barrier_put_at_omega: h.barrier_norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::refine_root;

    fn gauss(l: f64) -> ParametricFamily {
        ParametricFamily::gaussian_scaling(0.0, l).unwrap()
    }

    // Independent Gaussian threshold: K = -λ√u with e^{u/2} = 1 + u.
    fn gaussian_theta(l: f64) -> f64 {
        let u = refine_root(|u: f64| Ok((0.5 * u).exp() - 1.0 - u), 1.0, 5.0, 1e-15).unwrap();
        -l * u.sqrt()
    }

    #[test]
    fn theta_matches_gaussian_oracle() {
        for &l in &[1.0, 2.0, 0.4] {
            let t = theta_threshold(&gauss(l)).unwrap();
            assert!((t - gaussian_theta(l)).abs() < 1e-9 * l, "{t}");
        }
        assert!((theta_threshold(&gauss(1.0)).unwrap() + 1.585).abs() < 5e-3);
    }

    #[test]
    fn mu_is_minus_lambda_for_gaussian() {
        assert!((mu_inflexion(&gauss(1.0)).unwrap() + 1.0).abs() < 1e-10);
        assert!((mu_inflexion(&gauss(2.5)).unwrap() + 2.5).abs() < 1e-9);
    }

    #[test]
    fn shifting_family_needs_mode_below_omega() {
        let bad = ParametricFamily::gaussian_shifting(0.0, 1.0, -0.5).unwrap();
        assert!(matches!(mu_inflexion(&bad), Err(Error::NotMonomodal(_))));
        let good = ParametricFamily::gaussian_shifting(0.0, 1.0, 1.0).unwrap();
        assert!((mu_inflexion(&good).unwrap() + 1.0).abs() < 1e-10);
    }

    #[test]
    fn h_signs_for_gaussian() {
        let g = gauss(1.0);
        let h = TransferFunction::new(&g, -2.0).unwrap();
        assert!(h.eval(-3.0).unwrap() > 0.0);
        assert!(h.eval(-0.1).unwrap() < 0.0);
        assert_eq!(h.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn h_below_barrier_is_proportional_to_put_vega() {
        let g = gauss(1.0);
        let h = TransferFunction::new(&g, -2.0).unwrap();
        let c = 1.0 / h.barrier_norm() - 1.0 / h.plain_norm();
        for &x in &[-5.0, -3.0, -2.0] {
            let expected = c * g.d_put_d_lambda(x);
            assert!((h.eval(x).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_by_bisection_oracle() {
        let g = gauss(1.0);
        let kappa = kappa_crossing(&g, -2.0).unwrap();
        // Bisect H built from closed forms only.
        let (k, s) = (-2.0f64, g.s_minus());
        let dp = |x: f64| g.put_price(x) - x * g.cdf(x);
        let df = |x: f64| -x * g.pdf(x);
        let barrier_norm = dp(k) - k * df(k);
        let h = |x: f64| {
            let b = if x <= k { dp(x) } else { dp(k) + (x - k) * df(k) };
            b / barrier_norm - dp(x) / s
        };
        let (mut a, mut b) = (-1.9, -1e-9);
        assert!(h(a) > 0.0 && h(b) < 0.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if h(m) > 0.0 { a = m } else { b = m }
        }
        assert!((kappa - a).abs() < 1e-9, "{kappa} vs {a}");
        // The crossing sits just below the inflexion point at this K.
        assert!(kappa > -1.1 && kappa < -1.0);
        let far = kappa_crossing(&g, -3.0).unwrap();
        assert!(far > mu_inflexion(&g).unwrap() && far < 0.0);
    }

    #[test]
    fn kappa_refuses_above_theta() {
        let g = gauss(1.0);
        assert!(matches!(kappa_crossing(&g, -1.0), Err(Error::Precondition(_))));
        let theta = theta_threshold(&g).unwrap();
        let k = theta - 1e-3;
        let kappa = kappa_crossing(&g, k).unwrap();
        let h = TransferFunction::new(&g, k).unwrap();
        for i in 1..20 {
            let x = kappa - 0.2 * i as f64;
            assert!(h.eval(x).unwrap() > 0.0, "x = {x}");
        }
    }

    #[test]
    fn profile_structure() {
        let p = transfer_profile(&gauss(1.0), -2.0, 81).unwrap();
        assert!(p.grid.iter().filter(|(x, _)| *x <= -2.0).all(|(_, h)| *h > 0.0));
        let last = p.grid.last().unwrap();
        assert_eq!(last.0, 0.0);
        assert!(last.1.abs() < 1e-9);
        assert!(p.kappa.is_some());
    }
}
