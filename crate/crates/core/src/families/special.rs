use std::f64::consts::{PI, SQRT_2};

use statrs::function::beta::beta_reg;
use libm::erfc;
use statrs::function::gamma::ln_gamma;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_4;

pub fn normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// `E[(z - Z)^+]` for a standard normal `Z`.
pub fn normal_put(z: f64) -> f64 {
    z * normal_cdf(z) + normal_pdf(z)
}

pub fn student_t_pdf(z: f64, nu: f64) -> f64 {
    let ln_norm = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln();
    (ln_norm - 0.5 * (nu + 1.0) * (z * z / nu).ln_1p()).exp()
}

pub fn student_t_cdf(z: f64, nu: f64) -> f64 {
    let h = nu / (nu + z * z);
    let half_tail = 0.5 * beta_reg(0.5 * nu, 0.5, h);
    if z <= 0.0 {
        half_tail
    } else {
        1.0 - half_tail
    }
}

/// `E[(z - T)^+]` for a standard Student-t `T` with `nu > 1`.
pub fn student_t_put(z: f64, nu: f64) -> f64 {
    z * student_t_cdf(z, nu) + (nu + z * z) / (nu - 1.0) * student_t_pdf(z, nu)
}
