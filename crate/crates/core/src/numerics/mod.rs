//! Quadrature, differencing, bracketed root refinement and the seeded Monte
//! Carlo oracle that the measures are built on.

mod diff;
mod monte_carlo;
mod quadrature;
mod root;

pub use diff::{central_difference, default_parameter_step, second_difference};
pub use monte_carlo::{
    draw_samples, histogram, mc_expectation, mc_left_tail_expectation, HistogramBin, McEstimate,
    McRng, McSpec, SampleSummary, Sampler,
};
pub use quadrature::{
    integrate, integrate_breakpoints, integrate_left_tail, integrate_right_tail, Estimate,
    QuadratureSpec, TailWitness,
};
pub use root::{refine_root, sign_changes};
