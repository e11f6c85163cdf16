//! Independent numerical checks for the closed-form results.

pub mod bloch;
pub mod montecarlo;
pub mod radial;

pub use bloch::{bloch_1d, bloch_1d_exact, default_etas, exact_lambda, Bloch1DResult, Cell1D};
pub use montecarlo::{mc_sphere_integral, mc_volume_integral, McEstimate};
pub use radial::{
    energy_integral_m, outer_derivative, richardson_slope, solve_radial_f, solve_radial_gh,
    RadialGrid, RadialSolution,
};
