//! Radially symmetric solutions of the homogeneous Landau equation with
//! Coulomb interaction and of its isotropic Krieger–Strain variants.
//!
//! The crate covers the radial coefficient formulas, a conservative
//! finite-volume time stepper, the Picard scheme for the regularised linear
//! problems, the evolution of the mass function, barrier certificates and the
//! blow-up diagnostics, plus a Monte Carlo oracle working directly in ℝ³.

pub mod coefficients;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod massflow;
pub mod oracle;

pub use coefficients::{compute_coefficients, ellipticity_bounds, kernel_i, CoefficientField};
pub use dynamics::{
    picard, rhs, run, solve_linear_cauchy, step, EvolutionSpec, Model, PicardResult, SimulationState, Snapshot,
    Stepper, Termination, Trajectory,
};
pub use error::{Error, Result};
pub use grid::{
    lp_norm, make_initial, moment, monotonicity_defect, weak_lp_bound, InitialDataSpec, Profile, RadialFunction,
    RadialGrid,
};
