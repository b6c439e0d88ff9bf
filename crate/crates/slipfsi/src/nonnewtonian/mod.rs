//! Generalized (shear-dependent) viscosity, its quasi-linear coefficients,
//! the frozen-coefficient linearization, the short-time Volterra loop and
//! the nonlinear wall law.

mod coefficients;
mod frozen;
mod remainder;
mod slip;
mod viscosity;
mod volterra;

pub use coefficients::{coefficients, extra_stress, transformed_sym_gradient, QuasiLinearCoefficients};
pub use frozen::{frozen_stiffness, newtonian_reference, tangent_matrix, FrozenCoefficients, FrozenOperator, ReferenceStrain, FROZEN_DEGREE};
pub use remainder::remainder_load;
pub use slip::{nonlinear_slip_load, nonlinear_slip_rhs, slip_data, slip_load, wall_law_residual, SlipDatum};
pub use viscosity::{ViscosityKind, ViscosityModel};
pub use volterra::{volterra_solve, VolterraOptions, VolterraReport};
