//! Linear fluid–structure operator: added mass, rigid coupling blocks,
//! resolvent solves in block and primitive form, and implicit Euler stepping.

mod added_mass;
pub(crate) mod operator;
mod resolvent;
mod stepper;

pub use added_mass::{build_added_mass, neumann_added_mass, AddedMass};
pub use operator::CoupledOperator;
pub use resolvent::{reconstruct_pressure_c, resolvent_residual, rigid_schur_real, solve_primitive, solve_resolvent, ResolventSolution};
pub use stepper::{step_linear, CoupledState, EnergyBalance, LinearStepper, StepData};
