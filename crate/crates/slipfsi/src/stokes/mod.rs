//! Fluid building blocks on the fixed reference domain: MINI-element Stokes
//! operator with a no-slip outer wall and Navier slip on the solid, Helmholtz
//! projection, Neumann potentials, steady rigid lifting and boundary traction.

mod assemble;
mod compat;
pub mod dofs;
pub mod fem;
mod helmholtz;
mod lifting;
mod neumann;
mod traction;

pub use assemble::{assemble_stokes, sample_velocity, slip_matrix, solid_vertex_weights, StokesBlocks, LINEAR_DEGREE};
pub use compat::{check_compatibility, CompatibilityReport};
pub use dofs::{DofMap, VertexKind};
pub use helmholtz::{helmholtz_project, HelmholtzProjector, Projection};
pub use lifting::{solve_steady_lifting, stokes_residual, Lifted, SteadyLifting};
pub use neumann::NeumannSolver;
pub use traction::{facet_points, facet_state, traction_moments, FacetPoint, StressLaw};
