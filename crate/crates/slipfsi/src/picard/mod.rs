//! Fixed-point iteration over the whole time horizon: the linear coupled
//! problem is solved with the nonlinear terms of the previous iterate as data.

mod fixed_point;
mod horizon;
mod simulate;
mod snorm;
mod terms;

pub use fixed_point::{fixed_point_solve, smallness_bound, ContractionLog, FixedPointOptions, FixedPointOutcome, FixedPointProblem, RunStatus};
pub use horizon::{HorizonData, LinearHorizon, TimeGrid, Trajectory};
pub use simulate::{SeriesRow, Simulation, Simulator, Snapshot};
pub use snorm::{s_norm, NormWeights, SNorm};
pub use terms::{rigid_force, rigid_torque, LinearStress, NonlinearContext, NonlinearTerms, PointTerms, StepLoad, NONLINEAR_DEGREE};
