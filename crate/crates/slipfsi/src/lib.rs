//! Rigid body moving in a bounded viscous incompressible fluid with Navier
//! slip at the interface.
//!
//! The crate works on a fixed reference mesh of the initial fluid domain.
//! A smooth flow map carries it onto the moving domain, the linear
//! fluid–structure operator is solved monolithically, and the remaining
//! nonlinear terms are handled by a fixed-point iteration over the whole
//! time horizon.

pub mod cli;
pub mod config;
pub mod coupled;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod nonnewtonian;
pub mod output;
pub mod picard;
pub mod quadrature;
pub mod spectral;
pub mod stokes;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
