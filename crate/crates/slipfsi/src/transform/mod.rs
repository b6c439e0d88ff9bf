//! Change of variables onto the fixed reference domain: a smooth extension
//! Λ of the rigid velocity, its flow map X and inverse Y, and field
//! pullback/pushforward.

mod cutoff;
mod fields;
mod flow;
mod lambda;

pub use cutoff::{CutoffPsi, PsiJet};
pub use fields::{pullback_fields, pushforward_fields};
pub use flow::{FlowMap, FlowOptions, Jacobians};
pub use lambda::{eval_lambda, eval_w, lambda_jet, vector_potential, LambdaJet, RigidMotion};
