use serde::Serialize;

use super::horizon::Trajectory;
use crate::linalg::Csr;
use crate::stokes::{fem, StokesBlocks};

/// Weighted space–time norm of a trajectory, p = q = 2:
/// `‖e^{ηt}u‖_{L²H¹} + ‖e^{ηt}∂ₜu‖_{L²L²} + ‖e^{ηt}∇π‖_{L²L²} + ‖e^{ηt}l‖_{H¹} + ‖e^{ηt}ω‖_{H¹}`
/// combined in the Euclidean sense.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SNorm {
    pub eta: f64,
    pub total: f64,
    pub velocity_space: f64,
    pub velocity_time: f64,
    pub pressure_gradient: f64,
    pub rigid_translation: f64,
    pub rigid_rotation: f64,
}

/// Matrices defining the snapshot norms.
#[derive(Debug, Clone)]
pub struct NormWeights {
    /// Fluid L² mass on z.
    pub mass: Csr,
    /// `∫ |Du|²·2` on z (the viscous block divided by ν).
    pub strain: Csr,
    /// P1 stiffness for `‖∇π‖²`.
    pub pressure: Csr,
}

impl NormWeights {
    pub fn new(blocks: &StokesBlocks) -> Self {
        let (k, _) = fem::p1_matrices(&blocks.cache);
        Self {
            mass: blocks.mass.clone(),
            strain: blocks.viscous.scaled(1.0 / blocks.viscosity),
            pressure: k,
        }
    }
}

/// Velocity, pressure and rigid components on the grid, each weighted by
/// `e^{2ηtₙ}`: trapezoid in time for values, backward differences for rates.
pub fn s_norm(w: &NormWeights, traj: &Trajectory, eta: f64) -> SNorm {
    let dt = traj.grid.dt;
    let n = traj.z.len() - 1;
    let weight = |k: usize| (2.0 * eta * traj.grid.t(k)).exp();
    let trap = |k: usize| if k == 0 || k == n { 0.5 * dt } else { dt };
    let (mut vs, mut vt, mut pg, mut lt, mut om) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..=n {
        let z = &traj.z[k];
        let e = weight(k) * if n == 0 { 1.0 } else { trap(k) };
        vs += e * (w.mass.bilinear(z, z) + w.strain.bilinear(z, z));
        lt += e * traj.l(k).norm_squared();
        om += e * traj.omega(k).norm_squared();
        if k > 0 {
            let ek = weight(k) * dt;
            let dz: Vec<f64> = z.iter().zip(&traj.z[k - 1]).map(|(a, b)| (a - b) / dt).collect();
            vt += ek * w.mass.bilinear(&dz, &dz);
            pg += ek * w.pressure.bilinear(&traj.pressure[k], &traj.pressure[k]);
            lt += ek * ((traj.l(k) - traj.l(k - 1)) / dt).norm_squared();
            om += ek * ((traj.omega(k) - traj.omega(k - 1)) / dt).norm_squared();
        }
    }
    let parts = [vs, vt, pg, lt, om].map(|v: f64| v.max(0.0).sqrt());
    SNorm {
        eta,
        total: parts.iter().map(|p| p * p).sum::<f64>().sqrt(),
        velocity_space: parts[0],
        velocity_time: parts[1],
        pressure_gradient: parts[2],
        rigid_translation: parts[3],
        rigid_rotation: parts[4],
    }
}
