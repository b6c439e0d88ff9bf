use nalgebra::Vector6;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::picard::{HorizonData, LinearHorizon, Trajectory};

#[derive(Debug, Clone, Copy)]
pub struct VolterraOptions {
    /// Stop when the rigid velocities move by less than this (max norm).
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest number of steps before giving up on halving.
    pub min_steps: usize,
}

impl Default for VolterraOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200,
            min_steps: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VolterraReport {
    pub steps: usize,
    pub iterations: usize,
    pub ratios: Vec<f64>,
    pub differences: Vec<f64>,
    pub halvings: usize,
}

/// Local-in-time solve of the coupled problem by iterating on the rigid
/// velocities: each sweep solves the fluid with `ξ` prescribed and updates
/// `K(ξⁿ − ξ⁰) = Σ_{m≤n} dt (F_ξᵐ − 𝒥ᵐ) + M(ξⁿ_old − ξ⁰)`, where `𝒥` is the fluid
/// reaction and `M` the added mass. The fixed point is the monolithic
/// implicit-Euler solution. If the sweep map is not contractive the horizon
/// is halved.
pub fn volterra_solve(h: &LinearHorizon, z0: &[f64], data: &HorizonData, opts: VolterraOptions) -> Result<(Trajectory, VolterraReport)> {
    let mut steps = h.grid.steps;
    let mut halvings = 0;
    loop {
        match sweep_to_convergence(h, z0, data, steps, opts)? {
            Some((traj, mut report)) => {
                report.halvings = halvings;
                return Ok((traj, report));
            }
            None => {
                steps /= 2;
                halvings += 1;
                if steps < opts.min_steps.max(1) {
                    return Err(Error::VolterraHorizon {
                        horizon: h.grid.dt * opts.min_steps.max(1) as f64,
                    });
                }
            }
        }
    }
}

fn sweep(h: &LinearHorizon, z0: &[f64], data: &HorizonData, xi: &[[f64; 6]]) -> Result<(Trajectory, Vec<[f64; 6]>)> {
    let steps = xi.len() - 1;
    let mut traj = Trajectory::zeros(h.grid.truncated(steps), h.n_z, h.n_fluid, h.n_p);
    traj.z[0] = z0.to_vec();
    let mut reaction = vec![[0.0; 6]; steps + 1];
    for n in 1..=steps {
        let (z, p) = h.fluid_step(n, &traj.z[n - 1], &xi[n], data)?;
        reaction[n] = h.fluid_reaction(n, &z, &traj.z[n - 1], &p);
        traj.z[n] = z;
        traj.pressure[n] = p;
    }
    Ok((traj, reaction))
}

fn sweep_to_convergence(
    h: &LinearHorizon,
    z0: &[f64],
    data: &HorizonData,
    steps: usize,
    opts: VolterraOptions,
) -> Result<Option<(Trajectory, VolterraReport)>> {
    let nf = h.n_fluid;
    let dt = h.grid.dt;
    let xi0 = Vector6::from_column_slice(&z0[nf..]);
    let mut xi = vec![[0.0; 6]; steps + 1];
    xi.iter_mut().for_each(|x| x.copy_from_slice(xi0.as_slice()));
    let k = h.momentum + h.added_mass;
    let mut differences = Vec::new();
    let mut ratios = Vec::new();
    for it in 1..=opts.max_iter {
        let (traj, reaction) = sweep(h, z0, data, &xi)?;
        let mut next = xi.clone();
        let mut acc = Vector6::zeros();
        let mut diff = 0.0f64;
        for n in 1..=steps {
            let mut f = Vector6::from_column_slice(&reaction[n]) * -1.0;
            if let Some(loads) = &data.loads {
                f += Vector6::from_column_slice(&loads[n - 1][nf..]);
            }
            acc += f * dt;
            let old = Vector6::from_column_slice(&xi[n]);
            let rhs = acc + h.added_mass * (old - xi0);
            let new = xi0 + h.k_inv * rhs;
            debug_assert!((k * (new - xi0) - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
            diff = diff.max((new - old).amax());
            next[n].copy_from_slice(new.as_slice());
        }
        if let Some(prev) = differences.last() {
            ratios.push(if *prev > 0.0 { diff / prev } else { 0.0 });
        }
        differences.push(diff);
        if diff <= opts.tol * (1.0 + xi0.amax()) {
            let (traj, _) = if diff == 0.0 { (traj, reaction) } else { sweep(h, z0, data, &next)? };
            return Ok(Some((
                traj,
                VolterraReport {
                    steps,
                    iterations: it,
                    ratios,
                    differences,
                    halvings: 0,
                },
            )));
        }
        // two consecutive non-contracting sweeps: the horizon is too long
        if ratios.len() >= 2 && ratios[ratios.len() - 2..].iter().all(|r| *r >= 1.0) {
            return Ok(None);
        }
        xi = next;
    }
    Ok(None)
}
