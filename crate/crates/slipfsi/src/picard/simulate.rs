use nalgebra::Vector3;
use serde::Serialize;

use super::fixed_point::{fixed_point_solve, ContractionLog, FixedPointOptions, FixedPointProblem, RunStatus};
use super::horizon::{HorizonData, LinearHorizon, TimeGrid, Trajectory};
use super::terms::{LinearStress, NonlinearContext};
use crate::coupled::CoupledOperator;
use crate::error::Result;
use crate::geometry::{body_distance, DomainConfig, RigidBody};
use crate::linalg::Csr;
use crate::nonnewtonian::{wall_law_residual, FrozenOperator, ViscosityKind, ViscosityModel};
use crate::spectral::{fit_decay_rate, DecayFit};
use crate::stokes::{assemble_stokes, SteadyLifting};
use crate::transform::FlowMap;

/// One row of the run time series, rigid quantities in the lab frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesRow {
    pub t: f64,
    pub l: [f64; 3],
    pub omega: [f64; 3],
    pub h: [f64; 3],
    /// `½ zᵀ𝕄_tot z`.
    pub energy: f64,
    pub viscous_dissipation: f64,
    pub slip_dissipation: f64,
    /// Fluid L² norm.
    pub u_norm: f64,
}

/// Fields on the moving domain at one level.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub points: Vec<Vector3<f64>>,
    pub velocity: Vec<Vector3<f64>>,
    pub pressure: Vec<f64>,
}

/// Assembled problem for end-to-end runs.
pub struct Simulator {
    pub domain: DomainConfig,
    pub op: CoupledOperator,
    pub context: NonlinearContext,
    pub model: ViscosityModel,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub status: RunStatus,
    pub trajectory: Trajectory,
    pub log: ContractionLog,
    /// Rigid motion along the trajectory.
    pub motion: FlowMap,
    pub series: Vec<SeriesRow>,
    pub min_distance: f64,
    /// Exponential fit of the energy, when the run is long enough.
    pub decay: Option<DecayFit>,
    pub contact_level: Option<usize>,
    /// Frozen linearization (and Newtonian reference) of a generalized run.
    pub frozen: Option<FrozenOperator>,
}

impl Simulator {
    /// The linear operator uses ν = μ₀/2.
    pub fn new(domain: DomainConfig, body: RigidBody, model: ViscosityModel) -> Result<Self> {
        model.validate()?;
        let blocks = assemble_stokes(&domain, model.rest_viscosity())?;
        let context = NonlinearContext::new(&domain, &body, model)?;
        let op = CoupledOperator::new(blocks, body)?;
        Ok(Self { domain, op, context, model })
    }

    /// Divergence-free initial state: the steady Stokes lifting of `ξ`.
    pub fn lifted_initial(&self, xi: &[f64; 6]) -> Result<Vec<f64>> {
        if xi.iter().all(|v| *v == 0.0) {
            return Ok(vec![0.0; self.op.n_z()]);
        }
        Ok(SteadyLifting::new(&self.op.blocks)?.solve(&self.op.blocks, xi)?.z)
    }

    /// Reference solve (generalized viscosity only), fixed-point solve and
    /// diagnostics.
    pub fn run(&self, z0: &[f64], grid: TimeGrid, opts: &FixedPointOptions) -> Result<Simulation> {
        // a generalized law with d = 2 still takes the frozen-coefficient path
        let frozen = if self.model.kind == ViscosityKind::Newtonian {
            None
        } else {
            Some(FrozenOperator::new(&self.op, &self.domain.mesh, self.model, grid, z0, &self.context.cache)?)
        };
        let horizon = match &frozen {
            Some(f) => f.horizon(&self.op)?,
            None => LinearHorizon::newtonian(&self.op, grid)?,
        };
        let problem = FixedPointProblem {
            blocks: &self.op.blocks,
            domain: &self.domain,
            context: &self.context,
            horizon: &horizon,
            frozen: frozen.as_ref(),
            z0,
            external: HorizonData::default(),
        };
        let out = fixed_point_solve(&problem, opts)?;
        let series = self.series(&out.trajectory, &out.motion);
        let min_distance = (0..out.motion.len())
            .map(|n| body_distance(&out.motion.rigid_state(n), &self.domain))
            .fold(f64::INFINITY, f64::min);
        let decay = self.decay(&series);
        Ok(Simulation {
            status: out.status,
            trajectory: out.trajectory,
            log: out.log,
            motion: out.motion,
            series,
            min_distance,
            decay,
            contact_level: out.contact_level,
            frozen,
        })
    }

    /// Largest wall-law residual over the levels of a run, with the
    /// traction recovered from the tangential momentum rows.
    pub fn wall_law_residual(&self, sim: &Simulation) -> Result<f64> {
        let b = &self.op.blocks;
        let traj = &sim.trajectory;
        let linear = match &sim.frozen {
            Some(f) => LinearStress::Frozen(&f.coefficients),
            None => LinearStress::Newtonian,
        };
        let map = self.context.kinematics(traj)?;
        let viscous: Vec<Csr> = match &sim.frozen {
            Some(f) => f.stiffness.iter().map(|s| Csr::combine(&[(1.0, s), (-1.0, &b.slip)])).collect(),
            None => vec![b.viscous.clone()],
        };
        let mut worst = 0.0f64;
        for n in 1..=traj.grid.steps {
            let load = self.context.step_load(b, traj, &map, n, linear)?.load;
            let dz = crate::linalg::sub(&traj.z[n], &traj.z[n - 1]);
            let v = &viscous[if viscous.len() == 1 { 0 } else { n - 1 }];
            let mut row = b.mass.mul_vec(&dz);
            row.iter_mut().for_each(|r| *r /= traj.grid.dt);
            crate::linalg::axpy(&mut row, 1.0, &v.mul_vec(&traj.z[n]));
            crate::linalg::axpy(&mut row, -1.0, &b.div.tmul_vec(&traj.pressure[n]));
            crate::linalg::axpy(&mut row, -1.0, &load);
            worst = worst.max(wall_law_residual(b, &traj.z[n], &row));
        }
        Ok(worst)
    }

    pub fn series(&self, traj: &Trajectory, motion: &FlowMap) -> Vec<SeriesRow> {
        let b = &self.op.blocks;
        (0..traj.z.len())
            .map(|n| {
                let z = &traj.z[n];
                let q = motion.q[n];
                SeriesRow {
                    t: traj.grid.t(n),
                    l: (q * traj.l(n)).into(),
                    omega: (q * traj.omega(n)).into(),
                    h: motion.h[n].into(),
                    energy: 0.5 * self.op.mass_total.bilinear(z, z),
                    viscous_dissipation: b.viscous_energy(z),
                    slip_dissipation: b.slip_energy(z),
                    u_norm: b.mass.bilinear(z, z).max(0.0).sqrt(),
                }
            })
            .collect()
    }

    fn decay(&self, series: &[SeriesRow]) -> Option<DecayFit> {
        let (t, e): (Vec<f64>, Vec<f64>) = series.iter().map(|r| (r.t, r.energy)).unzip();
        // energy decays at twice the velocity rate
        fit_decay_rate(&t, &e).ok().map(|mut f| {
            f.eta *= 0.5;
            f
        })
    }

    /// Flow map at the mesh vertices, for pushing snapshots forward.
    pub fn vertex_map(&self, traj: &Trajectory) -> Result<FlowMap> {
        FlowMap::build(
            self.context.psi,
            self.domain.mesh.vertices.clone(),
            &traj.grid.times(),
            &traj.l_history(),
            &traj.omega_history(),
            self.context.flow_options,
        )
    }

    /// Vertex positions `X(y)`, velocity `Qũ` and pressure at level `n`.
    pub fn snapshot(&self, traj: &Trajectory, vertex_map: &FlowMap, n: usize) -> Snapshot {
        let u = self.op.blocks.dofs.to_full(&traj.z[n]);
        let q = vertex_map.q[n];
        let nv = self.domain.mesh.n_vertices();
        Snapshot {
            t: traj.grid.t(n),
            points: vertex_map.x[n].clone(),
            velocity: (0..nv).map(|v| q * Vector3::new(u[3 * v], u[3 * v + 1], u[3 * v + 2])).collect(),
            pressure: traj.pressure[n].clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_reference_geometry, Surface};

    fn simulator(model: ViscosityModel) -> Simulator {
        let d = make_reference_geometry(1.0, 4.0, 0).unwrap();
        Simulator::new(d, RigidBody::uniform(1.0, &Surface::sphere(1.0)).unwrap(), model).unwrap()
    }

    #[test]
    fn zero_data_gives_a_trivial_global_run() {
        let s = simulator(ViscosityModel::newtonian(1.0));
        let z0 = s.lifted_initial(&[0.0; 6]).unwrap();
        let grid = TimeGrid::new(0.1, 0.05).unwrap();
        let run = s.run(&z0, grid, &FixedPointOptions::default()).unwrap();
        assert_eq!(run.status, RunStatus::Global);
        assert!(run.series.iter().all(|r| r.energy == 0.0 && r.u_norm == 0.0 && r.l == [0.0; 3]));
        assert_eq!(run.min_distance, s.domain.beta);
    }

    #[test]
    fn translation_toward_the_wall_hits_the_threshold() {
        // speed 2 along x against a clearance of 3: β/2 is crossed near t = 0.75
        let s = simulator(ViscosityModel::newtonian(0.02));
        let z0 = s.lifted_initial(&[2.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let grid = TimeGrid::new(1.5, 0.05).unwrap();
        let opts = FixedPointOptions {
            gate: false,
            max_iter: 3,
            ..Default::default()
        };
        let run = s.run(&z0, grid, &opts).unwrap();
        assert_eq!(run.status, RunStatus::Contact);
        let level = run.contact_level.unwrap();
        assert!(level > 0 && level < grid.steps);
        let t = grid.t(level);
        assert!(t > 0.5 && t < 1.5, "contact at {t}");
    }

    #[test]
    fn snapshots_are_pushed_forward() {
        let s = simulator(ViscosityModel::newtonian(1.0));
        let z0 = s.lifted_initial(&[0.05, 0.0, 0.02, 0.0, 0.03, 0.0]).unwrap();
        let grid = TimeGrid::new(0.2, 0.05).unwrap();
        let opts = FixedPointOptions {
            gate: false,
            ..Default::default()
        };
        let run = s.run(&z0, grid, &opts).unwrap();
        let map = s.vertex_map(&run.trajectory).unwrap();
        let n = grid.steps;
        let snap = s.snapshot(&run.trajectory, &map, n);
        let st = run.motion.rigid_state(n);
        for v in s.domain.solid_vertices() {
            let y = s.domain.mesh.vertices[v];
            assert!((snap.points[v] - (st.h + st.q * y)).norm() < 1e-9);
        }
        let row = run.series[n];
        let l = st.q * run.trajectory.l(n);
        assert!((Vector3::from(row.l) - l).norm() < 1e-15);
    }
}
