use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use super::horizon::Trajectory;
use crate::error::{Error, Result};
use crate::geometry::{DomainConfig, RigidBody};
use crate::nonnewtonian::{transformed_sym_gradient, FrozenCoefficients, ViscosityModel};
use crate::stokes::fem::{self, QuadCache};
use crate::stokes::StokesBlocks;
use crate::transform::{CutoffPsi, FlowMap, FlowOptions};

/// Quadrature degree of the nonlinear loads.
pub const NONLINEAR_DEGREE: usize = 5;

/// Stress of the linear problem that the remainder is measured against.
#[derive(Debug, Clone, Copy)]
pub enum LinearStress<'a> {
    /// `μ₀ Dũ`.
    Newtonian,
    /// `μ* Dũ + 2μ*′ (D*:Dũ) D*` frozen along a reference trajectory.
    Frozen(&'a FrozenCoefficients),
}

/// Quadrature tables, flow-map sample points and body data for the
/// nonlinear loads.
#[derive(Debug, Clone)]
pub struct NonlinearContext {
    pub cache: QuadCache,
    /// Quadrature points (tet by tet) followed by the mesh vertices.
    pub points: Vec<Vector3<f64>>,
    offsets: Vec<usize>,
    pub vertex_start: usize,
    pub psi: CutoffPsi,
    pub model: ViscosityModel,
    pub mass: f64,
    pub inertia: Matrix3<f64>,
    pub flow_options: FlowOptions,
}

/// Pointwise integrands of the remainder groups at one quadrature point.
#[derive(Debug, Clone, Copy, Default)]
pub struct PointTerms {
    /// `−ω̃ × ũ`.
    pub rotation: Vector3<f64>,
    /// `∇ũ J_Y ∂ₜX`.
    pub transport: Vector3<f64>,
    /// `−∇ũ J_Y Q ũ`.
    pub convection: Vector3<f64>,
    /// `−(Qᵀ𝕋 J_Yᵀ − S_lin)`, paired with `∇v`.
    pub viscous: Matrix3<f64>,
    /// `π̃ ((J_Y Q)ᵀ − I)`, paired with `∇v`.
    pub pressure: Matrix3<f64>,
    /// `∇ũ : (I − (J_Y Q)ᵀ)`.
    pub divergence: f64,
}

/// Remainder at one time level, each group as a z-space load.
#[derive(Debug, Clone, Serialize)]
pub struct NonlinearTerms {
    pub rotation: Vec<f64>,
    pub transport: Vec<f64>,
    pub convection: Vec<f64>,
    pub viscous_metric: Vec<f64>,
    pub pressure_metric: Vec<f64>,
    /// `∫ q 𝒢` for P1 test functions.
    pub divergence: Vec<f64>,
    /// `H = (I − J_Y Q)ũ` at the mesh vertices.
    pub h: Vec<[f64; 3]>,
    pub f1: [f64; 3],
    pub f2: [f64; 3],
}

impl NonlinearTerms {
    /// Euclidean norms of the five volume groups.
    pub fn group_norms(&self) -> [f64; 5] {
        [&self.rotation, &self.transport, &self.convection, &self.viscous_metric, &self.pressure_metric]
            .map(|g| crate::linalg::norm2(g))
    }
}

/// Loads of one level for the linear solve.
#[derive(Debug, Clone)]
pub struct StepLoad {
    pub load: Vec<f64>,
    pub divergence: Vec<f64>,
}

/// `F₁ = −m ω̃ × l̃`.
pub fn rigid_force(mass: f64, l: &Vector3<f64>, omega: &Vector3<f64>) -> Vector3<f64> {
    -omega.cross(l) * mass
}

/// `F₂ = J̃ω̃ × ω̃`.
pub fn rigid_torque(inertia: &Matrix3<f64>, omega: &Vector3<f64>) -> Vector3<f64> {
    (inertia * omega).cross(omega)
}

impl NonlinearContext {
    pub fn new(domain: &DomainConfig, body: &RigidBody, model: ViscosityModel) -> Result<Self> {
        let (center, radius) = domain
            .outer_sphere()
            .ok_or_else(|| Error::InvalidGeometry("the flow-map cut-off needs a spherical outer boundary".into()))?;
        let cache = QuadCache::new(&domain.mesh, NONLINEAR_DEGREE)?;
        let mut points = Vec::with_capacity(cache.n_points() + domain.mesh.n_vertices());
        let mut offsets = Vec::with_capacity(cache.tets.len());
        for pts in &cache.points {
            offsets.push(points.len());
            points.extend(pts.iter().map(|q| q.x));
        }
        let vertex_start = points.len();
        points.extend_from_slice(&domain.mesh.vertices);
        Ok(Self {
            cache,
            points,
            offsets,
            vertex_start,
            psi: CutoffPsi::for_sphere(center, radius, domain.beta),
            model,
            mass: body.mass,
            inertia: body.inertia_body,
            flow_options: FlowOptions::default(),
        })
    }

    #[inline]
    pub fn point_index(&self, tet: usize, qi: usize) -> usize {
        self.offsets[tet] + qi
    }

    /// Flow map of the iterate's rigid velocities at every sample point.
    pub fn kinematics(&self, traj: &Trajectory) -> Result<FlowMap> {
        self.flow(traj, self.points.clone())
    }

    /// Rigid motion only (no sample points), for clearance checks.
    pub fn rigid_kinematics(&self, traj: &Trajectory) -> Result<FlowMap> {
        self.flow(traj, Vec::new())
    }

    fn flow(&self, traj: &Trajectory, points: Vec<Vector3<f64>>) -> Result<FlowMap> {
        FlowMap::build(
            self.psi,
            points,
            &traj.grid.times(),
            &traj.l_history(),
            &traj.omega_history(),
            self.flow_options,
        )
    }

    /// Pointwise integrands at level `n` for every quadrature point.
    pub fn point_terms(
        &self,
        blocks: &StokesBlocks,
        traj: &Trajectory,
        map: &FlowMap,
        n: usize,
        linear: LinearStress,
    ) -> Result<Vec<Vec<PointTerms>>> {
        if map.points.len() != self.points.len() || map.len() <= n {
            return Err(Error::FlowMap("flow map does not cover the quadrature points at this level".into()));
        }
        let u = blocks.dofs.to_full(&traj.z[n]);
        let p = &traj.pressure[n];
        let q = map.q[n];
        let qt = q.transpose();
        let omega = traj.omega(n);
        let mu0 = self.model.mu0;
        (0..self.cache.tets.len())
            .into_par_iter()
            .map(|t| {
                let loc = self.cache.local_values(t, &u);
                let tet = self.cache.tets[t];
                let ploc = [p[tet[0]], p[tet[1]], p[tet[2]], p[tet[3]]];
                self.cache.points[t]
                    .iter()
                    .enumerate()
                    .map(|(qi, qp)| {
                        let i = self.point_index(t, qi);
                        let (val, grad) = fem::eval_velocity(qp, &loc);
                        let (pr, _) = fem::eval_p1(qp, &ploc);
                        let jx = map.jx[n][i];
                        let jy = jx
                            .try_inverse()
                            .ok_or_else(|| Error::FlowMap(format!("singular J_X at quadrature point {i}")))?;
                        let a = jy * q;
                        let dx = transformed_sym_gradient(&grad, &q, &jy);
                        let tx = dx * self.model.eval(dx.norm_squared())?.0;
                        let dy = (grad + grad.transpose()) * 0.5;
                        let s_lin = match linear {
                            LinearStress::Newtonian => dy * mu0,
                            LinearStress::Frozen(f) => f.at(n, t, qi).apply(&grad),
                        };
                        let id = Matrix3::identity();
                        Ok(PointTerms {
                            rotation: -omega.cross(&val),
                            transport: grad * (jy * map.velocity_at(i, n)),
                            convection: -(grad * (a * val)),
                            viscous: -(qt * tx * jy.transpose() - s_lin),
                            pressure: (a.transpose() - id) * pr,
                            divergence: grad.dot(&(id - a.transpose())),
                        })
                    })
                    .collect()
            })
            .collect()
    }

    fn assemble(&self, blocks: &StokesBlocks, table: &[Vec<PointTerms>], pick: impl Fn(&PointTerms) -> (Vector3<f64>, Matrix3<f64>) + Sync) -> Vec<f64> {
        let full = fem::assemble_vector(&self.cache, |t, qi, _| pick(&table[t][qi]));
        blocks.dofs.prolongation.tmul_vec(&full)
    }

    fn divergence(&self, table: &[Vec<PointTerms>]) -> Vec<f64> {
        fem::assemble_p1_vector(&self.cache, |t, qi, _| table[t][qi].divergence)
    }

    /// Total load (all groups plus `F₁`, `F₂` on the rigid rows) and the
    /// divergence data at level `n`.
    pub fn step_load(&self, blocks: &StokesBlocks, traj: &Trajectory, map: &FlowMap, n: usize, linear: LinearStress) -> Result<StepLoad> {
        let table = self.point_terms(blocks, traj, map, n, linear)?;
        let mut load = self.assemble(blocks, &table, |p| {
            (p.rotation + p.transport + p.convection, p.viscous + p.pressure)
        });
        let nf = blocks.n_fluid();
        let (l, w) = (traj.l(n), traj.omega(n));
        let f1 = rigid_force(self.mass, &l, &w);
        let f2 = rigid_torque(&self.inertia, &w);
        for k in 0..3 {
            load[nf + k] += f1[k];
            load[nf + 3 + k] += f2[k];
        }
        Ok(StepLoad {
            load,
            divergence: self.divergence(&table),
        })
    }

    /// Every group separately, with `H` at the vertices.
    pub fn nonlinear_terms(&self, blocks: &StokesBlocks, traj: &Trajectory, map: &FlowMap, n: usize, linear: LinearStress) -> Result<NonlinearTerms> {
        let table = self.point_terms(blocks, traj, map, n, linear)?;
        let zero_m = Matrix3::zeros();
        let zero_v = Vector3::zeros();
        let u = blocks.dofs.to_full(&traj.z[n]);
        let a_at = |v: usize| -> Result<Matrix3<f64>> {
            let jx = map.jx[n][self.vertex_start + v];
            Ok(jx.try_inverse().ok_or_else(|| Error::FlowMap("singular J_X at a vertex".into()))? * map.q[n])
        };
        let h = (0..blocks.dofs.n_vertices)
            .map(|v| {
                let uv = Vector3::new(u[3 * v], u[3 * v + 1], u[3 * v + 2]);
                let hv = (Matrix3::identity() - a_at(v)?) * uv;
                Ok([hv.x, hv.y, hv.z])
            })
            .collect::<Result<Vec<_>>>()?;
        let (l, w) = (traj.l(n), traj.omega(n));
        Ok(NonlinearTerms {
            rotation: self.assemble(blocks, &table, |p| (p.rotation, zero_m)),
            transport: self.assemble(blocks, &table, |p| (p.transport, zero_m)),
            convection: self.assemble(blocks, &table, |p| (p.convection, zero_m)),
            viscous_metric: self.assemble(blocks, &table, |p| (zero_v, p.viscous)),
            pressure_metric: self.assemble(blocks, &table, |p| (zero_v, p.pressure)),
            divergence: self.divergence(&table),
            h,
            f1: rigid_force(self.mass, &l, &w).into(),
            f2: rigid_torque(&self.inertia, &w).into(),
        })
    }

    /// Loads for all levels `1..=steps` of an iterate.
    pub fn horizon_loads(&self, blocks: &StokesBlocks, traj: &Trajectory, map: &FlowMap, linear: LinearStress) -> Result<Vec<StepLoad>> {
        (1..=traj.grid.steps).map(|n| self.step_load(blocks, traj, map, n, linear)).collect()
    }
}
