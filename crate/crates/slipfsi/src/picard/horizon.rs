use std::sync::OnceLock;

use nalgebra::{Matrix6, Vector3};
use serde::Serialize;

use crate::coupled::CoupledOperator;
use crate::error::{Error, Result};
use crate::linalg::{axpy, Csr, SaddleSolver};

/// Uniform grid `tₙ = n·dt`, `n = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// Grid covering `[0, horizon]` with the step rounded to fit exactly.
    pub fn new(horizon: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && horizon > 0.0 && dt.is_finite() && horizon.is_finite()) {
            return Err(Error::Input(format!("need positive horizon and step, got T = {horizon}, dt = {dt}")));
        }
        let steps = (horizon / dt).round().max(1.0) as usize;
        Ok(Self { dt: horizon / steps as f64, steps })
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|n| self.t(n)).collect()
    }

    pub fn horizon(&self) -> f64 {
        self.t(self.steps)
    }

    pub fn truncated(&self, steps: usize) -> Self {
        Self { dt: self.dt, steps }
    }
}

/// States `zₙ` (fluid dofs then ξ = (l̃, ω̃)) and pressures on a time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub n_fluid: usize,
    pub z: Vec<Vec<f64>>,
    pub pressure: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn zeros(grid: TimeGrid, n_z: usize, n_fluid: usize, n_p: usize) -> Self {
        Self {
            grid,
            n_fluid,
            z: vec![vec![0.0; n_z]; grid.steps + 1],
            pressure: vec![vec![0.0; n_p]; grid.steps + 1],
        }
    }

    pub fn xi(&self, n: usize) -> [f64; 6] {
        self.z[n][self.n_fluid..].try_into().expect("six rigid dofs")
    }

    pub fn l(&self, n: usize) -> Vector3<f64> {
        Vector3::from_column_slice(&self.z[n][self.n_fluid..self.n_fluid + 3])
    }

    pub fn omega(&self, n: usize) -> Vector3<f64> {
        Vector3::from_column_slice(&self.z[n][self.n_fluid + 3..self.n_fluid + 6])
    }

    pub fn l_history(&self) -> Vec<Vector3<f64>> {
        (0..self.z.len()).map(|n| self.l(n)).collect()
    }

    pub fn omega_history(&self) -> Vec<Vector3<f64>> {
        (0..self.z.len()).map(|n| self.omega(n)).collect()
    }

    /// `self − other` on the common grid.
    pub fn difference(&self, other: &Trajectory) -> Trajectory {
        let zip = |a: &[Vec<f64>], b: &[Vec<f64>]| a.iter().zip(b).map(|(x, y)| crate::linalg::sub(x, y)).collect();
        Trajectory {
            grid: self.grid,
            n_fluid: self.n_fluid,
            z: zip(&self.z, &other.z),
            pressure: zip(&self.pressure, &other.pressure),
        }
    }

    pub fn scaled(&self, s: f64) -> Trajectory {
        let sc = |a: &[Vec<f64>]| a.iter().map(|x| crate::linalg::scale(x, s)).collect();
        Trajectory {
            grid: self.grid,
            n_fluid: self.n_fluid,
            z: sc(&self.z),
            pressure: sc(&self.pressure),
        }
    }

    /// First `steps` intervals.
    pub fn truncated(&self, steps: usize) -> Trajectory {
        Trajectory {
            grid: self.grid.truncated(steps),
            n_fluid: self.n_fluid,
            z: self.z[..=steps].to_vec(),
            pressure: self.pressure[..=steps].to_vec(),
        }
    }

    pub fn max_abs_difference(&self, other: &Trajectory) -> f64 {
        self.z
            .iter()
            .zip(&other.z)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Right-hand sides of the linear horizon problem at levels `1..=steps`
/// (entry `n − 1` belongs to level `n`); `None` means zero.
#[derive(Debug, Clone, Default)]
pub struct HorizonData {
    /// z-space loads.
    pub loads: Option<Vec<Vec<f64>>>,
    /// Divergence data `g` in `𝔻z = g + κm`.
    pub divergence: Option<Vec<Vec<f64>>>,
}

impl HorizonData {
    fn load(&self, n: usize) -> Option<&[f64]> {
        self.loads.as_ref().map(|l| l[n - 1].as_slice())
    }

    fn divergence(&self, n: usize) -> Option<&[f64]> {
        self.divergence.as_ref().map(|d| d[n - 1].as_slice())
    }
}

/// Implicit Euler over a whole horizon for
/// `𝕄_tot ż + Sₙ z − 𝔻ᵀp = F`, `𝔻z = g + κm`, with the stiffness either fixed
/// (Newtonian) or given per level (frozen coefficients).
pub struct LinearHorizon {
    pub grid: TimeGrid,
    pub n_z: usize,
    pub n_fluid: usize,
    pub n_p: usize,
    pub mass_total: Csr,
    pub mass: Csr,
    pub div: Csr,
    pub mean: Vec<f64>,
    pub momentum: Matrix6<f64>,
    pub added_mass: Matrix6<f64>,
    pub k_inv: Matrix6<f64>,
    stiffness: Vec<Csr>,
    solvers: Vec<SaddleSolver<f64>>,
    fluid_solvers: OnceLock<Vec<SaddleSolver<f64>>>,
}

impl LinearHorizon {
    /// Constant stiffness `𝔸` of the coupled operator.
    pub fn newtonian(op: &CoupledOperator, grid: TimeGrid) -> Result<Self> {
        Self::with_stiffness(op, grid, vec![op.blocks.stiffness.clone()])
    }

    /// `stiffness` holds one matrix (used at every level) or one per level `1..=steps`.
    pub fn with_stiffness(op: &CoupledOperator, grid: TimeGrid, stiffness: Vec<Csr>) -> Result<Self> {
        if stiffness.len() != 1 && stiffness.len() != grid.steps {
            return Err(Error::Input(format!(
                "expected 1 or {} stiffness matrices, got {}",
                grid.steps,
                stiffness.len()
            )));
        }
        let b = &op.blocks;
        let solvers = stiffness
            .iter()
            .map(|s| SaddleSolver::new(&[(1.0 / grid.dt, &op.mass_total), (1.0, s)], &b.div, &b.mean, op.n_z()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid,
            n_z: op.n_z(),
            n_fluid: op.n_fluid(),
            n_p: b.n_p(),
            mass_total: op.mass_total.clone(),
            mass: b.mass.clone(),
            div: b.div.clone(),
            mean: b.mean.clone(),
            momentum: op.momentum,
            added_mass: op.added_mass.matrix,
            k_inv: op.k_inv,
            stiffness,
            solvers,
            fluid_solvers: OnceLock::new(),
        })
    }

    /// Stiffness at level `n ≥ 1`.
    pub fn stiffness(&self, n: usize) -> &Csr {
        &self.stiffness[if self.stiffness.len() == 1 { 0 } else { n - 1 }]
    }

    fn solver(&self, n: usize) -> &SaddleSolver<f64> {
        &self.solvers[if self.solvers.len() == 1 { 0 } else { n - 1 }]
    }

    fn check(&self, z0: &[f64], data: &HorizonData) -> Result<()> {
        if z0.len() != self.n_z {
            return Err(Error::Input(format!("initial state has length {}, expected {}", z0.len(), self.n_z)));
        }
        let bad = |v: &Option<Vec<Vec<f64>>>, len: usize| {
            v.as_ref().is_some_and(|v| v.len() != self.grid.steps || v.iter().any(|x| x.len() != len))
        };
        if bad(&data.loads, self.n_z) || bad(&data.divergence, self.n_p) {
            return Err(Error::Input("horizon data do not match the grid".into()));
        }
        Ok(())
    }

    /// Monolithic solve from `z0`.
    pub fn solve(&self, z0: &[f64], data: &HorizonData) -> Result<Trajectory> {
        self.check(z0, data)?;
        let mut traj = Trajectory::zeros(self.grid, self.n_z, self.n_fluid, self.n_p);
        traj.z[0] = z0.to_vec();
        let zero_g = vec![0.0; self.n_p];
        for n in 1..=self.grid.steps {
            let mut rhs = self.mass_total.mul_vec(&traj.z[n - 1]);
            rhs.iter_mut().for_each(|r| *r /= self.grid.dt);
            if let Some(f) = data.load(n) {
                axpy(&mut rhs, 1.0, f);
            }
            let sol = self.solver(n).solve(&rhs, data.divergence(n).unwrap_or(&zero_g))?;
            traj.z[n] = sol.u;
            traj.pressure[n] = sol.p;
        }
        Ok(traj)
    }

    fn fluid_solver(&self, n: usize) -> Result<&SaddleSolver<f64>> {
        if self.fluid_solvers.get().is_none() {
            let built = self
                .stiffness
                .iter()
                .map(|s| SaddleSolver::new(&[(1.0 / self.grid.dt, &self.mass_total), (1.0, s)], &self.div, &self.mean, self.n_fluid))
                .collect::<Result<Vec<_>>>()?;
            let _ = self.fluid_solvers.set(built);
        }
        let all = self.fluid_solvers.get().expect("initialized above");
        Ok(&all[if all.len() == 1 { 0 } else { n - 1 }])
    }

    /// Fluid step at level `n` with the rigid velocities `xi` prescribed;
    /// returns the new state and pressure.
    pub fn fluid_step(&self, n: usize, z_prev: &[f64], xi: &[f64; 6], data: &HorizonData) -> Result<(Vec<f64>, Vec<f64>)> {
        let nf = self.n_fluid;
        let mut rigid = vec![0.0; self.n_z];
        rigid[nf..].copy_from_slice(xi);
        let dt = self.grid.dt;
        let mut rhs = self.mass_total.mul_vec(z_prev);
        let m_rigid = self.mass_total.mul_vec(&rigid);
        let s_rigid = self.stiffness(n).mul_vec(&rigid);
        for i in 0..self.n_z {
            rhs[i] = (rhs[i] - m_rigid[i]) / dt - s_rigid[i];
        }
        if let Some(f) = data.load(n) {
            axpy(&mut rhs, 1.0, f);
        }
        let mut g = self.div.mul_vec(&rigid);
        g.iter_mut().for_each(|v| *v = -*v);
        if let Some(d) = data.divergence(n) {
            axpy(&mut g, 1.0, d);
        }
        let sol = self.fluid_solver(n)?.solve(&rhs[..nf], &g)?;
        let mut z = sol.u;
        z.extend_from_slice(xi);
        Ok((z, sol.p))
    }

    /// Fluid reaction on the rigid rows at level `n`:
    /// `[𝕄(zₙ − zₙ₋₁)/dt + Sₙzₙ − 𝔻ᵀpₙ]_ξ` with the fluid mass only.
    pub fn fluid_reaction(&self, n: usize, z: &[f64], z_prev: &[f64], p: &[f64]) -> [f64; 6] {
        let nf = self.n_fluid;
        let dz: Vec<f64> = z.iter().zip(z_prev).map(|(a, b)| (a - b) / self.grid.dt).collect();
        let m = self.mass.mul_vec(&dz);
        let s = self.stiffness(n).mul_vec(z);
        let d = self.div.tmul_vec(p);
        std::array::from_fn(|j| m[nf + j] + s[nf + j] - d[nf + j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled::operator::tests::small_operator;
    use crate::coupled::{CoupledState, LinearStepper, StepData};
    use crate::stokes::SteadyLifting;

    #[test]
    fn grid_rounds_to_the_horizon() {
        let g = TimeGrid::new(1.0, 0.3).unwrap();
        assert_eq!(g.steps, 3);
        assert!((g.horizon() - 1.0).abs() < 1e-15);
        assert!(TimeGrid::new(1.0, 0.0).is_err());
    }

    #[test]
    fn horizon_solve_matches_the_stepper() {
        let op = small_operator();
        let z0 = SteadyLifting::new(&op.blocks).unwrap().solve(&op.blocks, &[0.1, 0.0, -0.2, 0.05, 0.1, 0.0]).unwrap().z;
        let grid = TimeGrid::new(0.05, 0.01).unwrap();
        let traj = LinearHorizon::newtonian(&op, grid).unwrap().solve(&z0, &HorizonData::default()).unwrap();
        let stepper = LinearStepper::new(&op, grid.dt).unwrap();
        let mut s = CoupledState::new(z0, op.blocks.n_p());
        for n in 1..=grid.steps {
            s = stepper.step(&op, &s, &StepData::default()).unwrap();
            let err = s.z.iter().zip(&traj.z[n]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-13, "{err:e}");
        }
    }

    #[test]
    fn fluid_step_with_exact_rigid_data_reproduces_the_monolithic_step() {
        let op = small_operator();
        let z0 = SteadyLifting::new(&op.blocks).unwrap().solve(&op.blocks, &[0.0, 0.3, 0.0, 0.1, 0.0, 0.0]).unwrap().z;
        let grid = TimeGrid::new(0.02, 0.01).unwrap();
        let h = LinearHorizon::newtonian(&op, grid).unwrap();
        let data = HorizonData::default();
        let mono = h.solve(&z0, &data).unwrap();
        let (z1, p1) = h.fluid_step(1, &z0, &mono.xi(1), &data).unwrap();
        let err = z1.iter().zip(&mono.z[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err:e}");
        // rigid rows: 𝕀(ξ₁ − ξ₀)/dt + reaction = 0
        let r = h.fluid_reaction(1, &z1, &z0, &p1);
        let dxi: Vec<f64> = (0..6).map(|j| (mono.xi(1)[j] - mono.xi(0)[j]) / grid.dt).collect();
        let inertia = h.momentum * nalgebra::Vector6::from_column_slice(&dxi);
        for j in 0..6 {
            assert!((inertia[j] + r[j]).abs() < 1e-9 * (1.0 + inertia[j].abs()), "{j}");
        }
    }
}
