use serde::Serialize;

use super::CoupledOperator;
use crate::error::{Error, Result};
use crate::linalg::{norm2, SaddleSolver};

/// Velocity/rigid state on the constrained space with its pressure.
#[derive(Debug, Clone)]
pub struct CoupledState {
    pub z: Vec<f64>,
    pub pressure: Vec<f64>,
    pub t: f64,
}

impl CoupledState {
    pub fn new(z: Vec<f64>, n_p: usize) -> Self {
        Self { z, pressure: vec![0.0; n_p], t: 0.0 }
    }

    pub fn xi<'a>(&'a self, op: &CoupledOperator) -> &'a [f64] {
        &self.z[op.n_fluid()..]
    }
}

/// Data for one step, all evaluated at the new time level.
#[derive(Debug, Clone, Default)]
pub struct StepData<'a> {
    /// z-space load from [`CoupledOperator::load`].
    pub load: Option<&'a [f64]>,
    /// Divergence lifting `h` (fluid dofs, zero rigid part) at the old and new time.
    pub h_prev: Option<&'a [f64]>,
    pub h_next: Option<&'a [f64]>,
}

/// Terms of the discrete energy balance of one implicit Euler step:
/// `E₁ − E₀ + ½‖z₁ − z₀‖² = −dt (viscous + slip) + dt·(load, z₁)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyBalance {
    pub energy_before: f64,
    pub energy_after: f64,
    pub viscous: f64,
    pub slip: f64,
    pub numerical_dissipation: f64,
    pub work: f64,
    pub dt: f64,
}

impl EnergyBalance {
    /// Mismatch of the exact discrete identity, relative to the dissipated energy.
    pub fn exact_defect(&self) -> f64 {
        let lhs = self.energy_after - self.energy_before + self.numerical_dissipation;
        let rhs = -self.dt * (self.viscous + self.slip) + self.work;
        (lhs - rhs).abs() / (self.dt * (self.viscous + self.slip)).max(1e-300)
    }

    /// Relative gap between the energy change and the continuous dissipation
    /// law `dE/dt = −(viscous + slip)`; first order in dt.
    pub fn identity_defect(&self) -> f64 {
        let lhs = self.energy_after - self.energy_before;
        let rhs = -self.dt * (self.viscous + self.slip) + self.work;
        (lhs - rhs).abs() / (self.dt * (self.viscous + self.slip)).max(1e-300)
    }
}

/// Implicit Euler for `𝕄_tot ż + 𝔸z − 𝔻ᵀp = F`, `𝔻z = 𝔻h + κm`, with the
/// factorization kept for a fixed step size.
pub struct LinearStepper {
    pub dt: f64,
    solver: SaddleSolver<f64>,
}

impl LinearStepper {
    pub fn new(op: &CoupledOperator, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Input(format!("time step must be positive, got {dt}")));
        }
        let b = &op.blocks;
        let solver = SaddleSolver::new(&[(1.0 / dt, &op.mass_total), (1.0, &b.stiffness)], &b.div, &b.mean, op.n_z())?;
        Ok(Self { dt, solver })
    }

    /// One step. With a lifting `h` the homogeneous-divergence unknown
    /// `v = z − h` is advanced with load `F − 𝕄(h₁ − h₀)/dt − 𝔸h₁` and `h₁` is added back.
    pub fn step(&self, op: &CoupledOperator, state: &CoupledState, data: &StepData) -> Result<CoupledState> {
        let n = op.n_z();
        let nf = op.n_fluid();
        let mut rhs = op.mass_total.mul_vec(&state.z);
        rhs.iter_mut().for_each(|r| *r /= self.dt);
        if let Some(load) = data.load {
            check_len(load.len(), n, "load")?;
            crate::linalg::axpy(&mut rhs, 1.0, load);
        }
        let lift = match (data.h_prev, data.h_next) {
            (None, None) => None,
            (Some(h0), Some(h1)) => {
                check_len(h0.len(), nf, "h_prev")?;
                check_len(h1.len(), nf, "h_next")?;
                if state.t == 0.0 && norm2(h0) > 1e-14 * (1.0 + norm2(h1)) {
                    return Err(Error::Input("divergence lifting must vanish at t = 0".into()));
                }
                let pad = |h: &[f64]| {
                    let mut v = h.to_vec();
                    v.resize(n, 0.0);
                    v
                };
                Some((pad(h0), pad(h1)))
            }
            _ => return Err(Error::Input("divergence lifting needs both time levels".into())),
        };
        if let Some((_, h1)) = &lift {
            // with v₀ = z₀ − h₀ the h₀ terms cancel: 𝕄z₀/dt + F − 𝕄h₁/dt − 𝔸h₁
            let mh = op.mass_total.mul_vec(h1);
            let ah = op.blocks.stiffness.mul_vec(h1);
            for i in 0..n {
                rhs[i] -= mh[i] / self.dt + ah[i];
            }
        }
        let sol = self.solver.solve(&rhs[..n], &vec![0.0; op.blocks.n_p()])?;
        let mut z = sol.u;
        if let Some((_, h1)) = &lift {
            crate::linalg::axpy(&mut z, 1.0, h1);
        }
        Ok(CoupledState { z, pressure: sol.p, t: state.t + self.dt })
    }

    /// Energy terms of the step `before → after` under `load`.
    pub fn balance(&self, op: &CoupledOperator, before: &CoupledState, after: &CoupledState, load: Option<&[f64]>) -> EnergyBalance {
        let dz = crate::linalg::sub(&after.z, &before.z);
        EnergyBalance {
            energy_before: op.energy(&before.z),
            energy_after: op.energy(&after.z),
            viscous: op.blocks.viscous_energy(&after.z),
            slip: op.blocks.slip_energy(&after.z),
            numerical_dissipation: op.energy(&dz),
            work: load.map_or(0.0, |f| self.dt * crate::linalg::dot(f, &after.z)),
            dt: self.dt,
        }
    }
}

fn check_len(got: usize, want: usize, what: &str) -> Result<()> {
    if got != want {
        return Err(Error::Input(format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

/// Single implicit Euler step with a fresh factorization.
pub fn step_linear(op: &CoupledOperator, state: &CoupledState, data: &StepData, dt: f64) -> Result<CoupledState> {
    LinearStepper::new(op, dt)?.step(op, state, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled::operator::tests::small_operator;
    use crate::linalg::{dot, sub};
    use crate::stokes::SteadyLifting;

    fn lifted_state(op: &CoupledOperator) -> CoupledState {
        let xi = [0.05, -0.02, 0.03, 0.04, 0.0, -0.05];
        let l = SteadyLifting::new(&op.blocks).unwrap().solve(&op.blocks, &xi).unwrap();
        CoupledState::new(l.z, op.blocks.n_p())
    }

    fn worst_defect(op: &CoupledOperator, dt: f64, steps: usize) -> (f64, f64) {
        let stepper = LinearStepper::new(op, dt).unwrap();
        let mut s = lifted_state(op);
        let (mut worst, mut exact) = (0.0f64, 0.0f64);
        for _ in 0..steps {
            let next = stepper.step(op, &s, &StepData::default()).unwrap();
            let b = stepper.balance(op, &s, &next, None);
            worst = worst.max(b.identity_defect());
            exact = exact.max(b.exact_defect());
            s = next;
        }
        (worst, exact)
    }

    #[test]
    fn energy_identity_is_first_order_and_exact_with_numerical_dissipation() {
        let op = small_operator();
        let (coarse, e1) = worst_defect(&op, 1e-3, 10);
        let (fine, e2) = worst_defect(&op, 2.5e-4, 10);
        assert!(e1 < 1e-8 && e2 < 1e-8);
        assert!(coarse < 0.02, "{coarse}");
        assert!(fine < 0.005, "{fine}");
        assert!(coarse / fine > 3.0, "{coarse} {fine}");
    }

    #[test]
    fn zero_data_stays_zero_and_zero_lifting_is_the_plain_step() {
        let op = small_operator();
        let stepper = LinearStepper::new(&op, 0.01).unwrap();
        let s0 = CoupledState::new(vec![0.0; op.n_z()], op.blocks.n_p());
        let s1 = stepper.step(&op, &s0, &StepData::default()).unwrap();
        assert!(s1.z.iter().all(|x| *x == 0.0));
        let s = lifted_state(&op);
        let h = vec![0.0; op.n_fluid()];
        let a = stepper.step(&op, &s, &StepData::default()).unwrap();
        let b = stepper
            .step(&op, &CoupledState { t: 0.5, ..s.clone() }, &StepData { load: None, h_prev: Some(&h), h_next: Some(&h) })
            .unwrap();
        assert!(crate::linalg::norm2(&sub(&a.z, &b.z)) < 1e-14);
    }

    #[test]
    fn lifting_sets_the_divergence_and_must_start_at_zero() {
        let op = small_operator();
        let stepper = LinearStepper::new(&op, 0.01).unwrap();
        let nf = op.n_fluid();
        let h1: Vec<f64> = (0..nf).map(|k| 1e-2 * (0.1 * k as f64).sin()).collect();
        let zero = vec![0.0; nf];
        let s0 = CoupledState::new(vec![0.0; op.n_z()], op.blocks.n_p());
        let s1 = stepper.step(&op, &s0, &StepData { load: None, h_prev: Some(&zero), h_next: Some(&h1) }).unwrap();
        let mut h1z = h1.clone();
        h1z.resize(op.n_z(), 0.0);
        let d = sub(&op.blocks.div.mul_vec(&s1.z), &op.blocks.div.mul_vec(&h1z));
        let m = &op.blocks.mean;
        let k = dot(&d, m) / dot(m, m);
        let r: f64 = d.iter().zip(m).map(|(a, b)| (a - k * b).abs()).fold(0.0, f64::max);
        assert!(r < 1e-13);
        let err = stepper.step(&op, &s0, &StepData { load: None, h_prev: Some(&h1), h_next: Some(&h1) });
        assert!(matches!(err, Err(Error::Input(_))));
    }

    /// Manufactured trajectory `z(t) = a(t) z_s`, `p(t) = a(t) p_s` with the
    /// load that makes it exact; the implicit Euler error halves with dt.
    #[test]
    fn manufactured_trajectory_converges_first_order() {
        let op = small_operator();
        let xi = [0.1, 0.0, -0.05, 0.0, 0.08, 0.0];
        let l = SteadyLifting::new(&op.blocks).unwrap().solve(&op.blocks, &xi).unwrap();
        let (zs, ps) = (l.z, l.pressure);
        let a = |t: f64| 1.0 + (2.0 * t).sin();
        let da = |t: f64| 2.0 * (2.0 * t).cos();
        let mz = op.mass_total.mul_vec(&zs);
        let res = sub(&op.blocks.stiffness.mul_vec(&zs), &op.blocks.div.tmul_vec(&ps));
        let load_at = |t: f64| -> Vec<f64> { mz.iter().zip(&res).map(|(m, r)| m * da(t) + r * a(t)).collect() };
        let run = |dt: f64| {
            let stepper = LinearStepper::new(&op, dt).unwrap();
            let mut s = CoupledState::new(zs.iter().map(|v| v * a(0.0)).collect(), op.blocks.n_p());
            let n = (0.5 / dt).round() as usize;
            for k in 1..=n {
                let f = load_at(k as f64 * dt);
                s = stepper.step(&op, &s, &StepData { load: Some(&f), ..Default::default() }).unwrap();
            }
            let exact: Vec<f64> = zs.iter().map(|v| v * a(0.5)).collect();
            op.energy(&sub(&s.z, &exact)).sqrt()
        };
        let (e1, e2) = (run(0.02), run(0.01));
        let order = (e1 / e2).log2();
        assert!((order - 1.0).abs() < 0.15, "{e1} {e2} {order}");
    }
}
