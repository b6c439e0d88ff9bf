use nalgebra::{Matrix6, Vector6};

use super::added_mass::{build_added_mass, AddedMass};
use crate::error::{Error, Result};
use crate::geometry::RigidBody;
use crate::linalg::{dot, Csr, SaddleSolver, Triplets};
use crate::stokes::StokesBlocks;

/// Linear fluid–structure operator on the constrained space.
///
/// A state is `z = v + Eξ` with `v` divergence-free and rigid part zero,
/// `E` the potential modes of the added mass. The rigid equation reads
/// `λKξ = C₁v + C₂ξ + data` with `K = 𝕀 + M`.
pub struct CoupledOperator {
    pub blocks: StokesBlocks,
    pub body: RigidBody,
    pub momentum: Matrix6<f64>,
    pub added_mass: AddedMass,
    pub k: Matrix6<f64>,
    pub k_inv: Matrix6<f64>,
    pub k_condition: f64,
    /// Rows of `C₁`: `−𝔸E_j` restricted to the fluid dofs.
    pub c1_rows: Vec<Vec<f64>>,
    pub c2: Matrix6<f64>,
    /// 𝕄 plus the body momentum on the rigid block.
    pub mass_total: Csr,
    mass_saddle: SaddleSolver<f64>,
}

impl CoupledOperator {
    pub fn new(blocks: StokesBlocks, body: RigidBody) -> Result<Self> {
        let added_mass = build_added_mass(&blocks)?;
        let momentum = body.momentum_matrix();
        let k = momentum + added_mass.matrix;
        let k_inv = k
            .try_inverse()
            .ok_or_else(|| Error::Invariant("K = 𝕀 + M is singular".into()))?;
        let ev = k.symmetric_eigenvalues();
        let k_condition = ev.max() / ev.min();
        let nf = blocks.n_fluid();
        let modes = &added_mass.modes;
        let a_modes: Vec<Vec<f64>> = modes.iter().map(|e| blocks.stiffness.mul_vec(e)).collect();
        let c1_rows = a_modes.iter().map(|ae| ae[..nf].iter().map(|v| -v).collect()).collect();
        let mut c2 = Matrix6::zeros();
        for i in 0..6 {
            for j in 0..6 {
                c2[(i, j)] = -dot(&modes[i], &a_modes[j]);
            }
        }
        let c2 = (c2 + c2.transpose()) * 0.5;
        let mut t = Triplets::new(blocks.n_z(), blocks.n_z());
        for i in 0..6 {
            for j in 0..6 {
                t.push(nf + i, nf + j, momentum[(i, j)]);
            }
        }
        let mass_total = Csr::combine(&[(1.0, &blocks.mass), (1.0, &t.to_csr())]);
        let mass_saddle = SaddleSolver::new(&[(1.0, &blocks.mass)], &blocks.div, &blocks.mean, nf)?;
        Ok(Self {
            blocks,
            body,
            momentum,
            added_mass,
            k,
            k_inv,
            k_condition,
            c1_rows,
            c2,
            mass_total,
            mass_saddle,
        })
    }

    pub fn n_z(&self) -> usize {
        self.blocks.n_z()
    }

    pub fn n_fluid(&self) -> usize {
        self.blocks.n_fluid()
    }

    pub fn c1(&self, v: &[f64]) -> Vector6<f64> {
        Vector6::from_fn(|j, _| dot(&self.c1_rows[j], &v[..self.n_fluid()]))
    }

    /// `Eξ` as a z vector.
    pub fn lift_rigid(&self, xi: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.n_z()];
        for (e, &x) in self.added_mass.modes.iter().zip(xi) {
            crate::linalg::axpy(&mut z, x, e);
        }
        z
    }

    /// Splits `z` into `(v, ξ)` with `z = v + Eξ`; `v` carries zero rigid part.
    pub fn split(&self, z: &[f64]) -> (Vec<f64>, [f64; 6]) {
        let xi: [f64; 6] = z[self.n_fluid()..].try_into().expect("six rigid dofs");
        let v = crate::linalg::sub(z, &self.lift_rigid(&xi));
        (v, xi)
    }

    /// Block action `(v, ξ) ↦ (P(−𝔸(v + Eξ)), K⁻¹(C₁v + C₂ξ))`, the fluid part
    /// obtained from the 𝕄-projection onto divergence-free fields.
    pub fn apply_block(&self, v: &[f64], xi: &[f64; 6]) -> Result<(Vec<f64>, [f64; 6])> {
        let nf = self.n_fluid();
        let mut z = v.to_vec();
        for (a, b) in z.iter_mut().zip(self.lift_rigid(xi)) {
            *a += b;
        }
        let az = self.blocks.stiffness.mul_vec(&z);
        let f: Vec<f64> = az[..nf].iter().map(|x| -x).collect();
        let mut w = self.mass_saddle.solve(&f, &vec![0.0; self.blocks.n_p()])?.u;
        w.extend_from_slice(&[0.0; 6]);
        let r = self.k_inv * (self.c1(v) + self.c2 * Vector6::from_column_slice(xi));
        Ok((w, r.into()))
    }

    /// Zero-mean pressure from the fluid momentum rows: the mass-weighted
    /// gradient part of `F − 𝔸z − 𝕄Eξ̇`. `xi_rate` is the rigid acceleration
    /// (λξ for a resolvent state).
    pub fn reconstruct_pressure(&self, z: &[f64], xi_rate: &[f64], load: &[f64]) -> Result<Vec<f64>> {
        let nf = self.n_fluid();
        let az = self.blocks.stiffness.mul_vec(z);
        let me = self.blocks.mass.mul_vec(&self.lift_rigid(xi_rate));
        let f: Vec<f64> = (0..nf).map(|i| load[i] - az[i] - me[i]).collect();
        Ok(self.mass_saddle.solve(&f, &vec![0.0; self.blocks.n_p()])?.p)
    }

    /// Energy `½ z·𝕄_tot z`: fluid kinetic plus body kinetic energy.
    pub fn energy(&self, z: &[f64]) -> f64 {
        0.5 * self.mass_total.bilinear(z, z)
    }

    /// Fluid load `F_j = ∫ f·φ_j` of a full nodal body-force field, with
    /// rigid-row data `g` added on the last six entries.
    pub fn load(&self, f_full: Option<&[f64]>, g: &[f64; 6]) -> Vec<f64> {
        let mut out = match f_full {
            Some(f) => self.blocks.dofs.prolongation.tmul_vec(&self.blocks.mass_full.mul_vec(f)),
            None => vec![0.0; self.n_z()],
        };
        let nf = self.n_fluid();
        for j in 0..6 {
            out[nf + j] += g[j];
        }
        out
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::geometry::{make_reference_geometry, Surface};
    use crate::stokes::assemble_stokes;

    pub(crate) fn small_operator() -> CoupledOperator {
        let d = make_reference_geometry(1.0, 4.0, 0).unwrap();
        let b = assemble_stokes(&d, 1.0).unwrap();
        CoupledOperator::new(b, RigidBody::uniform(1.0, &Surface::sphere(1.0)).unwrap()).unwrap()
    }

    #[test]
    fn k_is_invertible_and_c2_is_negative_semidefinite() {
        let op = small_operator();
        assert!(op.k.determinant() > 0.0);
        assert!((op.k * op.k_inv - Matrix6::identity()).norm() < 1e-12);
        assert!(op.c2.symmetric_eigenvalues().max() < 1e-10);
        assert!(op.k_condition >= 1.0);
    }

    #[test]
    fn split_round_trips() {
        let op = small_operator();
        let z: Vec<f64> = (0..op.n_z()).map(|k| (0.3 * k as f64).cos()).collect();
        let (v, xi) = op.split(&z);
        assert!(v[op.n_fluid()..].iter().all(|x| *x == 0.0));
        let back = crate::linalg::add(&v, &op.lift_rigid(&xi));
        assert!(crate::linalg::norm2(&crate::linalg::sub(&back, &z)) < 1e-12);
    }

    #[test]
    fn block_rows_act_separately_on_fluid_and_rigid_parts() {
        let op = small_operator();
        let mut v: Vec<f64> = (0..op.n_z()).map(|k| (0.7 * k as f64).sin()).collect();
        v[op.n_fluid()..].fill(0.0);
        let (_, r_fluid) = op.apply_block(&v, &[0.0; 6]).unwrap();
        let want = op.k_inv * op.c1(&v);
        assert!((Vector6::from(r_fluid) - want).norm() < 1e-12 * (1.0 + want.norm()));
        let xi = [0.1, -0.2, 0.3, 0.0, 0.1, 0.2];
        let zero = vec![0.0; op.n_z()];
        let (_, r_rigid) = op.apply_block(&zero, &xi).unwrap();
        let want = op.k_inv * op.c2 * Vector6::from(xi);
        assert!((Vector6::from(r_rigid) - want).norm() < 1e-12 * (1.0 + want.norm()));
    }

    #[test]
    fn zero_state_reconstructs_zero_pressure() {
        let op = small_operator();
        let z = vec![0.0; op.n_z()];
        let p = op.reconstruct_pressure(&z, &[0.0; 6], &z).unwrap();
        assert!(p.iter().all(|x| x.abs() < 1e-14));
    }
}
