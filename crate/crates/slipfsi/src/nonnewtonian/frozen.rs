use nalgebra::Matrix3;
use rayon::prelude::*;

use super::coefficients::coefficients;
use super::ViscosityModel;
use crate::coupled::CoupledOperator;
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::linalg::Csr;
use crate::picard::{HorizonData, LinearHorizon, TimeGrid, Trajectory};
use crate::stokes::fem::{self, QuadCache};
use crate::stokes::StokesBlocks;

/// Quadrature degree of the frozen stiffness; exact for constant
/// coefficients on the P1-bubble space.
pub const FROZEN_DEGREE: usize = 7;

/// Reference strain `D*` with `μ* = μ(|D*|²)` and `μ*′ = μ′(|D*|²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceStrain {
    pub strain: Matrix3<f64>,
    pub mu: f64,
    pub mu_prime: f64,
}

impl ReferenceStrain {
    pub fn new(model: &ViscosityModel, strain: Matrix3<f64>) -> Result<Self> {
        let (mu, mu_prime) = model.eval(strain.norm_squared())?;
        Ok(Self { strain, mu, mu_prime })
    }

    /// `μ* Dw + 2μ*′ (D*:Dw) D*` for `grad[(l, k)] = ∂ₖw_l`.
    pub fn apply(&self, grad: &Matrix3<f64>) -> Matrix3<f64> {
        let dw = (grad + grad.transpose()) * 0.5;
        dw * self.mu + self.strain * (2.0 * self.mu_prime * self.strain.dot(&dw))
    }
}

/// Reference strains at every quadrature point of a cache, per time level.
#[derive(Debug, Clone)]
pub struct FrozenCoefficients {
    /// `levels[n][t][qi]`.
    levels: Vec<Vec<Vec<ReferenceStrain>>>,
}

impl FrozenCoefficients {
    /// Samples `D*` from full nodal velocities, one per level `0..=steps`.
    pub fn new(model: &ViscosityModel, cache: &QuadCache, reference_full: &[Vec<f64>]) -> Result<Self> {
        let levels = reference_full
            .iter()
            .map(|u| strains(model, cache, u))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { levels })
    }

    pub fn at(&self, n: usize, tet: usize, qi: usize) -> &ReferenceStrain {
        &self.levels[n][tet][qi]
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }
}

fn strains(model: &ViscosityModel, cache: &QuadCache, u: &[f64]) -> Result<Vec<Vec<ReferenceStrain>>> {
    (0..cache.tets.len())
        .into_par_iter()
        .map(|t| {
            let loc = cache.local_values(t, u);
            cache.points[t]
                .iter()
                .map(|q| {
                    let (_, g) = fem::eval_velocity(q, &loc);
                    ReferenceStrain::new(model, (g + g.transpose()) * 0.5)
                })
                .collect()
        })
        .collect()
}

/// Weak form of `w ↦ μ* Dw + 2μ*′(D*:Dw)D*` on the full nodal space, with
/// `D*` taken from the full nodal velocity `reference`.
pub fn tangent_matrix(model: &ViscosityModel, cache: &QuadCache, reference: &[f64]) -> Result<Csr> {
    let table = strains(model, cache, reference)?;
    let coef = table
        .iter()
        .map(|row| {
            row.iter()
                .map(|r| Ok(coefficients(model, &r.strain)?.tensor))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fem::assemble_matrix(cache, |t, qi, _| (Some(coef[t][qi]), None)))
}

/// Newtonian reference `u*` (rest viscosity μ₀/2) from `z0` without loads.
pub fn newtonian_reference(op: &CoupledOperator, grid: TimeGrid, z0: &[f64]) -> Result<Trajectory> {
    LinearHorizon::newtonian(op, grid)?.solve(z0, &HorizonData::default())
}

/// Linearization of the generalized stress along the Newtonian reference:
/// per-level stiffness `A*ⁿ + slip` and the reference strains at the load
/// quadrature points.
#[derive(Debug, Clone)]
pub struct FrozenOperator {
    pub model: ViscosityModel,
    pub reference: Trajectory,
    pub stiffness: Vec<Csr>,
    pub coefficients: FrozenCoefficients,
}

impl FrozenOperator {
    /// `load_cache` is the quadrature used for the nonlinear loads.
    pub fn new(op: &CoupledOperator, mesh: &Mesh, model: ViscosityModel, grid: TimeGrid, z0: &[f64], load_cache: &QuadCache) -> Result<Self> {
        model.validate()?;
        let b = &op.blocks;
        if (b.viscosity - model.rest_viscosity()).abs() > 1e-12 * b.viscosity {
            return Err(Error::Input(format!(
                "linear operator viscosity {} does not match mu0/2 = {}",
                b.viscosity,
                model.rest_viscosity()
            )));
        }
        let reference = newtonian_reference(op, grid, z0)?;
        let full: Vec<Vec<f64>> = reference.z.iter().map(|z| b.dofs.to_full(z)).collect();
        let cache = QuadCache::new(mesh, FROZEN_DEGREE)?;
        let stiffness = full[1..]
            .iter()
            .map(|u| frozen_stiffness(b, &model, &cache, u))
            .collect::<Result<Vec<_>>>()?;
        let coefficients = FrozenCoefficients::new(&model, load_cache, &full)?;
        Ok(Self {
            model,
            reference,
            stiffness,
            coefficients,
        })
    }

    pub fn horizon(&self, op: &CoupledOperator) -> Result<LinearHorizon> {
        LinearHorizon::with_stiffness(op, self.reference.grid, self.stiffness.clone())
    }
}

/// `A*` on z for the reference `u_full`, plus the slip form.
pub fn frozen_stiffness(blocks: &StokesBlocks, model: &ViscosityModel, cache: &QuadCache, u_full: &[f64]) -> Result<Csr> {
    let a = tangent_matrix(model, cache, u_full)?.ptap(&blocks.dofs.prolongation);
    Ok(Csr::combine(&[(1.0, &a), (1.0, &blocks.slip)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_reference_geometry;

    #[test]
    fn newtonian_tangent_is_the_viscous_block() {
        let d = make_reference_geometry(1.0, 4.0, 0).unwrap();
        let b = crate::stokes::assemble_stokes(&d, 0.35).unwrap();
        let cache = QuadCache::new(&d.mesh, FROZEN_DEGREE).unwrap();
        let u: Vec<f64> = (0..cache.n_full()).map(|k| (k as f64 * 0.37).sin()).collect();
        let a = frozen_stiffness(&b, &ViscosityModel::newtonian(0.7), &cache, &u).unwrap();
        let diff = Csr::combine(&[(1.0, &a), (-1.0, &b.stiffness)]);
        assert!(diff.max_abs() < 1e-12 * b.stiffness.max_abs());
        // d = 2 in the Carreau family is Newtonian
        let c = frozen_stiffness(&b, &ViscosityModel::carreau(0.7, 2.0), &cache, &u).unwrap();
        assert!(Csr::combine(&[(1.0, &c), (-1.0, &b.stiffness)]).max_abs() < 1e-12 * b.stiffness.max_abs());
    }

    #[test]
    fn frozen_stiffness_is_symmetric_and_positive() {
        let d = make_reference_geometry(1.0, 4.0, 0).unwrap();
        let b = crate::stokes::assemble_stokes(&d, 0.5).unwrap();
        let cache = QuadCache::new(&d.mesh, FROZEN_DEGREE).unwrap();
        let u: Vec<f64> = (0..cache.n_full()).map(|k| 0.5 * (k as f64 * 0.11).cos()).collect();
        for dd in [1.5, 3.0] {
            let a = frozen_stiffness(&b, &ViscosityModel::carreau(1.0, dd), &cache, &u).unwrap();
            assert!(a.max_asymmetry() < 1e-12 * a.max_abs());
            let z: Vec<f64> = (0..b.n_z()).map(|k| (k as f64 * 0.7).sin()).collect();
            assert!(a.bilinear(&z, &z) > 0.0);
        }
    }

    #[test]
    fn reference_strain_apply_matches_coefficients() {
        let m = ViscosityModel::carreau(1.2, 1.5);
        let d0 = Matrix3::new(0.2, 0.1, 0.0, 0.1, -0.3, 0.4, 0.0, 0.4, 0.1);
        let g = Matrix3::new(0.5, -0.1, 0.3, 0.2, 0.0, -0.4, 0.1, 0.6, -0.5);
        let r = ReferenceStrain::new(&m, d0).unwrap();
        let c = coefficients(&m, &d0).unwrap();
        assert!((r.apply(&g) - c.apply(&g)).norm() < 1e-15);
    }
}
