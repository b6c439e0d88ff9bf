use nalgebra::{Matrix3, Vector3};

use super::dofs::{DofMap, VertexKind};
use super::fem::{self, QuadCache};
use crate::error::{Error, Result};
use crate::geometry::{DomainConfig, Tag};
use crate::linalg::{Csr, Triplets};

/// Quadrature degree for the linear forms (exact for bubble × bubble).
pub const LINEAR_DEGREE: usize = 9;

/// Assembled linear fluid blocks on the constrained space `z = (fluid, ξ)`.
#[derive(Debug, Clone)]
pub struct StokesBlocks {
    pub dofs: DofMap,
    pub cache: QuadCache,
    /// Newtonian viscosity ν in σ = 2ν Du − π I.
    pub viscosity: f64,
    /// Friction coefficient per vertex.
    pub alpha: Vec<f64>,
    /// Lumped boundary weight (one third of adjacent solid facet areas).
    pub slip_weights: Vec<f64>,
    pub mass_full: Csr,
    pub viscous_full: Csr,
    pub div_full: Csr,
    /// L² velocity mass on z (rigid rows only through the solid normal trace).
    pub mass: Csr,
    /// 2ν ∫ Du:Dv.
    pub viscous: Csr,
    /// Σᵢ wᵢ αᵢ |(u − u_S)_τ|² at solid vertices.
    pub slip: Csr,
    /// viscous + slip.
    pub stiffness: Csr,
    /// (𝔻z)_p = ∫ φ_p div u.
    pub div: Csr,
    /// ∫ φ_p, the pressure gauge vector.
    pub mean: Vec<f64>,
}

impl StokesBlocks {
    pub fn n_z(&self) -> usize {
        self.dofs.n_z()
    }

    pub fn n_fluid(&self) -> usize {
        self.dofs.n_fluid
    }

    pub fn n_p(&self) -> usize {
        self.dofs.n_vertices
    }

    pub fn viscous_energy(&self, z: &[f64]) -> f64 {
        self.viscous.bilinear(z, z)
    }

    pub fn slip_energy(&self, z: &[f64]) -> f64 {
        self.slip.bilinear(z, z)
    }

    /// ½ ∫ |u|².
    pub fn kinetic_energy(&self, z: &[f64]) -> f64 {
        0.5 * self.mass.bilinear(z, z)
    }
}

/// Lumped slip form for given friction values.
pub fn slip_matrix(dofs: &DofMap, alpha: &[f64], weights: &[f64]) -> Csr {
    let n = dofs.n_z();
    let nf = dofs.n_fluid;
    let mut t = Triplets::new(n, n);
    for v in 0..dofs.n_vertices {
        let VertexKind::Solid { frame } = dofs.kinds[v] else {
            continue;
        };
        let s = alpha[v] * weights[v];
        if s == 0.0 {
            continue;
        }
        for (k, tk) in frame.iter().take(2).enumerate() {
            let arm = dofs.arms[v].cross(tk);
            let mut c: Vec<(usize, f64)> = vec![(dofs.first[v] + k, 1.0)];
            for i in 0..3 {
                c.push((nf + i, -tk[i]));
                c.push((nf + 3 + i, -arm[i]));
            }
            for &(a, ca) in &c {
                for &(b, cb) in &c {
                    t.push(a, b, s * ca * cb);
                }
            }
        }
    }
    t.to_csr()
}

/// Lumped solid-boundary weights: a third of every adjacent facet area.
pub fn solid_vertex_weights(domain: &DomainConfig) -> Vec<f64> {
    let mut w = vec![0.0; domain.mesh.n_vertices()];
    for (_, f) in domain.mesh.facets_with(Tag::Solid) {
        let a = domain.mesh.facet_area_vector(f).norm() / 3.0;
        for &v in &f.nodes {
            w[v] += a;
        }
    }
    w
}

/// Stokes blocks with Dirichlet data on the outer wall and Navier slip on the
/// solid; `viscosity` is ν in σ = 2ν Du − π I.
pub fn assemble_stokes(domain: &DomainConfig, viscosity: f64) -> Result<StokesBlocks> {
    if !(viscosity > 0.0) {
        return Err(Error::Input(format!("viscosity must be positive, got {viscosity}")));
    }
    if domain.alpha_field.iter().any(|a| !(*a >= 0.0)) {
        return Err(Error::Input("friction coefficient must be nonnegative".into()));
    }
    let cache = QuadCache::new(&domain.mesh, LINEAR_DEGREE)?;
    let dofs = DofMap::new(domain);
    let id = Matrix3::identity();
    let tensor = fem::viscous_tensor(viscosity);
    let mass_full = fem::assemble_matrix(&cache, |_, _, _| (None, Some(id)));
    let viscous_full = fem::assemble_matrix(&cache, |_, _, _| (Some(tensor), None));
    let div_full = fem::divergence_matrix(&cache);
    let p = &dofs.prolongation;
    let mass = mass_full.ptap(p);
    let viscous = viscous_full.ptap(p);
    let slip_weights = solid_vertex_weights(domain);
    let slip = slip_matrix(&dofs, &domain.alpha_field, &slip_weights);
    let stiffness = Csr::combine(&[(1.0, &viscous), (1.0, &slip)]);
    let div = div_full.matmul(p);
    let mean = fem::p1_mean_weights(&cache);
    Ok(StokesBlocks {
        dofs,
        cache,
        viscosity,
        alpha: domain.alpha_field.clone(),
        slip_weights,
        mass_full,
        viscous_full,
        div_full,
        mass,
        viscous,
        slip,
        stiffness,
        div,
        mean,
    })
}

/// Velocity and gradient of a full nodal field at every quadrature point,
/// by tet then point.
pub fn sample_velocity(cache: &QuadCache, u: &[f64]) -> Vec<Vec<(Vector3<f64>, Matrix3<f64>)>> {
    (0..cache.tets.len())
        .map(|t| {
            let loc = cache.local_values(t, u);
            cache.points[t].iter().map(|q| fem::eval_velocity(q, &loc)).collect()
        })
        .collect()
}
