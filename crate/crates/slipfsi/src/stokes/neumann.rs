use super::fem::{self, QuadCache};
use crate::error::{Error, Result};
use crate::geometry::{Mesh, Tag};
use crate::linalg::{Csr, SparseLu};
use faer::sparse::Triplet;

/// P1 Neumann problem −Δφ = 0, ∂φ/∂n = g (per facet), ∫φ = 0.
pub struct NeumannSolver {
    pub laplacian: Csr,
    pub mean: Vec<f64>,
    lu: SparseLu<f64>,
    facet_areas: Vec<f64>,
    facets: Vec<([usize; 3], Tag)>,
}

impl NeumannSolver {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let cache = QuadCache::new(mesh, 1)?;
        let (laplacian, _) = fem::p1_matrices(&cache);
        let mean = fem::p1_mean_weights(&cache);
        let n = mesh.n_vertices();
        let mut trip: Vec<_> = laplacian.iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        for (v, &m) in mean.iter().enumerate() {
            trip.push(Triplet::new(v, n, m));
            trip.push(Triplet::new(n, v, m));
        }
        let lu = SparseLu::from_triplets(n + 1, trip)?;
        Ok(Self {
            laplacian,
            mean,
            lu,
            facet_areas: mesh.facets.iter().map(|f| mesh.facet_area_vector(f).norm()).collect(),
            facets: mesh.facets.iter().map(|f| (f.nodes, f.tag)).collect(),
        })
    }

    /// Zero-mean harmonic field with flux `flux[k]` on facet `k` (outward
    /// from the fluid). With `restrict_to_solid` only SOLID facets contribute.
    pub fn solve(&self, flux: &[f64], restrict_to_solid: bool) -> Result<Vec<f64>> {
        assert_eq!(flux.len(), self.facets.len());
        let n = self.mean.len();
        let mut rhs = vec![0.0; n + 1];
        let (mut total, mut scale) = (0.0, 0.0);
        for (k, ((nodes, tag), g)) in self.facets.iter().zip(flux).enumerate() {
            if restrict_to_solid && *tag != Tag::Solid {
                continue;
            }
            let a = self.facet_areas[k];
            total += a * g;
            scale += a * g.abs();
            for &v in nodes {
                rhs[v] += a * g / 3.0;
            }
        }
        let tol = 1e-10 * scale.max(1.0);
        if total.abs() > tol {
            return Err(Error::NeumannCompatibility { flux: total, tol });
        }
        let mut x = self.lu.solve(&rhs)?;
        x.truncate(n);
        Ok(x)
    }

    /// Discrete total flux ∫ ∂φ/∂n recovered from the weak Laplacian.
    pub fn boundary_flux(&self, phi: &[f64]) -> f64 {
        self.laplacian.mul_vec(phi).iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_reference_geometry;

    #[test]
    fn zero_flux_gives_zero_and_incompatible_flux_errors() {
        let d = make_reference_geometry(1.0, 4.0, 0).unwrap();
        let s = NeumannSolver::new(&d.mesh).unwrap();
        let phi = s.solve(&vec![0.0; d.mesh.facets.len()], false).unwrap();
        assert!(phi.iter().all(|v| v.abs() < 1e-14));
        let ones = vec![1.0; d.mesh.facets.len()];
        assert!(matches!(s.solve(&ones, true), Err(Error::NeumannCompatibility { .. })));
    }

    #[test]
    fn translational_potentials_give_symmetric_gram_matrix() {
        let d = make_reference_geometry(1.0, 4.0, 1).unwrap();
        let s = NeumannSolver::new(&d.mesh).unwrap();
        let mut phis = Vec::new();
        for k in 0..3 {
            let flux: Vec<f64> = d
                .mesh
                .facets
                .iter()
                .map(|f| {
                    let n = d.mesh.facet_area_vector(f).normalize();
                    n[k]
                })
                .collect();
            let phi = s.solve(&flux, true).unwrap();
            assert!(s.boundary_flux(&phi).abs() < 1e-10);
            phis.push(phi);
        }
        let mut m = nalgebra::Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] = s.laplacian.bilinear(&phis[i], &phis[j]);
            }
        }
        assert!((m - m.transpose()).norm() < 1e-12 * m.norm());
        assert!(m.symmetric_eigenvalues().iter().all(|&e| e > 0.0));
    }
}
