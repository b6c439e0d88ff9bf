use nalgebra::{Matrix6, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{DomainConfig, Tag};
use crate::linalg::SaddleSolver;
use crate::stokes::{NeumannSolver, StokesBlocks};

/// The six potential-flow modes `E_j` (z vectors, rigid part `e_j`) that are
/// 𝕄-orthogonal to the divergence-free fields with zero rigid part, and the
/// added-mass matrix `M_ij = 𝕄(E_i, E_j)`.
#[derive(Debug, Clone)]
pub struct AddedMass {
    pub modes: Vec<Vec<f64>>,
    pub matrix: Matrix6<f64>,
}

/// Solves the mass saddle `𝕄 w − 𝔻ᵀφ = −𝕄R_j`, `𝔻w = −𝔻R_j + κm` on the fluid
/// dofs for each rigid mode `R_j`.
pub fn build_added_mass(blocks: &StokesBlocks) -> Result<AddedMass> {
    let nf = blocks.n_fluid();
    let solver = SaddleSolver::new(&[(1.0, &blocks.mass)], &blocks.div, &blocks.mean, nf)?;
    let mut modes = Vec::with_capacity(6);
    for j in 0..6 {
        let mut e = [0.0; 6];
        e[j] = 1.0;
        let rigid = blocks.dofs.rigid_only(&e);
        let f: Vec<f64> = blocks.mass.mul_vec(&rigid)[..nf].iter().map(|v| -v).collect();
        let g: Vec<f64> = blocks.div.mul_vec(&rigid).iter().map(|v| -v).collect();
        let mut z = solver.solve(&f, &g)?.u;
        z.extend_from_slice(&e);
        modes.push(z);
    }
    let mut matrix = Matrix6::zeros();
    for i in 0..6 {
        let mi = blocks.mass.mul_vec(&modes[i]);
        for j in 0..6 {
            matrix[(i, j)] = crate::linalg::dot(&mi, &modes[j]);
        }
    }
    matrix = (matrix + matrix.transpose()) * 0.5;
    Ok(AddedMass { modes, matrix })
}

/// Independent P1 evaluation through harmonic Neumann potentials:
/// `∂φ_j/∂n = R_j·n` on the solid, `M_ij = ∫∇φ_i·∇φ_j`.
pub fn neumann_added_mass(domain: &DomainConfig) -> Result<Matrix6<f64>> {
    let mesh = &domain.mesh;
    let center = domain.body_center();
    let solver = NeumannSolver::new(mesh)?;
    let mut phis = Vec::with_capacity(6);
    for j in 0..6 {
        let flux: Vec<f64> = mesh
            .facets
            .iter()
            .map(|f| {
                if f.tag != Tag::Solid {
                    return 0.0;
                }
                let av = mesh.facet_area_vector(f);
                let n = av / av.norm();
                let c = f.nodes.iter().map(|&v| mesh.vertices[v]).sum::<Vector3<f64>>() / 3.0 - center;
                let mode = if j < 3 {
                    Vector3::ith(j, 1.0)
                } else {
                    Vector3::ith(j - 3, 1.0).cross(&c)
                };
                mode.dot(&n)
            })
            .collect();
        phis.push(solver.solve(&flux, true)?);
    }
    let mut m = Matrix6::zeros();
    for i in 0..6 {
        let li = solver.laplacian.mul_vec(&phis[i]);
        for j in 0..6 {
            m[(i, j)] = crate::linalg::dot(&li, &phis[j]);
        }
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("non-finite added mass".into()));
    }
    Ok((m + m.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_reference_geometry;
    use crate::stokes::assemble_stokes;

    #[test]
    fn symmetric_semidefinite_and_rotation_free_for_centered_sphere() {
        let d = make_reference_geometry(1.0, 4.0, 0).unwrap();
        let b = assemble_stokes(&d, 1.0).unwrap();
        let am = build_added_mass(&b).unwrap();
        let m = am.matrix;
        let ev = m.symmetric_eigenvalues();
        assert!(ev.min() > -1e-10, "{ev}");
        for i in 0..6 {
            for j in 3..6 {
                assert!(m[(i, j)].abs() < 1e-8);
            }
        }
        // modes are divergence-free up to the mean multiplier
        for e in &am.modes {
            let de = b.div.mul_vec(e);
            let ms: f64 = b.mean.iter().map(|x| x * x).sum();
            let k = crate::linalg::dot(&de, &b.mean) / ms;
            let r: f64 = de.iter().zip(&b.mean).map(|(a, m)| (a - k * m).abs()).fold(0.0, f64::max);
            assert!(r < 1e-12);
        }
    }

    #[test]
    fn translation_block_approaches_the_bounded_sphere_value() {
        // ⅔πa³ in an unbounded fluid; a concentric wall at R = 4a raises it
        // by (1 + 2q)/(1 − q) with q = (a/R)³. Both discretizations converge from below.
        let q = 1.0f64 / 64.0;
        let bounded = 2.0 / 3.0 * std::f64::consts::PI * (1.0 + 2.0 * q) / (1.0 - q);
        let mut neumann = Vec::new();
        for r in 1..3 {
            let d = make_reference_geometry(1.0, 4.0, r).unwrap();
            neumann.push(neumann_added_mass(&d).unwrap()[(0, 0)]);
            if r == 2 {
                let m = build_added_mass(&assemble_stokes(&d, 1.0).unwrap()).unwrap().matrix;
                for i in 0..3 {
                    assert!((m[(i, i)] / bounded - 1.0).abs() < 0.15, "{}", m[(i, i)]);
                }
            }
        }
        assert!(neumann[0] < neumann[1] && neumann[1] < bounded, "{neumann:?}");
    }
}
