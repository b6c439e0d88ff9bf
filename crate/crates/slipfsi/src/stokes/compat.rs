use nalgebra::Vector3;
use serde::Serialize;

use super::dofs::VertexKind;
use super::StokesBlocks;
use crate::error::Result;
use crate::geometry::{Mesh, Tag};
use crate::linalg::SaddleSolver;

/// Outcome of the initial-data compatibility checks; violations are
/// reported, never raised.
#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityReport {
    /// max_p |(∫ q_p div u)| / ∫ q_p over mean-zero-corrected divergence.
    pub divergence: f64,
    pub outer_trace: f64,
    pub outer_violations: Vec<usize>,
    pub normal_trace: f64,
    pub normal_violations: Vec<usize>,
    /// Weak tangential traction residual at solid vertices (exponent > 3 only).
    pub slip_trace_residual: Option<f64>,
    pub tol: f64,
    pub passed: bool,
}

fn facets_touching(mesh: &Mesh, tag: Tag, bad: &[bool]) -> Vec<usize> {
    mesh.facets
        .iter()
        .enumerate()
        .filter(|(_, f)| f.tag == tag && f.nodes.iter().any(|&v| bad[v]))
        .map(|(k, _)| k)
        .collect()
}

/// Checks div u₀ = 0, u₀ = 0 on the outer wall, u₀·n = (l₀ + ω₀×y)·n on the
/// solid and, when `exponent > 3`, the slip condition in weak form:
/// the tangential rows of 𝔸z − 𝔻ᵀp with p fitted on the remaining rows.
pub fn check_compatibility(
    blocks: &StokesBlocks,
    mesh: &Mesh,
    u0: &[f64],
    l0: Vector3<f64>,
    omega0: Vector3<f64>,
    exponent: f64,
    tol: f64,
) -> Result<CompatibilityReport> {
    let dofs = &blocks.dofs;
    let nv = dofs.n_vertices;
    let scale = u0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(l0.norm()).max(omega0.norm()).max(1.0);
    let xi = [l0.x, l0.y, l0.z, omega0.x, omega0.y, omega0.z];

    let d = blocks.div_full.mul_vec(u0);
    let msum: f64 = blocks.mean.iter().sum();
    let kappa = d.iter().sum::<f64>() / msum;
    let divergence = d
        .iter()
        .zip(&blocks.mean)
        .map(|(a, m)| (a - kappa * m).abs() / m)
        .fold(0.0, f64::max)
        / scale;

    let mut bad_outer = vec![false; nv];
    let mut bad_normal = vec![false; nv];
    let (mut outer_trace, mut normal_trace) = (0.0f64, 0.0f64);
    for v in 0..nv {
        let uv = Vector3::new(u0[3 * v], u0[3 * v + 1], u0[3 * v + 2]);
        match dofs.kinds[v] {
            VertexKind::Outer => {
                outer_trace = outer_trace.max(uv.norm() / scale);
                bad_outer[v] = uv.norm() > tol * scale;
            }
            VertexKind::Solid { frame } => {
                let e = (uv - dofs.rigid_velocity(v, &xi)).dot(&frame[2]).abs();
                normal_trace = normal_trace.max(e / scale);
                bad_normal[v] = e > tol * scale;
            }
            VertexKind::Interior => {}
        }
    }

    let slip_trace_residual = if exponent > 3.0 {
        Some(weak_slip_residual(blocks, &dofs.from_full(u0, &xi))? / scale)
    } else {
        None
    };
    let passed = divergence <= tol
        && outer_trace <= tol
        && normal_trace <= tol
        && slip_trace_residual.is_none_or(|r| r <= tol);
    Ok(CompatibilityReport {
        divergence,
        outer_trace,
        outer_violations: facets_touching(mesh, Tag::Outer, &bad_outer),
        normal_trace,
        normal_violations: facets_touching(mesh, Tag::Solid, &bad_normal),
        slip_trace_residual,
        tol,
        passed,
    })
}

/// max over solid vertices of |(𝔸z − 𝔻ᵀp)_τ| / wᵢ with p the pressure of the
/// mass-weighted Helmholtz fit of 𝔸z on the fluid dofs. Vanishes at steady states.
fn weak_slip_residual(blocks: &StokesBlocks, z: &[f64]) -> Result<f64> {
    let dofs = &blocks.dofs;
    let nf = dofs.n_fluid;
    let az = blocks.stiffness.mul_vec(z);
    let rhs: Vec<f64> = az[..nf].iter().map(|v| -v).collect();
    let solver = SaddleSolver::new(&[(1.0, &blocks.mass)], &blocks.div, &blocks.mean, nf)?;
    let p = solver.solve(&rhs, &vec![0.0; blocks.n_p()])?.p;
    let dtp = blocks.div.tmul_vec(&p);
    let mut worst = 0.0f64;
    for v in 0..dofs.n_vertices {
        if let VertexKind::Solid { .. } = dofs.kinds[v] {
            let w = blocks.slip_weights[v];
            for k in 0..2 {
                let i = dofs.first[v] + k;
                worst = worst.max((az[i] - dtp[i]).abs() / w);
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_reference_geometry;
    use crate::stokes::{assemble_stokes, SteadyLifting};

    #[test]
    fn zero_data_passes_and_lifting_passes_all_checks() {
        let d = make_reference_geometry(1.0, 4.0, 0).unwrap();
        let b = assemble_stokes(&d, 1.0).unwrap();
        let u0 = vec![0.0; b.dofs.n_full()];
        let r = check_compatibility(&b, &d.mesh, &u0, Vector3::zeros(), Vector3::zeros(), 4.0, 1e-8).unwrap();
        assert!(r.passed);
        let xi = [0.2, -0.1, 0.05, 0.1, 0.3, -0.2];
        let lifted = SteadyLifting::new(&b).unwrap().solve(&b, &xi).unwrap();
        let u = b.dofs.to_full(&lifted.z);
        let l0 = Vector3::new(xi[0], xi[1], xi[2]);
        let w0 = Vector3::new(xi[3], xi[4], xi[5]);
        let r = check_compatibility(&b, &d.mesh, &u, l0, w0, 4.0, 1e-8).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn nonzero_outer_trace_is_located() {
        let d = make_reference_geometry(1.0, 4.0, 0).unwrap();
        let b = assemble_stokes(&d, 1.0).unwrap();
        let mut u0 = vec![0.0; b.dofs.n_full()];
        let v = (0..d.mesh.n_vertices()).find(|&v| d.is_outer(v)).unwrap();
        u0[3 * v] = 0.1;
        let r = check_compatibility(&b, &d.mesh, &u0, Vector3::zeros(), Vector3::zeros(), 2.0, 1e-8).unwrap();
        assert!(!r.passed);
        assert!(!r.outer_violations.is_empty());
        for &k in &r.outer_violations {
            assert!(d.mesh.facets[k].nodes.contains(&v));
        }
    }
}
