use nalgebra::Vector3;

use crate::stokes::{StokesBlocks, VertexKind};

/// `α(1 − |u|) u_τ`: the part of the wall law `α|u|u_τ` that differs from the
/// linear friction `α u_τ`, moved to the right-hand side.
pub fn nonlinear_slip_rhs(alpha: f64, u: &Vector3<f64>, normal: &Vector3<f64>) -> Vector3<f64> {
    let tangential = u - normal * normal.dot(u);
    tangential * (alpha * (1.0 - u.norm()))
}

/// Tangential data `g = α(1−|u|)u_τ − α(1−|u_S|)u_Sτ` at a solid vertex, in
/// the vertex tangent frame.
#[derive(Debug, Clone, Copy)]
pub struct SlipDatum {
    pub vertex: usize,
    pub weight: f64,
    pub alpha: f64,
    pub fluid: Vector3<f64>,
    pub solid: Vector3<f64>,
    pub tangents: [Vector3<f64>; 2],
    pub normal: Vector3<f64>,
}

impl SlipDatum {
    pub fn data(&self) -> Vector3<f64> {
        nonlinear_slip_rhs(self.alpha, &self.fluid, &self.normal) - nonlinear_slip_rhs(self.alpha, &self.solid, &self.normal)
    }

    /// `α|u|u_τ − α|u_S|u_Sτ` along each tangent.
    pub fn wall_law(&self) -> [f64; 2] {
        let f = self.fluid * (self.alpha * self.fluid.norm()) - self.solid * (self.alpha * self.solid.norm());
        [f.dot(&self.tangents[0]), f.dot(&self.tangents[1])]
    }
}

/// Fluid and rigid velocities at every solid vertex of a state `z`.
pub fn slip_data(blocks: &StokesBlocks, z: &[f64]) -> Vec<SlipDatum> {
    let dofs = &blocks.dofs;
    let nf = dofs.n_fluid;
    let xi = &z[nf..];
    let mut out = Vec::new();
    for v in 0..dofs.n_vertices {
        let VertexKind::Solid { frame } = dofs.kinds[v] else {
            continue;
        };
        let solid = dofs.rigid_velocity(v, xi);
        let normal = frame[2];
        // normal component is carried by the rigid motion
        let fluid = normal * normal.dot(&solid) + frame[0] * z[dofs.first[v]] + frame[1] * z[dofs.first[v] + 1];
        out.push(SlipDatum {
            vertex: v,
            weight: blocks.slip_weights[v],
            alpha: blocks.alpha[v],
            fluid,
            solid,
            tangents: [frame[0], frame[1]],
            normal,
        });
    }
    out
}

/// z-space load `Σ_v w_v g_v·(v − v_S)_τ` with the coefficient pattern of
/// the lumped slip form.
pub fn slip_load(blocks: &StokesBlocks, data: &[SlipDatum]) -> Vec<f64> {
    let dofs = &blocks.dofs;
    let nf = dofs.n_fluid;
    let mut load = vec![0.0; dofs.n_z()];
    for d in data {
        let g = d.data();
        for (k, tk) in d.tangents.iter().enumerate() {
            let val = d.weight * g.dot(tk);
            let arm = dofs.arms[d.vertex].cross(tk);
            load[dofs.first[d.vertex] + k] += val;
            for i in 0..3 {
                load[nf + i] -= tk[i] * val;
                load[nf + 3 + i] -= arm[i] * val;
            }
        }
    }
    load
}

/// Load of the nonlinear wall law for the state `z`.
pub fn nonlinear_slip_load(blocks: &StokesBlocks, z: &[f64]) -> Vec<f64> {
    slip_load(blocks, &slip_data(blocks, z))
}

/// Wall-law residual `[𝕋n]_τ + α|u|u_τ − α|u_S|u_Sτ` at solid vertices in the
/// lumped boundary norm. `momentum_row` is the discrete fluid momentum balance
/// `𝕄ż + Vz − 𝔻ᵀp − F` (viscous part only, no friction), whose tangential
/// rows divided by `w_v` give the traction.
pub fn wall_law_residual(blocks: &StokesBlocks, z: &[f64], momentum_row: &[f64]) -> f64 {
    let mut sum = 0.0;
    for d in slip_data(blocks, z) {
        if d.weight == 0.0 {
            continue;
        }
        let law = d.wall_law();
        for (k, l) in law.iter().enumerate() {
            let r = momentum_row[blocks.dofs.first[d.vertex] + k] / d.weight + l;
            sum += d.weight * r * r;
        }
    }
    sum.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_reference_geometry;
    use crate::stokes::assemble_stokes;

    #[test]
    fn rhs_is_tangential_and_vanishes_on_the_unit_sphere() {
        let n = Vector3::new(0.0, 0.0, 1.0);
        let u = Vector3::new(0.3, -0.4, 0.7);
        let r = nonlinear_slip_rhs(2.0, &u, &n);
        assert_eq!(r.z, 0.0);
        assert!((r.x - 2.0 * (1.0 - u.norm()) * 0.3).abs() < 1e-15);
        assert_eq!(nonlinear_slip_rhs(1.0, &Vector3::new(0.6, 0.8, 0.0), &n).norm(), 0.0);
    }

    #[test]
    fn linear_friction_plus_data_is_the_wall_law() {
        // α(u − u_S)_τ − g = α|u|u_τ − α|u_S|u_Sτ
        let d = make_reference_geometry(1.0, 4.0, 0).unwrap();
        let b = assemble_stokes(&d, 0.5).unwrap();
        let z: Vec<f64> = (0..b.n_z()).map(|k| 0.3 * (k as f64 * 0.41).sin()).collect();
        let full = b.dofs.to_full(&z);
        for s in slip_data(&b, &z) {
            let v = s.vertex;
            assert!((Vector3::new(full[3 * v], full[3 * v + 1], full[3 * v + 2]) - s.fluid).norm() < 1e-14);
            let lin = (s.fluid - s.solid) * s.alpha - s.data();
            let law = s.wall_law();
            for k in 0..2 {
                assert!((lin.dot(&s.tangents[k]) - law[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn load_matches_the_slip_form_pattern() {
        // a load built from data g = α(u − u_S) reproduces the slip matrix
        let d = make_reference_geometry(1.0, 4.0, 0).unwrap();
        let b = assemble_stokes(&d, 0.5).unwrap();
        let z: Vec<f64> = (0..b.n_z()).map(|k| 0.3 * (k as f64 * 0.23).cos()).collect();
        let nf = b.n_fluid();
        let mut load = vec![0.0; b.n_z()];
        for s in slip_data(&b, &z) {
            let g = (s.fluid - s.solid) * s.alpha;
            for (k, tk) in s.tangents.iter().enumerate() {
                let val = s.weight * g.dot(tk);
                let arm = b.dofs.arms[s.vertex].cross(tk);
                load[b.dofs.first[s.vertex] + k] += val;
                for i in 0..3 {
                    load[nf + i] -= tk[i] * val;
                    load[nf + 3 + i] -= arm[i] * val;
                }
            }
        }
        let direct = b.slip.mul_vec(&z);
        let err = crate::linalg::norm2(&crate::linalg::sub(&load, &direct));
        assert!(err < 1e-12 * crate::linalg::norm2(&direct), "{err:e} {:e}", crate::linalg::norm2(&direct));
    }
}
