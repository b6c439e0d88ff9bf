//! Constrained velocity space.
//!
//! The unknown vector is `z = (fluid dofs, ξ)` with `ξ = (l̃, ω̃)` the six
//! rigid velocities last. Outer-wall vertices carry no dofs; a solid-boundary
//! vertex carries two tangential dofs in a local frame `(t₁, t₂, n)` and its
//! normal component is slaved to the rigid motion, `u·n = (l + ω×y)·n`;
//! interior vertices and bubbles carry three Cartesian dofs.

use nalgebra::{Matrix3, Vector3};

use crate::geometry::DomainConfig;
use crate::linalg::{Csr, Triplets};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexKind {
    Outer,
    /// Tangent frame `t₁, t₂` and unit normal out of the fluid.
    Solid { frame: [Vector3<f64>; 3] },
    Interior,
}

#[derive(Debug, Clone)]
pub struct DofMap {
    pub n_vertices: usize,
    pub n_tets: usize,
    pub kinds: Vec<VertexKind>,
    /// First z index of each vertex (`usize::MAX` on the outer wall).
    pub first: Vec<usize>,
    pub bubble_start: usize,
    pub n_fluid: usize,
    /// Torque arms `y = x − center` at each vertex.
    pub arms: Vec<Vector3<f64>>,
    pub center: Vector3<f64>,
    /// Full nodal velocity as a linear function of `z`.
    pub prolongation: Csr,
}

/// Orthonormal completion of a unit vector.
pub fn tangent_frame(n: &Vector3<f64>) -> [Vector3<f64>; 3] {
    let pick = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let t1 = (pick - n * n.dot(&pick)).normalize();
    let t2 = n.cross(&t1);
    [t1, t2, *n]
}

impl DofMap {
    pub fn new(domain: &DomainConfig) -> Self {
        let nv = domain.mesh.n_vertices();
        let nt = domain.mesh.tets.len();
        let center = domain.body_center();
        let mut kinds = Vec::with_capacity(nv);
        let mut first = Vec::with_capacity(nv);
        let mut next = 0;
        for v in 0..nv {
            if domain.is_outer(v) {
                kinds.push(VertexKind::Outer);
                first.push(usize::MAX);
            } else if domain.is_solid(v) {
                kinds.push(VertexKind::Solid {
                    frame: tangent_frame(&domain.vertex_normals[v]),
                });
                first.push(next);
                next += 2;
            } else {
                kinds.push(VertexKind::Interior);
                first.push(next);
                next += 3;
            }
        }
        let bubble_start = next;
        let n_fluid = next + 3 * nt;
        let arms: Vec<Vector3<f64>> = domain.mesh.vertices.iter().map(|p| p - center).collect();
        let n_full = 3 * (nv + nt);
        let mut p = Triplets::with_capacity(n_full, n_fluid + 6, 3 * n_full);
        for v in 0..nv {
            match kinds[v] {
                VertexKind::Outer => {}
                VertexKind::Interior => {
                    for i in 0..3 {
                        p.push(3 * v + i, first[v] + i, 1.0);
                    }
                }
                VertexKind::Solid { frame } => {
                    let n = frame[2];
                    let yxn = arms[v].cross(&n);
                    for i in 0..3 {
                        p.push(3 * v + i, first[v], frame[0][i]);
                        p.push(3 * v + i, first[v] + 1, frame[1][i]);
                        for k in 0..3 {
                            p.push(3 * v + i, n_fluid + k, n[i] * n[k]);
                            p.push(3 * v + i, n_fluid + 3 + k, n[i] * yxn[k]);
                        }
                    }
                }
            }
        }
        for t in 0..nt {
            for i in 0..3 {
                p.push(3 * (nv + t) + i, bubble_start + 3 * t + i, 1.0);
            }
        }
        Self {
            n_vertices: nv,
            n_tets: nt,
            kinds,
            first,
            bubble_start,
            n_fluid,
            arms,
            center,
            prolongation: p.to_csr(),
        }
    }

    pub fn n_z(&self) -> usize {
        self.n_fluid + 6
    }

    pub fn n_full(&self) -> usize {
        3 * (self.n_vertices + self.n_tets)
    }

    /// Full nodal velocity of `z`.
    pub fn to_full(&self, z: &[f64]) -> Vec<f64> {
        self.prolongation.mul_vec(z)
    }

    /// Pulls a full nodal vector back to `z` given the rigid part `xi`:
    /// tangential components at solid vertices, Cartesian elsewhere; the
    /// normal component at solid vertices and outer values are discarded.
    pub fn from_full(&self, u: &[f64], xi: &[f64; 6]) -> Vec<f64> {
        let mut z = vec![0.0; self.n_z()];
        for v in 0..self.n_vertices {
            let uv = Vector3::new(u[3 * v], u[3 * v + 1], u[3 * v + 2]);
            match self.kinds[v] {
                VertexKind::Outer => {}
                VertexKind::Interior => z[self.first[v]..self.first[v] + 3].copy_from_slice(uv.as_slice()),
                VertexKind::Solid { frame } => {
                    z[self.first[v]] = frame[0].dot(&uv);
                    z[self.first[v] + 1] = frame[1].dot(&uv);
                }
            }
        }
        let nv = self.n_vertices;
        for t in 0..self.n_tets {
            for i in 0..3 {
                z[self.bubble_start + 3 * t + i] = u[3 * (nv + t) + i];
            }
        }
        z[self.n_fluid..].copy_from_slice(xi);
        z
    }

    /// Rigid velocity `l + ω × y` at vertex `v`.
    pub fn rigid_velocity(&self, v: usize, xi: &[f64]) -> Vector3<f64> {
        let l = Vector3::new(xi[0], xi[1], xi[2]);
        let w = Vector3::new(xi[3], xi[4], xi[5]);
        l + w.cross(&self.arms[v])
    }

    /// z vector of the pure rigid mode `ξ` with zero fluid dofs.
    pub fn rigid_only(&self, xi: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.n_z()];
        z[self.n_fluid..].copy_from_slice(&xi[..6]);
        z
    }

    pub fn xi<'a>(&self, z: &'a [f64]) -> &'a [f64] {
        &z[self.n_fluid..]
    }

    /// Indices of the tangential dofs at solid vertices.
    pub fn solid_tangential(&self) -> Vec<usize> {
        (0..self.n_vertices)
            .filter(|&v| matches!(self.kinds[v], VertexKind::Solid { .. }))
            .flat_map(|v| [self.first[v], self.first[v] + 1])
            .collect()
    }

    /// Frame matrix with columns `t₁, t₂, n` at a solid vertex.
    pub fn frame_matrix(&self, v: usize) -> Option<Matrix3<f64>> {
        match self.kinds[v] {
            VertexKind::Solid { frame } => Some(Matrix3::from_columns(&frame)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_reference_geometry;

    #[test]
    fn frames_are_orthonormal() {
        for n in [Vector3::x(), Vector3::new(0.3, -0.4, 0.866).normalize(), -Vector3::z()] {
            let f = Matrix3::from_columns(&tangent_frame(&n));
            assert!((f.transpose() * f - Matrix3::identity()).norm() < 1e-14);
            assert!((f.determinant() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn prolongation_reproduces_rigid_normal_trace_and_round_trips() {
        let d = make_reference_geometry(1.0, 4.0, 0).unwrap();
        let dofs = DofMap::new(&d);
        let xi = [0.3, -0.2, 0.1, 0.5, 0.4, -0.7];
        let mut z: Vec<f64> = (0..dofs.n_z()).map(|k| (k as f64 * 0.37).sin()).collect();
        z[dofs.n_fluid..].copy_from_slice(&xi);
        let u = dofs.to_full(&z);
        for v in 0..dofs.n_vertices {
            let uv = Vector3::new(u[3 * v], u[3 * v + 1], u[3 * v + 2]);
            match dofs.kinds[v] {
                VertexKind::Outer => assert_eq!(uv, Vector3::zeros()),
                VertexKind::Solid { frame } => {
                    let want = dofs.rigid_velocity(v, &xi).dot(&frame[2]);
                    assert!((uv.dot(&frame[2]) - want).abs() < 1e-14);
                }
                VertexKind::Interior => {}
            }
        }
        let back = dofs.from_full(&u, &xi);
        for (a, b) in back.iter().zip(&z) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
