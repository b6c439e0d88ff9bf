use std::collections::HashMap;

use nalgebra::{Matrix3, Matrix6, Vector3};
use serde::{Deserialize, Serialize};

use super::mesh::icosphere;
use crate::error::{Error, Result};
use crate::linalg::polar_rotation;

/// Closed surface bounding a region.
#[derive(Debug, Clone)]
pub enum Surface {
    Sphere { center: Vector3<f64>, radius: f64 },
    /// Triangulation with normals pointing out of the enclosed region.
    Polyhedral {
        vertices: Vec<Vector3<f64>>,
        triangles: Vec<[usize; 3]>,
    },
}

impl Surface {
    pub fn sphere(radius: f64) -> Self {
        Surface::Sphere {
            center: Vector3::zeros(),
            radius,
        }
    }

    pub fn as_sphere(&self) -> Option<(Vector3<f64>, f64)> {
        match self {
            Surface::Sphere { center, radius } => Some((*center, *radius)),
            Surface::Polyhedral { .. } => None,
        }
    }

    /// Triangulated version; spheres are tessellated with the given
    /// icosphere subdivision level.
    pub fn triangulate(&self, subdivisions: usize) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
        match self {
            Surface::Sphere { center, radius } => {
                let (v, t) = icosphere(subdivisions);
                (v.into_iter().map(|p| center + p * *radius).collect(), t)
            }
            Surface::Polyhedral { vertices, triangles } => (vertices.clone(), triangles.clone()),
        }
    }

    /// Volume centroid of the enclosed region.
    pub fn centroid(&self) -> Vector3<f64> {
        match self {
            Surface::Sphere { center, .. } => *center,
            Surface::Polyhedral { vertices, triangles } => volume_moments(vertices, triangles).1,
        }
    }

    /// Distance from `p` to the surface if `p` lies inside, else 0.
    pub fn inner_distance(&self, p: &Vector3<f64>) -> f64 {
        match self {
            Surface::Sphere { center, radius } => (radius - (p - center).norm()).max(0.0),
            Surface::Polyhedral { vertices, triangles } => {
                if winding_number(vertices, triangles, p) < 0.5 {
                    return 0.0;
                }
                triangles
                    .iter()
                    .map(|t| point_triangle_distance(p, &vertices[t[0]], &vertices[t[1]], &vertices[t[2]]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Edge-manifold check: every directed edge is matched by its reverse exactly once.
pub fn is_closed(triangles: &[[usize; 3]]) -> bool {
    let mut edges: HashMap<(usize, usize), i32> = HashMap::new();
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *edges.entry((a, b)).or_insert(0) += 1;
        }
    }
    !triangles.is_empty() && edges.iter().all(|(&(a, b), &n)| n == 1 && edges.get(&(b, a)) == Some(&1))
}

fn winding_number(v: &[Vector3<f64>], tris: &[[usize; 3]], p: &Vector3<f64>) -> f64 {
    let mut omega = 0.0;
    for t in tris {
        let (a, b, c) = (v[t[0]] - p, v[t[1]] - p, v[t[2]] - p);
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let num = a.dot(&b.cross(&c));
        let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
        omega += 2.0 * num.atan2(den);
    }
    omega / (4.0 * std::f64::consts::PI)
}

/// Euclidean distance from `p` to triangle `abc`.
pub fn point_triangle_distance(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (p - (a + ab * v)).norm();
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (p - (a + ac * w)).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + (c - b) * w)).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (p - (a + ab * v + ac * w)).norm()
}

/// Volume, centroid and second moment ∫ x xᵀ (about the origin) of the
/// region enclosed by an outward triangulation.
fn volume_moments(v: &[Vector3<f64>], tris: &[[usize; 3]]) -> (f64, Vector3<f64>, Matrix3<f64>) {
    let mut vol = 0.0;
    let mut first = Vector3::zeros();
    let mut second = Matrix3::zeros();
    let o = Vector3::zeros();
    for t in tris {
        let p = [o, v[t[0]], v[t[1]], v[t[2]]];
        let tv = p[1].dot(&p[2].cross(&p[3])) / 6.0;
        let s: Vector3<f64> = p.iter().sum();
        vol += tv;
        first += s * (tv / 4.0);
        let mut pp = s * s.transpose();
        for q in &p {
            pp += q * q.transpose();
        }
        second += pp * (tv / 20.0);
    }
    (vol, first / vol, second)
}

/// Inertia tensor J with J a·b = ∫ρ (a×y)·(b×y), y measured from the centroid,
/// by exact quadrature over the tetrahedra fanned from the origin.
pub fn inertia_tensor(density: f64, shape: &Surface) -> Result<Matrix3<f64>> {
    Ok(mass_properties(density, shape)?.2)
}

fn mass_properties(density: f64, shape: &Surface) -> Result<(f64, Vector3<f64>, Matrix3<f64>)> {
    if !(density > 0.0) {
        return Err(Error::Input(format!("density must be positive, got {density}")));
    }
    let (v, t) = shape.triangulate(5);
    if !is_closed(&t) {
        return Err(Error::InvalidGeometry("solid surface is not closed".into()));
    }
    let (vol, c, second) = volume_moments(&v, &t);
    if vol <= 0.0 {
        return Err(Error::InvalidGeometry("solid surface is inside-out".into()));
    }
    let central = second - c * c.transpose() * vol;
    let j = (Matrix3::identity() * central.trace() - central) * density;
    Ok((density * vol, c, (j + j.transpose()) * 0.5))
}

/// Mass properties of a rigid body with uniform density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidBody {
    pub mass: f64,
    pub density: f64,
    pub inertia_body: Matrix3<f64>,
}

impl RigidBody {
    pub fn uniform(density: f64, shape: &Surface) -> Result<Self> {
        let (mass, _, inertia_body) = mass_properties(density, shape)?;
        let eig = inertia_body.symmetric_eigenvalues();
        if eig.iter().any(|&e| e <= 0.0) {
            return Err(Error::InvalidGeometry("inertia tensor is not positive definite".into()));
        }
        Ok(Self {
            mass,
            density,
            inertia_body,
        })
    }

    /// Block-diagonal diag(m I₃, J̃).
    pub fn momentum_matrix(&self) -> Matrix6<f64> {
        let mut m = Matrix6::zeros();
        for i in 0..3 {
            m[(i, i)] = self.mass;
        }
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.inertia_body);
        m
    }
}

/// Position, orientation and body-frame velocities of the solid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidState {
    pub h: Vector3<f64>,
    pub q: Matrix3<f64>,
    pub l_body: Vector3<f64>,
    pub omega_body: Vector3<f64>,
    pub t: f64,
}

/// Re-orthonormalization threshold on ‖QᵀQ − I‖_F.
pub const ROTATION_DRIFT_TOL: f64 = 1e-10;

impl RigidState {
    pub fn at_rest() -> Self {
        Self::initial(Vector3::zeros(), Vector3::zeros())
    }

    pub fn initial(l_body: Vector3<f64>, omega_body: Vector3<f64>) -> Self {
        Self {
            h: Vector3::zeros(),
            q: Matrix3::identity(),
            l_body,
            omega_body,
            t: 0.0,
        }
    }

    /// Spatial velocities l = Q l̃ and ω = Q ω̃.
    pub fn spatial_velocity(&self) -> (Vector3<f64>, Vector3<f64>) {
        (self.q * self.l_body, self.q * self.omega_body)
    }

    pub fn rotation_drift(&self) -> f64 {
        (self.q.transpose() * self.q - Matrix3::identity()).norm()
    }

    /// Polar re-orthonormalization when the drift exceeds the tolerance.
    pub fn reorthonormalize(&mut self) -> bool {
        if self.rotation_drift() > ROTATION_DRIFT_TOL {
            self.q = polar_rotation(&self.q);
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_inertia_matches_closed_form() {
        let a = 1.3;
        let rho = 2.0;
        let body = RigidBody::uniform(rho, &Surface::sphere(a)).unwrap();
        let exact_mass = rho * 4.0 / 3.0 * PI * a.powi(3);
        assert!((body.mass - exact_mass).abs() / exact_mass < 2e-3);
        let expected = 0.4 * body.mass * a * a;
        for i in 0..3 {
            assert!((body.inertia_body[(i, i)] - expected).abs() / expected < 2e-3);
        }
        assert!(body.inertia_body.max_asymmetry_abs() < 1e-12);
    }

    trait Asym {
        fn max_asymmetry_abs(&self) -> f64;
    }
    impl Asym for Matrix3<f64> {
        fn max_asymmetry_abs(&self) -> f64 {
            (self - self.transpose()).abs().max()
        }
    }

    fn box_surface(half: Vector3<f64>) -> Surface {
        let mut vertices = Vec::new();
        for &x in &[-1.0, 1.0] {
            for &y in &[-1.0, 1.0] {
                for &z in &[-1.0, 1.0] {
                    vertices.push(Vector3::new(x * half.x, y * half.y, z * half.z));
                }
            }
        }
        let idx = |x: usize, y: usize, z: usize| x * 4 + y * 2 + z;
        let quads = [
            [idx(0, 0, 0), idx(0, 0, 1), idx(0, 1, 1), idx(0, 1, 0)],
            [idx(1, 0, 0), idx(1, 1, 0), idx(1, 1, 1), idx(1, 0, 1)],
            [idx(0, 0, 0), idx(1, 0, 0), idx(1, 0, 1), idx(0, 0, 1)],
            [idx(0, 1, 0), idx(0, 1, 1), idx(1, 1, 1), idx(1, 1, 0)],
            [idx(0, 0, 0), idx(0, 1, 0), idx(1, 1, 0), idx(1, 0, 0)],
            [idx(0, 0, 1), idx(1, 0, 1), idx(1, 1, 1), idx(0, 1, 1)],
        ];
        let triangles = quads
            .iter()
            .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
            .collect();
        Surface::Polyhedral { vertices, triangles }
    }

    #[test]
    fn box_inertia_exact_and_linear_in_density() {
        let half = Vector3::new(1.0, 2.0, 0.5);
        let s = box_surface(half);
        let j = inertia_tensor(1.0, &s).unwrap();
        let m = 8.0 * half.x * half.y * half.z;
        let (a, b, c) = (2.0 * half.x, 2.0 * half.y, 2.0 * half.z);
        assert!((j[(0, 0)] - m * (b * b + c * c) / 12.0).abs() < 1e-12);
        assert!((j[(1, 1)] - m * (a * a + c * c) / 12.0).abs() < 1e-12);
        assert!((j[(2, 2)] - m * (a * a + b * b) / 12.0).abs() < 1e-12);
        let j3 = inertia_tensor(3.0, &s).unwrap();
        assert!((j3 - j * 3.0).norm() < 1e-12);
    }

    #[test]
    fn mirrored_shape_gives_identical_tensor() {
        let s = box_surface(Vector3::new(0.7, 1.1, 0.4));
        let Surface::Polyhedral { vertices, triangles } = s.clone() else {
            unreachable!()
        };
        let mirrored = Surface::Polyhedral {
            vertices: vertices.iter().map(|p| Vector3::new(-p.x, p.y, p.z)).collect(),
            triangles: triangles.iter().map(|t| [t[0], t[2], t[1]]).collect(),
        };
        let a = inertia_tensor(1.0, &s).unwrap();
        let b = inertia_tensor(1.0, &mirrored).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn open_surface_is_rejected() {
        let Surface::Polyhedral { vertices, mut triangles } = box_surface(Vector3::new(1.0, 1.0, 1.0)) else {
            unreachable!()
        };
        triangles.pop();
        let open = Surface::Polyhedral { vertices, triangles };
        assert!(inertia_tensor(1.0, &open).is_err());
        assert!(inertia_tensor(-1.0, &Surface::sphere(1.0)).is_err());
    }

    #[test]
    fn polyhedral_inner_distance() {
        let s = box_surface(Vector3::new(1.0, 1.0, 1.0));
        assert!((s.inner_distance(&Vector3::new(0.2, 0.0, 0.0)) - 0.8).abs() < 1e-12);
        assert_eq!(s.inner_distance(&Vector3::new(2.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn reorthonormalization_restores_rotation() {
        let mut s = RigidState::at_rest();
        s.q[(0, 1)] = 1e-6;
        assert!(s.reorthonormalize());
        assert!(s.rotation_drift() < 1e-14);
        assert!(!s.reorthonormalize());
    }
}
