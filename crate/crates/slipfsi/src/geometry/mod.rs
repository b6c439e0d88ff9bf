//! Reference geometry: fluid mesh between a solid and an outer wall,
//! rigid-body mass properties, and clearance monitoring.

mod body;
pub mod io;
mod mesh;

pub use body::{inertia_tensor, is_closed, point_triangle_distance, RigidBody, RigidState, Surface, ROTATION_DRIFT_TOL};
pub use mesh::{icosphere, shell_mesh, Facet, Mesh, Tag};

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Fluid domain at t = 0 together with its boundary data.
#[derive(Debug, Clone)]
pub struct DomainConfig {
    pub mesh: Mesh,
    pub outer_boundary: Surface,
    pub solid_boundary_initial: Surface,
    /// Initial clearance between the solid and the outer wall.
    pub beta: f64,
    /// Friction coefficient at every vertex; only solid-boundary values are used.
    pub alpha_field: Vec<f64>,
    /// Unit normal out of the fluid at boundary vertices, zero elsewhere.
    pub vertex_normals: Vec<Vector3<f64>>,
    pub vertex_tags: Vec<Option<Tag>>,
}

/// Concentric shell `solid_radius < |x| < fluid_radius`; the refinement
/// level sets both the icosphere subdivision and the number of radial
/// layers (`refinement + 2`).
pub fn make_reference_geometry(solid_radius: f64, fluid_radius: f64, refinement: usize) -> Result<DomainConfig> {
    if !(solid_radius > 0.0 && fluid_radius > solid_radius) {
        return Err(Error::InvalidGeometry(format!(
            "need 0 < solid_radius < fluid_radius, got {solid_radius} and {fluid_radius}"
        )));
    }
    let mesh = shell_mesh(solid_radius, fluid_radius, refinement, refinement + 2)?;
    DomainConfig::new(mesh, Surface::sphere(fluid_radius), Surface::sphere(solid_radius))
}

impl DomainConfig {
    /// Assembles a domain from a mesh and analytic or polyhedral boundary
    /// descriptions. Friction defaults to 1 on the solid boundary.
    pub fn new(mesh: Mesh, outer: Surface, solid: Surface) -> Result<Self> {
        mesh.validate()?;
        let vertex_tags = mesh.vertex_tags();
        let mut normals = vec![Vector3::zeros(); mesh.n_vertices()];
        for f in &mesh.facets {
            let a = mesh.facet_area_vector(f);
            for &v in &f.nodes {
                normals[v] += a;
            }
        }
        for (v, n) in normals.iter_mut().enumerate() {
            let analytic = match vertex_tags[v] {
                Some(Tag::Outer) => outer.as_sphere().map(|(c, _)| (mesh.vertices[v] - c).normalize()),
                Some(Tag::Solid) => solid.as_sphere().map(|(c, _)| (c - mesh.vertices[v]).normalize()),
                None => None,
            };
            if let Some(a) = analytic {
                *n = a;
            } else if n.norm() > 0.0 {
                *n = n.normalize();
            }
        }
        let mut beta = f64::INFINITY;
        for (v, t) in vertex_tags.iter().enumerate() {
            if *t == Some(Tag::Solid) {
                beta = beta.min(outer.inner_distance(&mesh.vertices[v]));
            }
        }
        if let (Some((co, ro)), Some((cs, rs))) = (outer.as_sphere(), solid.as_sphere()) {
            beta = ro - (co - cs).norm() - rs;
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidGeometry(format!("clearance beta = {beta} must be positive")));
        }
        let alpha_field = vertex_tags
            .iter()
            .map(|t| if *t == Some(Tag::Solid) { 1.0 } else { 0.0 })
            .collect();
        Ok(Self {
            mesh,
            outer_boundary: outer,
            solid_boundary_initial: solid,
            beta,
            alpha_field,
            vertex_normals: normals,
            vertex_tags,
        })
    }

    /// Builds a domain from an imported mesh. Boundaries whose vertices are
    /// equidistant from their centroid are treated as spheres.
    pub fn from_mesh(mesh: Mesh) -> Result<Self> {
        let outer = surface_from_facets(&mesh, Tag::Outer, false)?;
        let solid = surface_from_facets(&mesh, Tag::Solid, true)?;
        Self::new(mesh, outer, solid)
    }

    /// Replaces the friction coefficient by nodal values of `f` on the solid boundary.
    pub fn with_alpha(mut self, f: impl Fn(&Vector3<f64>) -> f64) -> Result<Self> {
        let mut any = false;
        for (v, t) in self.vertex_tags.iter().enumerate() {
            self.alpha_field[v] = if *t == Some(Tag::Solid) {
                let a = f(&self.mesh.vertices[v]);
                if !(a >= 0.0) || !a.is_finite() {
                    return Err(Error::Input(format!("friction coefficient must be >= 0, got {a}")));
                }
                any |= a > 0.0;
                a
            } else {
                0.0
            };
        }
        if !any {
            return Err(Error::Input("friction coefficient vanishes identically".into()));
        }
        Ok(self)
    }

    pub fn is_solid(&self, v: usize) -> bool {
        self.vertex_tags[v] == Some(Tag::Solid)
    }

    pub fn is_outer(&self, v: usize) -> bool {
        self.vertex_tags[v] == Some(Tag::Outer)
    }

    /// Vertices on the solid boundary, in increasing order.
    pub fn solid_vertices(&self) -> Vec<usize> {
        (0..self.mesh.n_vertices()).filter(|&v| self.is_solid(v)).collect()
    }

    /// Center of the outer sphere and its radius, when spherical.
    pub fn outer_sphere(&self) -> Option<(Vector3<f64>, f64)> {
        self.outer_boundary.as_sphere()
    }

    /// Center of the solid at t = 0; torque arms y are measured from here.
    pub fn body_center(&self) -> Vector3<f64> {
        self.solid_boundary_initial.centroid()
    }

    /// Diameter of the initial solid.
    pub fn solid_diameter(&self) -> f64 {
        match &self.solid_boundary_initial {
            Surface::Sphere { radius, .. } => 2.0 * radius,
            Surface::Polyhedral { vertices, .. } => {
                let mut d: f64 = 0.0;
                for a in vertices {
                    for b in vertices {
                        d = d.max((a - b).norm());
                    }
                }
                d
            }
        }
    }
}

fn surface_from_facets(mesh: &Mesh, tag: Tag, flip: bool) -> Result<Surface> {
    let mut index = std::collections::HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (_, f) in mesh.facets_with(tag) {
        let mut t = [0; 3];
        for (k, &v) in f.nodes.iter().enumerate() {
            t[k] = *index.entry(v).or_insert_with(|| {
                vertices.push(mesh.vertices[v]);
                vertices.len() - 1
            });
        }
        if flip {
            t.swap(1, 2);
        }
        triangles.push(t);
    }
    if triangles.is_empty() {
        return Err(Error::InvalidGeometry(format!("no {} facets", tag.as_str())));
    }
    if !is_closed(&triangles) {
        return Err(Error::InvalidGeometry(format!("{} boundary is not closed", tag.as_str())));
    }
    let c: Vector3<f64> = vertices.iter().sum::<Vector3<f64>>() / vertices.len() as f64;
    let radii: Vec<f64> = vertices.iter().map(|p| (p - c).norm()).collect();
    let (lo, hi) = radii.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    if hi - lo <= 1e-9 * hi {
        return Ok(Surface::Sphere {
            center: c,
            radius: 0.5 * (lo + hi),
        });
    }
    Ok(Surface::Polyhedral { vertices, triangles })
}

/// Clearance between the moved solid `x ↦ h + Q y` and the outer wall;
/// 0 signals contact or overlap.
pub fn body_distance(state: &RigidState, domain: &DomainConfig) -> f64 {
    if let (Some((co, ro)), Some((cs, rs))) = (
        domain.outer_boundary.as_sphere(),
        domain.solid_boundary_initial.as_sphere(),
    ) {
        let center = state.h + state.q * cs;
        return (ro - (center - co).norm() - rs).max(0.0);
    }
    let (pts, _) = domain.solid_boundary_initial.triangulate(3);
    pts.iter()
        .map(|y| domain.outer_boundary.inner_distance(&(state.h + state.q * y)))
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn reference_geometry_examples() {
        let d = make_reference_geometry(1.0, 4.0, 0).unwrap();
        assert_eq!(d.beta, 3.0);
        assert!(make_reference_geometry(1.0, 1.0, 0).is_err());
        let fine = make_reference_geometry(1.0, 4.0, 2).unwrap();
        let exact = 4.0 / 3.0 * PI * 63.0;
        assert!((fine.mesh.volume() - exact).abs() / exact < 0.05);
    }

    #[test]
    fn distance_examples() {
        let d = make_reference_geometry(1.0, 4.0, 0).unwrap();
        let mut s = RigidState::at_rest();
        assert_eq!(body_distance(&s, &d), 3.0);
        s.h = Vector3::new(1.0, 0.0, 0.0);
        assert!((body_distance(&s, &d) - 2.0).abs() < 1e-14);
        s.h = Vector3::new(3.1, 0.0, 0.0);
        assert_eq!(body_distance(&s, &d), 0.0);
    }

    #[test]
    fn imported_shell_is_recognised_as_spheres() {
        let d = make_reference_geometry(1.0, 4.0, 1).unwrap();
        let re = DomainConfig::from_mesh(d.mesh.clone()).unwrap();
        let (_, r) = re.outer_sphere().unwrap();
        assert!((r - 4.0).abs() < 1e-12);
        assert!((re.beta - 3.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_validation() {
        let d = make_reference_geometry(1.0, 4.0, 0).unwrap();
        assert!(d.clone().with_alpha(|_| 0.0).is_err());
        assert!(d.clone().with_alpha(|_| -1.0).is_err());
        let d2 = d.with_alpha(|p| 1.0 + p.x.abs()).unwrap();
        assert!(d2.alpha_field.iter().all(|&a| a >= 0.0));
    }
}
