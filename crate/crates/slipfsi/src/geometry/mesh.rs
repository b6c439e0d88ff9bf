use std::collections::HashMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary tag of a facet of the fluid mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    Outer,
    Solid,
}

impl Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Outer => "OUTER",
            Tag::Solid => "SOLID",
        }
    }
}

/// Boundary triangle, oriented so that its right-hand normal points out of
/// the fluid. `owner` is the tetrahedron it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    pub nodes: [usize; 3],
    pub tag: Tag,
    pub owner: usize,
}

/// Tetrahedral mesh of the fluid region with tagged boundary facets.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vector3<f64>>,
    pub tets: Vec<[usize; 4]>,
    pub facets: Vec<Facet>,
}

impl Mesh {
    /// Builds a mesh from raw tets and tagged facets: orients tets
    /// positively, finds facet owners and orients facets out of the fluid.
    pub fn new(vertices: Vec<Vector3<f64>>, tets: Vec<[usize; 4]>, facets: Vec<([usize; 3], Tag)>) -> Result<Self> {
        let mut tets = tets;
        for (k, t) in tets.iter_mut().enumerate() {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidGeometry(format!("tet {k} references a missing vertex")));
            }
            let v = signed_volume(&vertices, t);
            if v.abs() < 1e-14 {
                return Err(Error::InvalidGeometry(format!("tet {k} is degenerate")));
            }
            if v < 0.0 {
                t.swap(2, 3);
            }
        }
        let mut face_owner: HashMap<[usize; 3], (usize, usize)> = HashMap::new();
        for (k, t) in tets.iter().enumerate() {
            for omit in 0..4 {
                let mut f = [0; 3];
                let mut j = 0;
                for (i, &v) in t.iter().enumerate() {
                    if i != omit {
                        f[j] = v;
                        j += 1;
                    }
                }
                f.sort_unstable();
                face_owner.entry(f).and_modify(|e| e.1 += 1).or_insert((k, 1));
            }
        }
        let mut out = Vec::with_capacity(facets.len());
        for (i, (nodes, tag)) in facets.into_iter().enumerate() {
            let mut key = nodes;
            key.sort_unstable();
            let (owner, count) = *face_owner
                .get(&key)
                .ok_or_else(|| Error::InvalidGeometry(format!("facet {i} is not a face of any tet")))?;
            if count != 1 {
                return Err(Error::InvalidGeometry(format!("facet {i} is an interior face")));
            }
            let t = tets[owner];
            let opposite = *t.iter().find(|v| !nodes.contains(v)).unwrap();
            let mut nodes = nodes;
            let n = facet_area_normal(&vertices, &nodes);
            if n.dot(&(vertices[opposite] - vertices[nodes[0]])) > 0.0 {
                nodes.swap(1, 2);
            }
            out.push(Facet { nodes, tag, owner });
        }
        let boundary_faces = face_owner.values().filter(|e| e.1 == 1).count();
        if boundary_faces != out.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} boundary faces but {} tagged facets",
                boundary_faces,
                out.len()
            )));
        }
        Ok(Self {
            vertices,
            tets,
            facets: out,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn tet_volume(&self, k: usize) -> f64 {
        signed_volume(&self.vertices, &self.tets[k])
    }

    pub fn volume(&self) -> f64 {
        (0..self.tets.len()).map(|k| self.tet_volume(k)).sum()
    }

    /// Area-weighted normal (|n| = area) of a boundary facet.
    pub fn facet_area_vector(&self, f: &Facet) -> Vector3<f64> {
        facet_area_normal(&self.vertices, &f.nodes)
    }

    pub fn facets_with(&self, tag: Tag) -> impl Iterator<Item = (usize, &Facet)> {
        self.facets.iter().enumerate().filter(move |(_, f)| f.tag == tag)
    }

    /// Per-vertex tag, `None` for interior vertices. A vertex touching both
    /// boundaries is reported as an error by [`Mesh::validate`].
    pub fn vertex_tags(&self) -> Vec<Option<Tag>> {
        let mut tags = vec![None; self.vertices.len()];
        for f in &self.facets {
            for &v in &f.nodes {
                tags[v] = Some(f.tag);
            }
        }
        tags
    }

    /// Σ area·normal over each tagged closed boundary, relative to its total area.
    pub fn closure_defect(&self, tag: Tag) -> f64 {
        let mut s = Vector3::zeros();
        let mut area = 0.0;
        for (_, f) in self.facets_with(tag) {
            let a = self.facet_area_vector(f);
            s += a;
            area += a.norm();
        }
        if area == 0.0 {
            0.0
        } else {
            s.norm() / area
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen: Vec<Option<Tag>> = vec![None; self.vertices.len()];
        for f in &self.facets {
            for &v in &f.nodes {
                match seen[v] {
                    Some(t) if t != f.tag => {
                        return Err(Error::InvalidGeometry(format!(
                            "vertex {v} lies on both boundaries"
                        )))
                    }
                    _ => seen[v] = Some(f.tag),
                }
            }
        }
        for (k, _) in self.tets.iter().enumerate() {
            if self.tet_volume(k) <= 0.0 {
                return Err(Error::Assembly(format!("inverted element {k}")));
            }
        }
        Ok(())
    }
}

pub(crate) fn signed_volume(v: &[Vector3<f64>], t: &[usize; 4]) -> f64 {
    let (a, b, c, d) = (v[t[0]], v[t[1]], v[t[2]], v[t[3]]);
    (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
}

pub(crate) fn facet_area_normal(v: &[Vector3<f64>], f: &[usize; 3]) -> Vector3<f64> {
    (v[f[1]] - v[f[0]]).cross(&(v[f[2]] - v[f[0]])) * 0.5
}

/// Unit icosphere: `subdivisions` rounds of 4:1 triangle splitting.
/// Triangles are oriented with outward normals.
pub fn icosphere(subdivisions: usize) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let mut verts: Vec<Vector3<f64>> = raw.iter().map(|&(x, y, z)| Vector3::new(x, y, z).normalize()).collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let ab = midpoint(f[0], f[1], &mut verts);
            let bc = midpoint(f[1], f[2], &mut verts);
            let ca = midpoint(f[2], f[0], &mut verts);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    for f in faces.iter_mut() {
        let n = (verts[f[1]] - verts[f[0]]).cross(&(verts[f[2]] - verts[f[0]]));
        if n.dot(&verts[f[0]]) < 0.0 {
            f.swap(1, 2);
        }
    }
    (verts, faces)
}

/// Concentric spherical shell `inner < |x| < outer` made of `layers`
/// radial prism layers over an icosphere, each prism split into three tets
/// by the vertex-index rule that keeps neighbouring splits conforming.
pub fn shell_mesh(inner: f64, outer: f64, subdivisions: usize, layers: usize) -> Result<Mesh> {
    if !(inner > 0.0 && outer > inner) || layers == 0 {
        return Err(Error::InvalidGeometry(format!(
            "shell needs 0 < inner < outer, got inner={inner}, outer={outer}"
        )));
    }
    let (sphere, tris) = icosphere(subdivisions);
    let ns = sphere.len();
    let mut vertices = Vec::with_capacity(ns * (layers + 1));
    for k in 0..=layers {
        let r = inner + (outer - inner) * k as f64 / layers as f64;
        vertices.extend(sphere.iter().map(|p| p * r));
    }
    let mut tets = Vec::with_capacity(tris.len() * layers * 3);
    for k in 0..layers {
        for t in &tris {
            let mut s = *t;
            s.sort_unstable();
            let lo = |i: usize| k * ns + i;
            let hi = |i: usize| (k + 1) * ns + i;
            let (a, b, c) = (s[0], s[1], s[2]);
            tets.push([lo(a), lo(b), lo(c), hi(c)]);
            tets.push([lo(a), lo(b), hi(b), hi(c)]);
            tets.push([lo(a), hi(a), hi(b), hi(c)]);
        }
    }
    let mut facets = Vec::with_capacity(2 * tris.len());
    for t in &tris {
        facets.push(([t[0], t[1], t[2]], Tag::Solid));
        facets.push(([layers * ns + t[0], layers * ns + t[1], layers * ns + t[2]], Tag::Outer));
    }
    Mesh::new(vertices, tets, facets)
}
