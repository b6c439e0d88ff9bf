//! MINI element kernels: P1 plus a cubic bubble for velocity, P1 pressure.
//!
//! Full nodal layout: component `i` of vertex `v` at `3v + i`, component `i`
//! of the bubble of tet `t` at `3(n_vertices + t) + i`.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::linalg::{Csr, Triplets};
use crate::quadrature::SimplexRule;

/// Number of scalar shape functions per tet (four vertices and the bubble).
pub const LOCAL: usize = 5;

/// Quadrature data of one point inside one tet.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    /// Quadrature weight times tet volume.
    pub weight: f64,
    pub x: Vector3<f64>,
    pub lambda: [f64; 4],
    pub phi: [f64; LOCAL],
    pub grad: [Vector3<f64>; LOCAL],
}

/// Per-tet quadrature tables for a fixed rule.
#[derive(Debug, Clone)]
pub struct QuadCache {
    pub n_vertices: usize,
    pub tets: Vec<[usize; 4]>,
    pub volumes: Vec<f64>,
    /// `points[t]` lists the quadrature points of tet `t`.
    pub points: Vec<Vec<QuadPoint>>,
}

/// Gradients of the barycentric coordinates of a tet.
pub fn barycentric_gradients(p: &[Vector3<f64>; 4]) -> Result<([Vector3<f64>; 4], f64)> {
    let m = Matrix3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]);
    let det = m.determinant();
    if !(det > 0.0) {
        return Err(Error::Assembly(format!("inverted or degenerate tetrahedron (det = {det:e})")));
    }
    let inv_t = m.try_inverse().unwrap().transpose();
    let g1 = inv_t.column(0).into_owned();
    let g2 = inv_t.column(1).into_owned();
    let g3 = inv_t.column(2).into_owned();
    Ok(([-(g1 + g2 + g3), g1, g2, g3], det / 6.0))
}

/// Shape values and gradients at barycentric point `l`.
pub fn shape(l: &[f64; 4], g: &[Vector3<f64>; 4]) -> ([f64; LOCAL], [Vector3<f64>; LOCAL]) {
    let b = 256.0 * l[0] * l[1] * l[2] * l[3];
    let mut gb = Vector3::zeros();
    for k in 0..4 {
        let mut prod = 256.0;
        for (j, lj) in l.iter().enumerate() {
            if j != k {
                prod *= lj;
            }
        }
        gb += g[k] * prod;
    }
    ([l[0], l[1], l[2], l[3], b], [g[0], g[1], g[2], g[3], gb])
}

impl QuadCache {
    pub fn new(mesh: &Mesh, degree: usize) -> Result<Self> {
        let rule = SimplexRule::tet(degree);
        let nv = mesh.n_vertices();
        let per_tet: Result<Vec<(Vec<QuadPoint>, f64)>> = mesh
            .tets
            .par_iter()
            .map(|t| {
                let p = [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], mesh.vertices[t[3]]];
                let (g, vol) = barycentric_gradients(&p)?;
                let pts = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(bc, w)| {
                        let l = [bc[0], bc[1], bc[2], bc[3]];
                        let x = p[0] * l[0] + p[1] * l[1] + p[2] * l[2] + p[3] * l[3];
                        let (phi, grad) = shape(&l, &g);
                        QuadPoint {
                            weight: w * vol,
                            x,
                            lambda: l,
                            phi,
                            grad,
                        }
                    })
                    .collect();
                Ok((pts, vol))
            })
            .collect();
        let (points, volumes) = per_tet?.into_iter().unzip();
        Ok(Self {
            n_vertices: nv,
            tets: mesh.tets.clone(),
            volumes,
            points,
        })
    }

    pub fn n_full(&self) -> usize {
        3 * (self.n_vertices + self.tets.len())
    }

    /// Full nodal index of scalar shape `a` of tet `t`.
    #[inline]
    pub fn node(&self, t: usize, a: usize) -> usize {
        if a < 4 {
            self.tets[t][a]
        } else {
            self.n_vertices + t
        }
    }

    /// Local nodal velocities of tet `t`.
    pub fn local_values(&self, t: usize, u: &[f64]) -> [Vector3<f64>; LOCAL] {
        let mut out = [Vector3::zeros(); LOCAL];
        for (a, o) in out.iter_mut().enumerate() {
            let n = self.node(t, a);
            *o = Vector3::new(u[3 * n], u[3 * n + 1], u[3 * n + 2]);
        }
        out
    }

    pub fn n_points(&self) -> usize {
        self.points.iter().map(Vec::len).sum()
    }
}

/// Velocity value and gradient (`grad[(i, j)] = ∂ⱼ uᵢ`) at a quadrature point.
#[inline]
pub fn eval_velocity(q: &QuadPoint, local: &[Vector3<f64>; LOCAL]) -> (Vector3<f64>, Matrix3<f64>) {
    let mut v = Vector3::zeros();
    let mut g = Matrix3::zeros();
    for a in 0..LOCAL {
        v += local[a] * q.phi[a];
        g += local[a] * q.grad[a].transpose();
    }
    (v, g)
}

/// Scalar P1 value and gradient at a quadrature point from vertex values.
#[inline]
pub fn eval_p1(q: &QuadPoint, local: &[f64; 4]) -> (f64, Vector3<f64>) {
    let mut v = 0.0;
    let mut g = Vector3::zeros();
    for a in 0..4 {
        v += local[a] * q.lambda[a];
        g += q.grad[a] * local[a];
    }
    (v, g)
}

/// Assembles `∫ b(v, u)` on the full nodal space where the pointwise form is
/// `Σ C[i][m][j][n] ∂ₘvᵢ ∂ₙuⱼ + Σ B[i][j] vᵢ uⱼ`; `coef` returns `(C, B)` per
/// point (`None` skips a term).
pub fn assemble_matrix<F>(cache: &QuadCache, coef: F) -> Csr
where
    F: Fn(usize, usize, &QuadPoint) -> (Option<[[Matrix3<f64>; 3]; 3]>, Option<Matrix3<f64>>) + Sync,
{
    let n = cache.n_full();
    let chunks: Vec<Triplets> = (0..cache.tets.len())
        .into_par_iter()
        .map(|t| {
            let mut trip = Triplets::new(n, n);
            let mut local = [[0.0; 3 * LOCAL]; 3 * LOCAL];
            for (qi, q) in cache.points[t].iter().enumerate() {
                let (c, b) = coef(t, qi, q);
                if let Some(c) = c {
                    for a in 0..LOCAL {
                        for bb in 0..LOCAL {
                            for i in 0..3 {
                                for j in 0..3 {
                                    // C[i][j] holds the (m, n) block for components (i, j)
                                    let v = (q.grad[a].transpose() * c[i][j] * q.grad[bb])[(0, 0)];
                                    local[3 * a + i][3 * bb + j] += q.weight * v;
                                }
                            }
                        }
                    }
                }
                if let Some(b) = b {
                    for a in 0..LOCAL {
                        for bb in 0..LOCAL {
                            let s = q.weight * q.phi[a] * q.phi[bb];
                            for i in 0..3 {
                                for j in 0..3 {
                                    local[3 * a + i][3 * bb + j] += s * b[(i, j)];
                                }
                            }
                        }
                    }
                }
            }
            for a in 0..LOCAL {
                let na = cache.node(t, a);
                for bb in 0..LOCAL {
                    let nb = cache.node(t, bb);
                    for i in 0..3 {
                        for j in 0..3 {
                            trip.push(3 * na + i, 3 * nb + j, local[3 * a + i][3 * bb + j]);
                        }
                    }
                }
            }
            trip
        })
        .collect();
    merge(chunks, n, n)
}

/// Assembles `∫ f·v + G:∇v` on the full nodal space; `integrand` returns
/// `(f, G)` per point with `G[(i, m)]` paired with `∂ₘvᵢ`.
pub fn assemble_vector<F>(cache: &QuadCache, integrand: F) -> Vec<f64>
where
    F: Fn(usize, usize, &QuadPoint) -> (Vector3<f64>, Matrix3<f64>) + Sync,
{
    let n = cache.n_full();
    let parts: Vec<[Vector3<f64>; LOCAL]> = (0..cache.tets.len())
        .into_par_iter()
        .map(|t| {
            let mut loc = [Vector3::zeros(); LOCAL];
            for (qi, q) in cache.points[t].iter().enumerate() {
                let (f, g) = integrand(t, qi, q);
                for a in 0..LOCAL {
                    loc[a] += (f * q.phi[a] + g * q.grad[a]) * q.weight;
                }
            }
            loc
        })
        .collect();
    // scatter in element order so the sums do not depend on the thread count
    let mut out = vec![0.0; n];
    for (t, loc) in parts.iter().enumerate() {
        for a in 0..LOCAL {
            let na = cache.node(t, a);
            for i in 0..3 {
                out[3 * na + i] += loc[a][i];
            }
        }
    }
    out
}

/// Assembles `∫ s q` for P1 test functions `q`, `integrand` giving `s` per point.
pub fn assemble_p1_vector<F>(cache: &QuadCache, integrand: F) -> Vec<f64>
where
    F: Fn(usize, usize, &QuadPoint) -> f64 + Sync,
{
    let nv = cache.n_vertices;
    let mut out = vec![0.0; nv];
    let parts: Vec<(usize, [f64; 4])> = (0..cache.tets.len())
        .into_par_iter()
        .map(|t| {
            let mut loc = [0.0; 4];
            for (qi, q) in cache.points[t].iter().enumerate() {
                let s = integrand(t, qi, q) * q.weight;
                for a in 0..4 {
                    loc[a] += s * q.lambda[a];
                }
            }
            (t, loc)
        })
        .collect();
    for (t, loc) in parts {
        for a in 0..4 {
            out[cache.tets[t][a]] += loc[a];
        }
    }
    out
}

/// Divergence pairing `∫ q div v` with P1 `q` (rows) and full velocity (columns).
pub fn divergence_matrix(cache: &QuadCache) -> Csr {
    let (nv, n) = (cache.n_vertices, cache.n_full());
    let chunks: Vec<Triplets> = (0..cache.tets.len())
        .into_par_iter()
        .map(|t| {
            let mut trip = Triplets::new(nv, n);
            let mut local = [[0.0; 3 * LOCAL]; 4];
            for q in &cache.points[t] {
                for p in 0..4 {
                    for a in 0..LOCAL {
                        for i in 0..3 {
                            local[p][3 * a + i] += q.weight * q.lambda[p] * q.grad[a][i];
                        }
                    }
                }
            }
            for p in 0..4 {
                for a in 0..LOCAL {
                    let na = cache.node(t, a);
                    for i in 0..3 {
                        trip.push(cache.tets[t][p], 3 * na + i, local[p][3 * a + i]);
                    }
                }
            }
            trip
        })
        .collect();
    merge(chunks, nv, n)
}

/// P1 stiffness `∫ ∇φ_a·∇φ_b` and P1 mass `∫ φ_a φ_b`.
pub fn p1_matrices(cache: &QuadCache) -> (Csr, Csr) {
    let nv = cache.n_vertices;
    let mut k = Triplets::new(nv, nv);
    let mut m = Triplets::new(nv, nv);
    for (t, tet) in cache.tets.iter().enumerate() {
        let g = &cache.points[t][0].grad;
        let vol = cache.volumes[t];
        for a in 0..4 {
            for b in 0..4 {
                k.push(tet[a], tet[b], vol * g[a].dot(&g[b]));
                m.push(tet[a], tet[b], vol * if a == b { 0.1 } else { 0.05 });
            }
        }
    }
    (k.to_csr(), m.to_csr())
}

/// `∫ φ_p` for every vertex.
pub fn p1_mean_weights(cache: &QuadCache) -> Vec<f64> {
    let mut out = vec![0.0; cache.n_vertices];
    for (t, tet) in cache.tets.iter().enumerate() {
        for &v in tet {
            out[v] += cache.volumes[t] / 4.0;
        }
    }
    out
}

/// Tensor for `2ν ∫ D(u):D(v)`: for components (i, j) the (m, n) block is
/// `ν(δᵢⱼ δₘₙ + δᵢₙ δⱼₘ)`.
pub fn viscous_tensor(viscosity: f64) -> [[Matrix3<f64>; 3]; 3] {
    let mut c = [[Matrix3::zeros(); 3]; 3];
    for (i, ci) in c.iter_mut().enumerate() {
        for (j, cij) in ci.iter_mut().enumerate() {
            for m in 0..3 {
                for n in 0..3 {
                    let mut v = 0.0;
                    if i == j && m == n {
                        v += viscosity;
                    }
                    if i == n && j == m {
                        v += viscosity;
                    }
                    cij[(m, n)] = v;
                }
            }
        }
    }
    c
}

fn merge(chunks: Vec<Triplets>, nr: usize, nc: usize) -> Csr {
    let mut all = Triplets::new(nr, nc);
    for c in chunks {
        all.extend(c);
    }
    all.to_csr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shell_mesh;

    #[test]
    fn bubble_vanishes_on_faces_and_peaks_at_centroid() {
        let g = [Vector3::zeros(); 4];
        assert_eq!(shape(&[0.0, 0.3, 0.3, 0.4], &g).0[4], 0.0);
        assert!((shape(&[0.25; 4], &g).0[4] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mass_integrates_constants_and_divergence_of_linear_field() {
        let mesh = shell_mesh(1.0, 2.0, 0, 1).unwrap();
        let cache = QuadCache::new(&mesh, 9).unwrap();
        let id = Matrix3::identity();
        let mass = assemble_matrix(&cache, |_, _, _| (None, Some(id)));
        let mut ones = vec![0.0; cache.n_full()];
        for v in 0..mesh.n_vertices() {
            ones[3 * v] = 1.0;
        }
        let vol = mesh.volume();
        assert!((mass.bilinear(&ones, &ones) - vol).abs() < 1e-12 * vol);
        // u = x has div u = 3 and ∫ q div u = 3 ∫ q
        let mut lin = vec![0.0; cache.n_full()];
        for (v, p) in mesh.vertices.iter().enumerate() {
            for i in 0..3 {
                lin[3 * v + i] = p[i];
            }
        }
        let d = divergence_matrix(&cache).mul_vec(&lin);
        let w = p1_mean_weights(&cache);
        for (a, b) in d.iter().zip(&w) {
            assert!((a - 3.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn bubble_gradient_matches_finite_differences() {
        let p = [
            Vector3::new(0.1, 0.0, 0.0),
            Vector3::new(1.0, 0.2, 0.0),
            Vector3::new(0.0, 1.1, 0.1),
            Vector3::new(0.2, 0.1, 0.9),
        ];
        let (g, _) = barycentric_gradients(&p).unwrap();
        let m = Matrix3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]).try_inverse().unwrap();
        let bubble = |x: Vector3<f64>| {
            let l = m * (x - p[0]);
            256.0 * (1.0 - l.sum()) * l[0] * l[1] * l[2]
        };
        let l = [0.2, 0.3, 0.1, 0.4];
        let x = p[0] * l[0] + p[1] * l[1] + p[2] * l[2] + p[3] * l[3];
        let (_, grad) = shape(&l, &g);
        let h = 1e-6;
        for k in 0..3 {
            let mut e = Vector3::zeros();
            e[k] = h;
            let fd = (bubble(x + e) - bubble(x - e)) / (2.0 * h);
            assert!((fd - grad[4][k]).abs() < 1e-7);
        }
    }
}
