use nalgebra::{Matrix3, Vector3};

use super::fem::{barycentric_gradients, shape};
use crate::error::Result;
use crate::geometry::{Mesh, Tag};
use crate::nonnewtonian::ViscosityModel;
use crate::quadrature::SimplexRule;

/// Constitutive law used to evaluate boundary stresses.
#[derive(Debug, Clone, Copy)]
pub enum StressLaw {
    /// σ = 2ν Du − π I.
    Newtonian { viscosity: f64 },
    /// 𝕋 = μ(|Du|²) Du − π I.
    Generalized(ViscosityModel),
}

impl StressLaw {
    /// Stress from a velocity gradient `grad[(i, j)] = ∂ⱼuᵢ` and pressure.
    pub fn stress(&self, grad: &Matrix3<f64>, pressure: f64) -> Result<Matrix3<f64>> {
        let d = (grad + grad.transpose()) * 0.5;
        let dev = match self {
            StressLaw::Newtonian { viscosity } => d * (2.0 * viscosity),
            StressLaw::Generalized(m) => d * m.eval(d.norm_squared())?.0,
        };
        Ok(dev - Matrix3::identity() * pressure)
    }
}

/// Quadrature point on a solid facet: weight × area, position, fluid-outward
/// unit normal, owner tet and tet barycentric coordinates.
#[derive(Debug, Clone, Copy)]
pub struct FacetPoint {
    pub weight: f64,
    pub x: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub tet: usize,
    pub lambda: [f64; 4],
}

/// Surface quadrature points on all facets with the given tag.
pub fn facet_points(mesh: &Mesh, tag: Tag, degree: usize) -> Vec<FacetPoint> {
    let rule = SimplexRule::triangle(degree);
    let mut out = Vec::new();
    for (_, f) in mesh.facets_with(tag) {
        let tet = mesh.tets[f.owner];
        let pos: Vec<usize> = f.nodes.iter().map(|v| tet.iter().position(|w| w == v).unwrap()).collect();
        let av = mesh.facet_area_vector(f);
        let area = av.norm();
        for (bc, w) in rule.points.iter().zip(&rule.weights) {
            let mut lambda = [0.0; 4];
            let mut x = Vector3::zeros();
            for k in 0..3 {
                lambda[pos[k]] = bc[k];
                x += mesh.vertices[f.nodes[k]] * bc[k];
            }
            out.push(FacetPoint {
                weight: w * area,
                x,
                normal: av / area,
                tet: f.owner,
                lambda,
            });
        }
    }
    out
}

/// Velocity gradient and pressure of full nodal fields at a facet point.
pub fn facet_state(mesh: &Mesh, fp: &FacetPoint, u: &[f64], p: &[f64]) -> Result<(Vector3<f64>, Matrix3<f64>, f64)> {
    let tet = mesh.tets[fp.tet];
    let pts = [mesh.vertices[tet[0]], mesh.vertices[tet[1]], mesh.vertices[tet[2]], mesh.vertices[tet[3]]];
    let (g, _) = barycentric_gradients(&pts)?;
    let (phi, grad) = shape(&fp.lambda, &g);
    let nv = mesh.n_vertices();
    let mut val = Vector3::zeros();
    let mut du = Matrix3::zeros();
    let mut pr = 0.0;
    for a in 0..5 {
        let node = if a < 4 { tet[a] } else { nv + fp.tet };
        let ua = Vector3::new(u[3 * node], u[3 * node + 1], u[3 * node + 2]);
        val += ua * phi[a];
        du += ua * grad[a].transpose();
        if a < 4 {
            pr += p[tet[a]] * fp.lambda[a];
        }
    }
    Ok((val, du, pr))
}

/// Force ∫ σn and torque ∫ y × σn over the solid boundary, with n the unit
/// normal out of the fluid and y measured from `center`.
pub fn traction_moments(
    mesh: &Mesh,
    center: &Vector3<f64>,
    u: &[f64],
    p: &[f64],
    law: &StressLaw,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let mut force = Vector3::zeros();
    let mut torque = Vector3::zeros();
    for fp in facet_points(mesh, Tag::Solid, 4) {
        let (_, du, pr) = facet_state(mesh, &fp, u, p)?;
        let t = law.stress(&du, pr)? * fp.normal * fp.weight;
        force += t;
        torque += (fp.x - center).cross(&t);
    }
    Ok((force, torque))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_reference_geometry;

    #[test]
    fn constant_pressure_has_no_resultant() {
        let d = make_reference_geometry(1.0, 4.0, 1).unwrap();
        let nfull = 3 * (d.mesh.n_vertices() + d.mesh.tets.len());
        let u = vec![0.0; nfull];
        let p = vec![3.5; d.mesh.n_vertices()];
        let (f, t) = traction_moments(&d.mesh, &Vector3::zeros(), &u, &p, &StressLaw::Newtonian { viscosity: 1.0 }).unwrap();
        assert!(f.norm() < 1e-12 && t.norm() < 1e-12);
    }

    #[test]
    fn hydrostatic_pressure_gives_buoyancy() {
        let d = make_reference_geometry(1.0, 4.0, 2).unwrap();
        let nfull = 3 * (d.mesh.n_vertices() + d.mesh.tets.len());
        let u = vec![0.0; nfull];
        let p: Vec<f64> = d.mesh.vertices.iter().map(|x| x.z).collect();
        let (f, t) = traction_moments(&d.mesh, &Vector3::zeros(), &u, &p, &StressLaw::Newtonian { viscosity: 1.0 }).unwrap();
        // exact for the polyhedral solid: ∫ x₃ n over its surface = volume e₃
        let solid_volume: f64 = d
            .mesh
            .facets_with(Tag::Solid)
            .map(|(_, f)| {
                let v = &d.mesh.vertices;
                v[f.nodes[0]].dot(&v[f.nodes[1]].cross(&v[f.nodes[2]])).abs() / 6.0
            })
            .sum();
        assert!((f - Vector3::new(0.0, 0.0, solid_volume)).norm() < 1e-12);
        assert!((solid_volume / (4.0 * std::f64::consts::PI / 3.0) - 1.0).abs() < 0.05);
        assert!(t.norm() < 1e-12);
    }

    #[test]
    fn newtonian_and_generalized_coincide_at_constant_viscosity() {
        let g = Matrix3::new(0.1, 0.3, -0.2, 0.0, 0.5, 0.1, 0.7, -0.4, 0.2);
        let a = StressLaw::Newtonian { viscosity: 1.0 }.stress(&g, 0.3).unwrap();
        let b = StressLaw::Generalized(ViscosityModel::newtonian(2.0)).stress(&g, 0.3).unwrap();
        assert!((a - b).norm() < 1e-15);
    }
}
