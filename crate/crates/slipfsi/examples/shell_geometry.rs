//! Builtin shell mesh, its clearance, and the ASCII mesh round trip.

use nalgebra::{Matrix3, Vector3};
use slipfsi::geometry::io::{parse_mesh, write_mesh};
use slipfsi::geometry::{body_distance, make_reference_geometry, RigidState};

fn main() -> slipfsi::Result<()> {
    let domain = make_reference_geometry(1.0, 4.0, 1)?;
    println!(
        "{} vertices, {} tets, beta = {}, fluid volume {:.4}",
        domain.mesh.n_vertices(),
        domain.mesh.tets.len(),
        domain.beta,
        domain.mesh.volume()
    );
    for shift in [0.0, 1.0, 2.5] {
        let state = RigidState {
            h: Vector3::new(shift, 0.0, 0.0),
            q: Matrix3::identity(),
            l_body: Vector3::zeros(),
            omega_body: Vector3::zeros(),
            t: 0.0,
        };
        println!("body shifted by {shift}: distance {:.3}", body_distance(&state, &domain));
    }
    let text = write_mesh(&domain.mesh);
    let back = parse_mesh(&text)?;
    println!("mesh file: {} bytes, {} facets after reload", text.len(), back.facets.len());
    Ok(())
}
