//! Flow map of a wobbling body: rigid on the solid, identity at the wall,
//! volume preserving in between.

use nalgebra::Vector3;
use slipfsi::geometry::make_reference_geometry;
use slipfsi::transform::{CutoffPsi, FlowMap, FlowOptions};

fn main() -> slipfsi::Result<()> {
    let domain = make_reference_geometry(1.0, 4.0, 0)?;
    let (center, radius) = domain.outer_sphere().expect("spherical wall");
    let psi = CutoffPsi::for_sphere(center, radius, domain.beta);
    let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.02).collect();
    let l: Vec<_> = times.iter().map(|t| Vector3::new(0.08 * t.cos(), 0.0, 0.02)).collect();
    let w: Vec<_> = times.iter().map(|t| Vector3::new(0.0, 0.05, 0.05 * t.sin())).collect();
    let map = FlowMap::build(psi, domain.mesh.vertices.clone(), &times, &l, &w, FlowOptions::default())?;
    let n = map.len() - 1;
    let rigid = domain
        .solid_vertices()
        .iter()
        .map(|&v| (map.jx[n][v] - map.q[n]).norm())
        .fold(0.0, f64::max);
    println!("body center at t = {}: {:?}", times[n], map.h[n].as_slice());
    println!("max |det J_X - 1| = {:.2e}", map.max_det_error());
    println!("max |J_X - Q| on the solid = {:.2e}", rigid);
    let y = Vector3::new(0.0, 2.0, 1.0);
    let x = map.eval_x(&y, n)?;
    println!("y = {:?} -> X = {:?} -> Y(X) = {:?}", y.as_slice(), x.as_slice(), map.invert(&x, n)?.as_slice());
    Ok(())
}
