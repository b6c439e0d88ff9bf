//! Fixed-point solve of the full nonlinear problem for small data, with the
//! contraction log and the clearance along the run.

use slipfsi::geometry::{make_reference_geometry, RigidBody, Surface};
use slipfsi::nonnewtonian::ViscosityModel;
use slipfsi::picard::{FixedPointOptions, Simulator, TimeGrid};

fn main() -> slipfsi::Result<()> {
    let domain = make_reference_geometry(1.0, 4.0, 0)?;
    let body = RigidBody::uniform(1.0, &Surface::sphere(1.0))?;
    let sim = Simulator::new(domain, body, ViscosityModel::newtonian(1.0))?;
    let z0 = sim.lifted_initial(&[0.02, -0.01, 0.015, 0.01, 0.015, -0.02])?;
    let opts = FixedPointOptions {
        gamma: 0.5,
        ..Default::default()
    };
    let run = sim.run(&z0, TimeGrid::new(0.5, 0.05)?, &opts)?;
    println!("status {:?} after {} iterations", run.status, run.log.iterations);
    println!("contraction ratios {:.3?}", run.log.ratios);
    println!("min distance {:.4} against beta/2 = {}", run.min_distance, 0.5 * sim.domain.beta);
    let last = run.series.last().expect("non-empty series");
    println!("t = {}: h = {:.4?}, energy {:.4e}", last.t, last.h, last.energy);
    Ok(())
}
