//! The wall law α|u|u_τ in place of linear friction, and its boundary
//! residual at the fixed point.

use slipfsi::geometry::{make_reference_geometry, RigidBody, Surface};
use slipfsi::nonnewtonian::ViscosityModel;
use slipfsi::picard::{FixedPointOptions, Simulator, TimeGrid};

fn main() -> slipfsi::Result<()> {
    let sim = Simulator::new(
        make_reference_geometry(1.0, 4.0, 0)?,
        RigidBody::uniform(1.0, &Surface::sphere(1.0))?,
        ViscosityModel::newtonian(1.0),
    )?;
    let z0 = sim.lifted_initial(&[0.04, -0.02, 0.03, 0.02, 0.03, -0.04])?;
    let grid = TimeGrid::new(0.2, 0.05)?;
    for nonlinear_slip in [false, true] {
        let opts = FixedPointOptions {
            gate: false,
            tol: 1e-11,
            nonlinear_slip,
            ..Default::default()
        };
        let run = sim.run(&z0, grid, &opts)?;
        println!(
            "nonlinear slip {nonlinear_slip:>5}: {} iterations, wall-law residual {:.3e}",
            run.log.iterations,
            sim.wall_law_residual(&run)?
        );
    }
    Ok(())
}
