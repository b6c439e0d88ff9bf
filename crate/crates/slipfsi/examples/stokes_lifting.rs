//! Steady Stokes flow with Navier slip driven by a rigid body velocity.

use slipfsi::geometry::make_reference_geometry;
use slipfsi::stokes::{assemble_stokes, solve_steady_lifting, stokes_residual};

fn main() -> slipfsi::Result<()> {
    let domain = make_reference_geometry(1.0, 4.0, 1)?.with_alpha(|_| 2.0)?;
    let blocks = assemble_stokes(&domain, 0.5)?;
    println!("{} velocity unknowns, {} pressure unknowns", blocks.n_z(), blocks.n_p());
    let lifted = solve_steady_lifting(&blocks, [0.1, 0.0, 0.0], [0.0, 0.0, 0.2])?;
    println!("viscous dissipation {:.5e}", blocks.viscous_energy(&lifted.z));
    println!("slip dissipation    {:.5e}", blocks.slip_energy(&lifted.z));
    println!("residual            {:.2e}", stokes_residual(&blocks, &lifted.z, &lifted.pressure));
    Ok(())
}
