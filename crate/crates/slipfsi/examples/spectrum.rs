//! Rightmost eigenvalues, decay margin and resolvent bound of the linear
//! fluid-body operator for three friction levels.

use slipfsi::coupled::CoupledOperator;
use slipfsi::geometry::{make_reference_geometry, RigidBody, Surface};
use slipfsi::spectral::{spectrum_with_sector, SectorGrid};
use slipfsi::stokes::assemble_stokes;

fn main() -> slipfsi::Result<()> {
    for alpha in [0.1, 1.0, 10.0] {
        let domain = make_reference_geometry(1.0, 4.0, 0)?.with_alpha(|_| alpha)?;
        let op = CoupledOperator::new(assemble_stokes(&domain, 0.5)?, RigidBody::uniform(1.0, &Surface::sphere(1.0))?)?;
        let r = spectrum_with_sector(&op, 3, SectorGrid::right_half_plane(3))?;
        let eig: Vec<f64> = r.eigenvalues.iter().map(|e| e.re).collect();
        println!(
            "alpha = {alpha:>4}: eigenvalues {eig:.4?}, eta0 = {:.4}, sup |λ||R(λ)| = {:.4}",
            r.eta0,
            r.sector_bound.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
