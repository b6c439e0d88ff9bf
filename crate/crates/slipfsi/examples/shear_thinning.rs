//! Carreau fluids: ellipticity of the quasi-linear coefficients and local
//! runs for shear-thinning and shear-thickening exponents.

use nalgebra::{Matrix3, Vector3};
use slipfsi::geometry::{make_reference_geometry, RigidBody, Surface};
use slipfsi::nonnewtonian::{coefficients, ViscosityModel};
use slipfsi::picard::{FixedPointOptions, Simulator, TimeGrid};

fn main() -> slipfsi::Result<()> {
    let strain = Matrix3::new(0.3, 0.1, 0.0, 0.1, -0.2, 0.05, 0.0, 0.05, -0.1);
    let (xi, eta) = (Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.6, 0.8, 0.0));
    let opts = FixedPointOptions {
        gate: false,
        ..Default::default()
    };
    for d in [1.5, 2.0, 3.0] {
        let model = ViscosityModel::carreau(1.0, d);
        let lh = coefficients(&model, &strain)?.legendre_hadamard(&xi, &eta);
        let sim = Simulator::new(make_reference_geometry(1.0, 4.0, 0)?, RigidBody::uniform(1.0, &Surface::sphere(1.0))?, model)?;
        let z0 = sim.lifted_initial(&[0.04, -0.02, 0.03, 0.02, 0.03, -0.04])?;
        let run = sim.run(&z0, TimeGrid::new(0.2, 0.05)?, &opts)?;
        println!(
            "d = {d}: Legendre-Hadamard {lh:.4}, {:?} in {} iterations, max ratio {:.3}, final energy {:.6e}",
            run.status,
            run.log.iterations,
            run.log.max_ratio(),
            run.series.last().map_or(0.0, |r| r.energy)
        );
    }
    Ok(())
}
