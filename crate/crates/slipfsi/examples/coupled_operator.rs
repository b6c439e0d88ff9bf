//! Added mass, one resolvent solve and linear time stepping with the
//! discrete energy balance.

use num_complex::Complex64;
use slipfsi::coupled::{solve_resolvent, CoupledOperator, CoupledState, LinearStepper, StepData};
use slipfsi::geometry::{make_reference_geometry, RigidBody, Surface};
use slipfsi::stokes::{assemble_stokes, solve_steady_lifting};

fn main() -> slipfsi::Result<()> {
    let domain = make_reference_geometry(1.0, 4.0, 0)?;
    let body = RigidBody::uniform(1.0, &Surface::sphere(1.0))?;
    let op = CoupledOperator::new(assemble_stokes(&domain, 0.5)?, body)?;
    println!("added mass diagonal: {:.4?}", op.added_mass.matrix.diagonal().as_slice());
    println!("det K = {:.4}", op.k.determinant());

    let load: Vec<Complex64> = op.load(None, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).into_iter().map(Complex64::from).collect();
    let s = solve_resolvent(&op, Complex64::new(0.5, 1.0), &load)?;
    println!("resolvent response of the pushed body: l = {:.4}", s.xi(op.n_fluid())[0]);

    let z0 = solve_steady_lifting(&op.blocks, [0.05, 0.0, 0.0], [0.0, 0.05, 0.0])?.z;
    let stepper = LinearStepper::new(&op, 0.01)?;
    let mut state = CoupledState::new(z0, op.blocks.n_p());
    for _ in 0..5 {
        let next = stepper.step(&op, &state, &StepData::default())?;
        let b = stepper.balance(&op, &state, &next, None);
        println!(
            "t = {:.2}: energy {:.6e}, identity defect {:.2e}",
            next.t,
            b.energy_after,
            b.identity_defect()
        );
        state = next;
    }
    Ok(())
}
