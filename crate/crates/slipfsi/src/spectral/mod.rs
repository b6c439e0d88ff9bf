//! Spectrum, stability margin and resolvent bounds of the discrete linear
//! operator, and decay-rate fitting of simulated series.

mod decay;
mod eigen;
mod sector;

pub use decay::{fit_decay_rate, DecayFit, TAIL_FRACTION};
pub use eigen::{eigenpairs, Eigenpairs, EnergyOperators, EIGEN_RESIDUAL_TOL};
pub use sector::{resolvent_norm, sector_bound, SectorBound, SectorGrid, SectorSample};

use serde::Serialize;

use crate::coupled::CoupledOperator;
use crate::error::Result;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<Eigenvalue>,
    pub residuals: Vec<f64>,
    pub abscissa: f64,
    pub eta0: f64,
    pub sector_bound: Option<f64>,
    pub grid: Option<SectorGrid>,
    pub krylov_dim: usize,
    /// False when some eigenpair missed the residual tolerance.
    pub converged: bool,
}

/// The `count` rightmost eigenvalues, the abscissa and η₀ = −abscissa.
pub fn spectrum(op: &CoupledOperator, count: usize) -> Result<SpectralReport> {
    let pairs = eigenpairs(op, count)?;
    let abscissa = pairs.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectralReport {
        eigenvalues: pairs.values.iter().map(|&re| Eigenvalue { re, im: 0.0 }).collect(),
        residuals: pairs.residuals,
        abscissa,
        eta0: -abscissa,
        sector_bound: None,
        grid: None,
        krylov_dim: pairs.krylov_dim,
        converged: pairs.converged,
    })
}

/// [`spectrum`] plus the sector bound over `grid`.
pub fn spectrum_with_sector(op: &CoupledOperator, count: usize, grid: SectorGrid) -> Result<SpectralReport> {
    let mut report = spectrum(op, count)?;
    let start = EnergyOperators::new(op)?.random_state(5)?;
    report.sector_bound = Some(sector_bound(op, &grid, &start).sup);
    report.grid = Some(grid);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled::{CoupledOperator, CoupledState, LinearStepper, StepData};
    use crate::geometry::{make_reference_geometry, RigidBody, Surface};
    use crate::stokes::assemble_stokes;
    use faer::c64;

    fn operator(mu0: f64, alpha: f64) -> CoupledOperator {
        let d = make_reference_geometry(1.0, 4.0, 0).unwrap().with_alpha(|_| alpha).unwrap();
        let b = assemble_stokes(&d, mu0 / 2.0).unwrap();
        CoupledOperator::new(b, RigidBody::uniform(1.0, &Surface::sphere(1.0)).unwrap()).unwrap()
    }

    #[test]
    fn spectrum_is_stable_with_small_residuals() {
        let op = operator(1.0, 1.0);
        let r = spectrum(&op, 6).unwrap();
        assert!(r.converged, "{:?}", r.residuals);
        assert!(r.abscissa < 0.0);
        assert!(r.eigenvalues.windows(2).all(|w| w[0].re >= w[1].re));
    }

    #[test]
    fn doubling_viscosity_and_friction_doubles_eigenvalues() {
        let a = spectrum(&operator(1.0, 1.0), 4).unwrap();
        let b = spectrum(&operator(2.0, 2.0), 4).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((y.re / x.re - 2.0).abs() < 1e-7, "{} {}", x.re, y.re);
        }
    }

    #[test]
    fn resolvent_bound_is_at_most_one_and_tends_to_one() {
        let op = operator(1.0, 1.0);
        let start = EnergyOperators::new(&op).unwrap().random_state(1).unwrap();
        let big = resolvent_norm(&op, c64::new(1e6, 0.0), &start).unwrap();
        assert!((big - 1.0).abs() < 1e-3, "{big}");
        let grid = SectorGrid::right_half_plane(3);
        let s = sector_bound(&op, &grid, &start);
        assert!(s.samples.iter().all(|x| x.bound.is_some()));
        assert!(s.sup <= 1.0 + 1e-9 && s.sup > 0.5, "{}", s.sup);
    }

    #[test]
    fn simulated_decay_matches_the_abscissa() {
        let op = operator(1.0, 1.0);
        let eta0 = spectrum(&op, 2).unwrap().eta0;
        let dt = 0.02 / eta0;
        let stepper = LinearStepper::new(&op, dt).unwrap();
        let z0 = EnergyOperators::new(&op).unwrap().random_state(9).unwrap();
        let mut s = CoupledState::new(z0, op.blocks.n_p());
        let (mut t, mut y) = (Vec::new(), Vec::new());
        for _ in 0..400 {
            s = stepper.step(&op, &s, &StepData::default()).unwrap();
            t.push(s.t);
            y.push(op.energy(&s.z).sqrt());
        }
        let fit = fit_decay_rate(&t, &y).unwrap();
        assert!((fit.eta / eta0 - 1.0).abs() < 0.05, "{} vs {eta0}", fit.eta);
    }
}
