use super::StokesBlocks;
use crate::error::{Error, Result};
use crate::linalg::{norm2, SaddleSolver};

/// Steady Stokes problem with prescribed rigid data ξ = (l, ω): zero velocity
/// on the outer wall, u·n = (l + ω×y)·n and Navier slip on the solid.
pub struct SteadyLifting {
    solver: SaddleSolver<f64>,
}

/// Lifted field `z` (with ξ in its last six entries) and pressure.
#[derive(Debug, Clone)]
pub struct Lifted {
    pub z: Vec<f64>,
    pub pressure: Vec<f64>,
}

impl SteadyLifting {
    pub fn new(blocks: &StokesBlocks) -> Result<Self> {
        let solver = SaddleSolver::new(&[(1.0, &blocks.stiffness)], &blocks.div, &blocks.mean, blocks.n_fluid())?;
        Ok(Self { solver })
    }

    pub fn solve(&self, blocks: &StokesBlocks, xi: &[f64; 6]) -> Result<Lifted> {
        let nf = blocks.n_fluid();
        let rigid = blocks.dofs.rigid_only(xi);
        let f: Vec<f64> = blocks.stiffness.mul_vec(&rigid)[..nf].iter().map(|v| -v).collect();
        let g: Vec<f64> = blocks.div.mul_vec(&rigid).iter().map(|v| -v).collect();
        let sol = self.solver.solve(&f, &g)?;
        let mut z = sol.u;
        z.extend_from_slice(xi);
        let res = stokes_residual(blocks, &z, &sol.p);
        let scale = norm2(&f).max(norm2(&g)).max(1e-300);
        if res > 1e-8 * scale.max(1.0) {
            return Err(Error::Solver(format!("steady lifting residual {res:e}")));
        }
        Ok(Lifted { z, pressure: sol.p })
    }
}

/// S(l, ω) and its pressure.
pub fn solve_steady_lifting(blocks: &StokesBlocks, l: [f64; 3], omega: [f64; 3]) -> Result<Lifted> {
    let xi = [l[0], l[1], l[2], omega[0], omega[1], omega[2]];
    SteadyLifting::new(blocks)?.solve(blocks, &xi)
}

/// ‖(𝔸z − 𝔻ᵀp)_fluid‖ + ‖𝔻z − κm‖ with κ the least-squares multiplier.
pub fn stokes_residual(blocks: &StokesBlocks, z: &[f64], p: &[f64]) -> f64 {
    let nf = blocks.n_fluid();
    let az = blocks.stiffness.mul_vec(z);
    let dtp = blocks.div.tmul_vec(p);
    let r1: Vec<f64> = (0..nf).map(|i| az[i] - dtp[i]).collect();
    let dz = blocks.div.mul_vec(z);
    let mm: f64 = blocks.mean.iter().map(|m| m * m).sum();
    let kappa = dz.iter().zip(&blocks.mean).map(|(a, b)| a * b).sum::<f64>() / mm;
    let r2: Vec<f64> = dz.iter().zip(&blocks.mean).map(|(a, b)| a - kappa * b).collect();
    norm2(&r1) + norm2(&r2)
}
