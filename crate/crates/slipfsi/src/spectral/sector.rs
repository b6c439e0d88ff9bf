use faer::c64;
use serde::Serialize;

use crate::coupled::CoupledOperator;
use crate::error::Result;
use crate::linalg::SaddleSolver;

/// Sample points for resolvent bounds: rays at the given angles from the
/// positive real axis (|angle| ≤ π/2) and log-spaced moduli.
#[derive(Debug, Clone, Serialize)]
pub struct SectorGrid {
    pub moduli: Vec<f64>,
    pub angles: Vec<f64>,
}

impl SectorGrid {
    /// `n_mod` moduli in `[1e-3, 1e3]` on the rays 0, ±π/4, ±π/2.
    pub fn right_half_plane(n_mod: usize) -> Self {
        let n = n_mod.max(2);
        let moduli = (0..n).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / (n - 1) as f64)).collect();
        let q = std::f64::consts::FRAC_PI_4;
        Self { moduli, angles: vec![0.0, q, -q, 2.0 * q, -2.0 * q] }
    }

    pub fn points(&self) -> Vec<c64> {
        let mut out = Vec::new();
        for &r in &self.moduli {
            for &a in &self.angles {
                out.push(c64::from_polar(r, a));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SectorSample {
    pub re: f64,
    pub im: f64,
    /// `None` when the shifted system could not be solved.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SectorBound {
    pub sup: f64,
    pub samples: Vec<SectorSample>,
}

const POWER_STEPS: usize = 30;

/// ‖λ(λ − 𝒜)⁻¹‖ in the energy norm by power iteration; `𝒜` is normal in this
/// norm so the iteration converges to the operator norm from below.
pub fn resolvent_norm(op: &CoupledOperator, lambda: c64, start: &[f64]) -> Result<f64> {
    let b = &op.blocks;
    let one = c64::new(1.0, 0.0);
    let solver = SaddleSolver::<c64>::new(&[(lambda, &op.mass_total), (one, &b.stiffness)], &b.div, &b.mean, op.n_z())?;
    let zero = vec![c64::new(0.0, 0.0); b.n_p()];
    let norm = |x: &[c64]| -> f64 {
        let mx = op.mass_total.mul_vec(x);
        mx.iter().zip(x).map(|(a, b)| (a * b.conj()).re).sum::<f64>().sqrt()
    };
    let mut y: Vec<c64> = start.iter().map(|&v| c64::new(v, 0.0)).collect();
    let n0 = norm(&y);
    y.iter_mut().for_each(|v| *v /= n0);
    let mut est = 0.0;
    for _ in 0..POWER_STEPS {
        let x = solver.solve(&op.mass_total.mul_vec(&y), &zero)?.u;
        let ry: Vec<c64> = x.iter().map(|v| v * lambda).collect();
        let nr = norm(&ry);
        if !nr.is_finite() {
            return Err(crate::error::Error::Solver(format!("resolvent blew up at λ = {lambda}")));
        }
        est = nr;
        y = ry.into_iter().map(|v| v / nr).collect();
    }
    Ok(est)
}

pub fn sector_bound(op: &CoupledOperator, grid: &SectorGrid, start: &[f64]) -> SectorBound {
    let samples: Vec<SectorSample> = grid
        .points()
        .into_iter()
        .map(|l| SectorSample {
            re: l.re,
            im: l.im,
            bound: resolvent_norm(op, l, start).ok(),
        })
        .collect();
    let sup = samples.iter().filter_map(|s| s.bound).fold(0.0, f64::max);
    SectorBound { sup, samples }
}
