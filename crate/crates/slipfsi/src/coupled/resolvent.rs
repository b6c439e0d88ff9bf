use faer::c64;
use nalgebra::{Matrix6, Vector6};

use super::CoupledOperator;
use crate::error::{Error, Result};
use crate::linalg::SaddleSolver;

/// Solution of `(λ − 𝒜)(z) = data` with its zero-mean pressure.
#[derive(Debug, Clone)]
pub struct ResolventSolution {
    pub z: Vec<c64>,
    pub pressure: Vec<c64>,
}

impl ResolventSolution {
    pub fn xi(&self, n_fluid: usize) -> &[c64] {
        &self.z[n_fluid..]
    }
}

fn to_c(v: &[f64]) -> Vec<c64> {
    v.iter().map(|&x| c64::new(x, 0.0)).collect()
}

fn split_parts(v: &[c64]) -> (Vec<f64>, Vec<f64>) {
    (v.iter().map(|x| x.re).collect(), v.iter().map(|x| x.im).collect())
}

fn singular(lambda: c64, what: &str) -> Error {
    if lambda.re >= 0.0 {
        Error::Invariant(format!("resolvent at λ = {lambda} is singular ({what}) although Re λ ≥ 0"))
    } else {
        Error::Solver(format!("resolvent at λ = {lambda} is singular ({what})"))
    }
}

/// Block solve: fluid problems on the divergence-free subspace for the load
/// and for each rigid mode, then the 6×6 Schur system
/// `(λK − C₂ − C₁W)ξ = EᵀF + C₁W₀`, and `z = W₀ + Wξ + Eξ`.
/// `load` is the z-space right-hand side (see [`CoupledOperator::load`]).
pub fn solve_resolvent(op: &CoupledOperator, lambda: c64, load: &[c64]) -> Result<ResolventSolution> {
    let b = &op.blocks;
    let nf = op.n_fluid();
    let np = b.n_p();
    let fluid = SaddleSolver::<c64>::new(&[(lambda, &b.mass), (c64::new(1.0, 0.0), &b.stiffness)], &b.div, &b.mean, nf)
        .map_err(|_| singular(lambda, "fluid block"))?;
    let zero_p = vec![c64::new(0.0, 0.0); np];
    let w0 = fluid.solve(&load[..nf], &zero_p).map_err(|_| singular(lambda, "fluid block"))?.u;
    let mut w = Vec::with_capacity(6);
    for row in &op.c1_rows {
        // the fluid row of 𝔸E_j is −C₁ row j
        w.push(fluid.solve(&to_c(row), &zero_p)?.u);
    }
    let dotc = |a: &[f64], x: &[c64]| a.iter().zip(x).fold(c64::new(0.0, 0.0), |s, (p, q)| s + *q * *p);
    let kc = op.k.map(|x| c64::new(x, 0.0));
    let c2 = op.c2.map(|x| c64::new(x, 0.0));
    let mut schur = kc * lambda - c2;
    let mut rhs = Vector6::<c64>::zeros();
    for i in 0..6 {
        for j in 0..6 {
            schur[(i, j)] -= dotc(&op.c1_rows[i], &w[j]);
        }
        rhs[i] = dotc(&op.added_mass.modes[i], load) + dotc(&op.c1_rows[i], &w0);
    }
    let xi = schur.lu().solve(&rhs).ok_or_else(|| singular(lambda, "rigid Schur complement"))?;
    let mut z = w0;
    z.extend(std::iter::repeat_n(c64::new(0.0, 0.0), 6));
    for j in 0..6 {
        for (zi, wi) in z.iter_mut().zip(&w[j]) {
            *zi += *wi * xi[j];
        }
        for (zi, &ei) in z.iter_mut().zip(&op.added_mass.modes[j]) {
            *zi += xi[j] * ei;
        }
    }
    let rate: Vec<c64> = xi.iter().map(|x| *x * lambda).collect();
    let pressure = reconstruct_pressure_c(op, &z, &rate, load)?;
    Ok(ResolventSolution { z, pressure })
}

/// Complex pressure reconstruction through the real mass saddle.
pub fn reconstruct_pressure_c(op: &CoupledOperator, z: &[c64], xi_rate: &[c64], load: &[c64]) -> Result<Vec<c64>> {
    let (zr, zi) = split_parts(z);
    let (rr, ri) = split_parts(xi_rate);
    let (lr, li) = split_parts(load);
    let pr = op.reconstruct_pressure(&zr, &rr, &lr)?;
    let pi = op.reconstruct_pressure(&zi, &ri, &li)?;
    Ok(pr.into_iter().zip(pi).map(|(a, b)| c64::new(a, b)).collect())
}

/// Primitive monolithic solve of `λ𝕄_tot z + 𝔸z − 𝔻ᵀp = F`, `𝔻z = κm`,
/// `mᵀp = 0` over velocity and rigid unknowns at once.
pub fn solve_primitive(op: &CoupledOperator, lambda: c64, load: &[c64]) -> Result<ResolventSolution> {
    let b = &op.blocks;
    let s = SaddleSolver::<c64>::new(
        &[(lambda, &op.mass_total), (c64::new(1.0, 0.0), &b.stiffness)],
        &b.div,
        &b.mean,
        op.n_z(),
    )
    .map_err(|_| singular(lambda, "primitive system"))?;
    let sol = s
        .solve(load, &vec![c64::new(0.0, 0.0); b.n_p()])
        .map_err(|_| singular(lambda, "primitive system"))?;
    Ok(ResolventSolution { z: sol.u, pressure: sol.p })
}

/// Residual ‖λ𝕄_tot z + 𝔸z − 𝔻ᵀp − F‖ relative to ‖F‖.
pub fn resolvent_residual(op: &CoupledOperator, lambda: c64, load: &[c64], sol: &ResolventSolution) -> f64 {
    let mz = op.mass_total.mul_vec(&sol.z);
    let az = op.blocks.stiffness.mul_vec(&sol.z);
    let dtp = op.blocks.div.tmul_vec(&sol.pressure);
    let mut r = 0.0;
    let mut f = 0.0;
    for i in 0..op.n_z() {
        r += (mz[i] * lambda + az[i] - dtp[i] - load[i]).norm_sqr();
        f += load[i].norm_sqr();
    }
    (r / f.max(1e-300)).sqrt()
}

/// Dense helper for the rigid block; exposed for diagnostics.
pub fn rigid_schur_real(op: &CoupledOperator, lambda: f64) -> Matrix6<f64> {
    op.k * lambda - op.c2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled::operator::tests::small_operator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: &[c64], b: &[c64]) -> f64 {
        let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let n: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (d / n.max(1e-300)).sqrt()
    }

    #[test]
    fn block_and_primitive_solves_agree() {
        let op = small_operator();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3 {
            let lambda = c64::new(rng.random_range(0.0..5.0), rng.random_range(-5.0..5.0));
            let f: Vec<f64> = (0..op.blocks.dofs.n_full()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let load = to_c(&op.load(Some(&f), &g));
            let a = solve_resolvent(&op, lambda, &load).unwrap();
            let b = solve_primitive(&op, lambda, &load).unwrap();
            assert!(rel(&a.z, &b.z) < 1e-9, "{}", rel(&a.z, &b.z));
            assert!(rel(&a.pressure, &b.pressure) < 1e-8, "{}", rel(&a.pressure, &b.pressure));
            assert!(resolvent_residual(&op, lambda, &load, &a) < 1e-9);
        }
    }

    #[test]
    fn homogeneous_data_gives_zero_and_scaling_is_linear() {
        let op = small_operator();
        let zero = vec![c64::new(0.0, 0.0); op.n_z()];
        let s = solve_resolvent(&op, c64::new(0.0, 1.0), &zero).unwrap();
        assert!(s.z.iter().all(|x| x.norm() < 1e-14));
        let g = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let load = to_c(&op.load(None, &g));
        let a = solve_resolvent(&op, c64::new(0.0, 0.0), &load).unwrap();
        let load2: Vec<c64> = load.iter().map(|x| x * 2.0).collect();
        let b = solve_resolvent(&op, c64::new(0.0, 0.0), &load2).unwrap();
        let a2: Vec<c64> = a.z.iter().map(|x| x * 2.0).collect();
        assert!(rel(&b.z, &a2) < 1e-12);
        // steady mobility: a pushed body moves along the force
        assert!(a.xi(op.n_fluid())[0].re > 0.0);
        assert!(resolvent_residual(&op, c64::new(0.0, 0.0), &load, &a) < 1e-9);
    }
}
