use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coupled::CoupledOperator;
use crate::error::Result;
use crate::linalg::{axpy, SaddleSolver};

/// Applications of `𝒜` and `−𝒜⁻¹` on the divergence-free constrained space,
/// both self-adjoint in the energy inner product `⟨a, b⟩ = aᵀ𝕄_tot b`.
pub struct EnergyOperators<'a> {
    op: &'a CoupledOperator,
    inverse: SaddleSolver<f64>,
    forward: SaddleSolver<f64>,
}

impl<'a> EnergyOperators<'a> {
    pub fn new(op: &'a CoupledOperator) -> Result<Self> {
        let b = &op.blocks;
        let inverse = SaddleSolver::new(&[(1.0, &b.stiffness)], &b.div, &b.mean, op.n_z())?;
        let forward = SaddleSolver::new(&[(1.0, &op.mass_total)], &b.div, &b.mean, op.n_z())?;
        Ok(Self { op, inverse, forward })
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.op.mass_total.bilinear(a, b)
    }

    /// `y = −𝒜⁻¹x`: `𝔸y − 𝔻ᵀp = 𝕄_tot x`.
    pub fn apply_inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        let zero = vec![0.0; self.op.blocks.n_p()];
        Ok(self.inverse.solve(&self.op.mass_total.mul_vec(x), &zero)?.u)
    }

    /// `w = 𝒜x`: `𝕄_tot w − 𝔻ᵀq = −𝔸x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let zero = vec![0.0; self.op.blocks.n_p()];
        let ax: Vec<f64> = self.op.blocks.stiffness.mul_vec(x).iter().map(|v| -v).collect();
        Ok(self.forward.solve(&ax, &zero)?.u)
    }

    /// Random element of the constrained space (smoothed by one inverse application).
    pub fn random_state(&self, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..self.op.n_z()).map(|_| rng.random_range(-1.0..1.0)).collect();
        self.apply_inverse(&x)
    }
}

/// Rightmost eigenpairs of `𝒜`, eigenvalues in decreasing order.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// ‖𝒜v − μv‖ / ‖v‖ in the energy norm.
    pub residuals: Vec<f64>,
    pub krylov_dim: usize,
    pub converged: bool,
}

pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

/// Shift-invert Lanczos at zero with full reorthogonalization; the Krylov
/// dimension doubles until every requested pair meets the residual tolerance.
pub fn eigenpairs(op: &CoupledOperator, count: usize) -> Result<Eigenpairs> {
    let ops = EnergyOperators::new(op)?;
    let n = op.n_z();
    let count = count.clamp(1, n / 2);
    let mut m = (3 * count).max(30).min(n / 2);
    let cap = 400.min(n / 2);
    loop {
        let pairs = lanczos(&ops, count, m)?;
        if pairs.converged || m >= cap {
            return Ok(pairs);
        }
        m = (2 * m).min(cap);
    }
}

fn lanczos(ops: &EnergyOperators, count: usize, m: usize) -> Result<Eigenpairs> {
    let mut q = ops.random_state(11)?;
    let nq = ops.inner(&q, &q).sqrt();
    q.iter_mut().for_each(|v| *v /= nq);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let (mut alpha, mut beta) = (Vec::with_capacity(m), Vec::with_capacity(m));
    for j in 0..m {
        let mut w = ops.apply_inverse(&basis[j])?;
        let a = ops.inner(&w, &basis[j]);
        alpha.push(a);
        // two passes of classical Gram–Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = ops.inner(&w, b);
                axpy(&mut w, -c, b);
            }
        }
        let bn = ops.inner(&w, &w).sqrt();
        if j + 1 == m || bn < 1e-14 * a.abs() {
            break;
        }
        beta.push(bn);
        w.iter_mut().for_each(|v| *v /= bn);
        basis.push(w);
    }
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let take = count.min(k);
    let (mut values, mut vectors, mut residuals) = (Vec::new(), Vec::new(), Vec::new());
    for &i in order.iter().take(take) {
        let theta = eig.eigenvalues[i];
        let mut v = vec![0.0; basis[0].len()];
        for (c, b) in basis.iter().enumerate() {
            axpy(&mut v, eig.eigenvectors[(c, i)], b);
        }
        let nv = ops.inner(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        let mu = -1.0 / theta;
        let mut r = ops.apply(&v)?;
        axpy(&mut r, -mu, &v);
        residuals.push(ops.inner(&r, &r).sqrt());
        values.push(mu);
        vectors.push(v);
    }
    let converged = residuals.iter().all(|r| *r <= EIGEN_RESIDUAL_TOL);
    Ok(Eigenpairs { values, vectors, residuals, krylov_dim: k, converged })
}
