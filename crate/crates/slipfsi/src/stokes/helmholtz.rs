use super::StokesBlocks;
use crate::error::Result;
use crate::linalg::{sub, SaddleSolver};

/// Discrete Helmholtz projection: the L²-orthogonal projection onto fluid
/// fields with zero rigid data and divergence orthogonal to mean-zero pressures.
pub struct HelmholtzProjector {
    solver: SaddleSolver<f64>,
    n_fluid: usize,
    n_p: usize,
    mass: crate::linalg::Csr,
}

/// Result of a projection `f = Pf + (f − Pf)`, with the pressure-like potential.
#[derive(Debug, Clone)]
pub struct Projection {
    pub projected: Vec<f64>,
    pub gradient_part: Vec<f64>,
    pub potential: Vec<f64>,
}

impl HelmholtzProjector {
    pub fn new(blocks: &StokesBlocks) -> Result<Self> {
        let n_fluid = blocks.n_fluid();
        let solver = SaddleSolver::new(&[(1.0, &blocks.mass)], &blocks.div, &blocks.mean, n_fluid)?;
        Ok(Self {
            solver,
            n_fluid,
            n_p: blocks.n_p(),
            mass: blocks.mass.leading(n_fluid, n_fluid),
        })
    }

    /// Projects a fluid-dof vector (length `n_fluid`).
    pub fn project(&self, f: &[f64]) -> Result<Projection> {
        let rhs = self.mass.mul_vec(f);
        let sol = self.solver.solve(&rhs, &vec![0.0; self.n_p])?;
        Ok(Projection {
            gradient_part: sub(f, &sol.u),
            projected: sol.u,
            potential: sol.p,
        })
    }

    pub fn n_fluid(&self) -> usize {
        self.n_fluid
    }
}

/// One-shot projection of a fluid-dof vector.
pub fn helmholtz_project(blocks: &StokesBlocks, f: &[f64]) -> Result<Projection> {
    HelmholtzProjector::new(blocks)?.project(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_reference_geometry;
    use crate::linalg::{dot, norm2, SparseLu};
    use crate::stokes::assemble_stokes;
    use faer::sparse::Triplet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (StokesBlocks, HelmholtzProjector) {
        let d = make_reference_geometry(1.0, 4.0, 0).unwrap();
        let b = assemble_stokes(&d, 1.0).unwrap();
        let h = HelmholtzProjector::new(&b).unwrap();
        (b, h)
    }

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn idempotent_and_contractive() {
        let (b, h) = setup();
        let f = random(b.n_fluid(), 1);
        let p1 = h.project(&f).unwrap().projected;
        let p2 = h.project(&p1).unwrap().projected;
        assert!(norm2(&sub(&p1, &p2)) < 1e-10 * norm2(&p1));
        let m = b.mass.leading(b.n_fluid(), b.n_fluid());
        assert!(m.bilinear(&p1, &p1) <= m.bilinear(&f, &f));
        // projected field is discretely divergence-free against mean-zero pressures
        let mut z = p1.clone();
        z.extend([0.0; 6]);
        let d = b.div.mul_vec(&z);
        let q = random(b.n_p(), 2);
        let qbar = dot(&q, &b.mean) / b.mean.iter().sum::<f64>();
        let q0: Vec<f64> = q.iter().map(|v| v - qbar).collect();
        assert!(dot(&q0, &d).abs() < 1e-10);
    }

    #[test]
    fn discrete_gradient_is_annihilated() {
        let (b, h) = setup();
        let nf = b.n_fluid();
        // f = M⁻¹ 𝔻ᵀ q is a discrete gradient
        let q = random(b.n_p(), 3);
        let dt = b.div.leading(b.n_p(), nf).transpose().mul_vec(&q);
        let m = b.mass.leading(nf, nf);
        let trip: Vec<_> = m.iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        let f = SparseLu::from_triplets(nf, trip).unwrap().solve(&dt).unwrap();
        let pf = h.project(&f).unwrap().projected;
        assert!(norm2(&pf) < 1e-9 * norm2(&f));
    }

    #[test]
    fn residual_is_orthogonal_to_solenoidal_fields() {
        let (b, h) = setup();
        let nf = b.n_fluid();
        let m = b.mass.leading(nf, nf);
        let f = random(nf, 4);
        let pr = h.project(&f).unwrap();
        for seed in 10..15 {
            let v = h.project(&random(nf, seed)).unwrap().projected;
            let ip = m.bilinear(&pr.gradient_part, &v);
            assert!(ip.abs() < 1e-10 * (1.0 + norm2(&f) * norm2(&v)));
        }
    }
}
