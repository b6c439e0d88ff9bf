use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};

use super::{Csr, Scalar};
use crate::error::{Error, Result};

/// Sparse LU of a general square system assembled from real blocks with
/// scalar coefficients.
pub struct SparseLu<T: Scalar> {
    n: usize,
    lu: Lu<usize, T>,
}

impl<T: Scalar> SparseLu<T> {
    pub fn from_triplets(n: usize, trip: Vec<Triplet<usize, usize, T>>) -> Result<Self> {
        let a = SparseColMat::<usize, T>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::Solver(format!("matrix construction: {e:?}")))?;
        let lu = a
            .sp_lu()
            .map_err(|e| Error::Solver(format!("LU factorization: {e:?}")))?;
        Ok(Self { n, lu })
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        assert_eq!(rhs.len(), self.n);
        let b = Mat::<T>::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = self.lu.solve(&b);
        let out: Vec<T> = (0..self.n).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite_s()) {
            return Err(Error::Solver("non-finite solution (singular system)".into()));
        }
        Ok(out)
    }
}

/// Factorized saddle-point system
///
/// ```text
/// [ H   -Dᵀ  0 ] [u]   [ f ]
/// [ -D   0   m ] [p] = [-g ]
/// [ 0    mᵀ  0 ] [κ]   [ 0 ]
/// ```
///
/// i.e. `H u - Dᵀp = f`, `D u = g + κ m`, `mᵀp = 0`. The velocity unknowns are
/// the leading `n_u` columns of the blocks; trailing columns of `D` are
/// treated as prescribed and must be moved to the right-hand side by the
/// caller.
pub struct SaddleSolver<T: Scalar> {
    pub n_u: usize,
    pub n_p: usize,
    lu: SparseLu<T>,
}

/// Solution of a saddle solve: velocity, pressure and the mean multiplier.
#[derive(Debug, Clone)]
pub struct SaddleSolution<T> {
    pub u: Vec<T>,
    pub p: Vec<T>,
    pub kappa: T,
}

impl<T: Scalar> SaddleSolver<T> {
    pub fn new(h_terms: &[(T, &Csr)], div: &Csr, mean: &[f64], n_u: usize) -> Result<Self> {
        let n_p = div.nrows;
        assert_eq!(mean.len(), n_p);
        let n = n_u + n_p + 1;
        let mut trip = Vec::new();
        for (s, a) in h_terms {
            for r in 0..n_u {
                for (c, v) in a.row(r) {
                    if c < n_u {
                        trip.push(Triplet::new(r, c, *s * v));
                    }
                }
            }
        }
        for p in 0..n_p {
            for (c, v) in div.row(p) {
                if c < n_u {
                    trip.push(Triplet::new(c, n_u + p, T::from(-v)));
                    trip.push(Triplet::new(n_u + p, c, T::from(-v)));
                }
            }
            trip.push(Triplet::new(n_u + p, n - 1, T::from(mean[p])));
            trip.push(Triplet::new(n - 1, n_u + p, T::from(mean[p])));
        }
        let lu = SparseLu::from_triplets(n, trip)?;
        Ok(Self { n_u, n_p, lu })
    }

    pub fn solve(&self, f: &[T], g: &[T]) -> Result<SaddleSolution<T>> {
        assert_eq!(f.len(), self.n_u);
        assert_eq!(g.len(), self.n_p);
        let mut rhs = Vec::with_capacity(self.n_u + self.n_p + 1);
        rhs.extend_from_slice(f);
        rhs.extend(g.iter().map(|&v| -v));
        rhs.push(T::zero());
        let x = self.lu.solve(&rhs)?;
        Ok(SaddleSolution {
            u: x[..self.n_u].to_vec(),
            p: x[self.n_u..self.n_u + self.n_p].to_vec(),
            kappa: x[self.n_u + self.n_p],
        })
    }
}
