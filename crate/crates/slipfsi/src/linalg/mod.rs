//! Sparse storage, direct solvers and small dense helpers.

mod saddle;
mod sparse;

pub use saddle::{SaddleSolution, SaddleSolver, SparseLu};
pub use sparse::{add, axpy, dot, norm2, scale, sub, Csr, Triplets};

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use faer::c64;
use nalgebra::{Matrix3, Vector3};

/// Field over which the direct solvers run: `f64` or `c64`.
pub trait Scalar:
    faer::traits::ComplexField
    + Copy
    + Send
    + Sync
    + Debug
    + From<f64>
    + num_traits::Zero
    + Add<Output = Self>
    + AddAssign
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn modulus_sq(self) -> f64;
    fn conjugate(self) -> Self;
    fn is_finite_s(self) -> bool;
}

impl Scalar for f64 {
    fn modulus_sq(self) -> f64 {
        self * self
    }
    fn conjugate(self) -> Self {
        self
    }
    fn is_finite_s(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for c64 {
    fn modulus_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn conjugate(self) -> Self {
        self.conj()
    }
    fn is_finite_s(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Skew matrix with `skew(a) * b = a × b`.
pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Nearest rotation via polar decomposition (SVD).
pub fn polar_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut r = u * vt;
    if r.determinant() < 0.0 {
        let mut u2 = u;
        u2.column_mut(2).neg_mut();
        r = u2 * vt;
    }
    r
}

/// Cofactor matrix, so that `cof(A)ᵀ = det(A) A⁻¹`.
pub fn cofactor(a: &Matrix3<f64>) -> Matrix3<f64> {
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| a[(r0, c0)] * a[(r1, c1)] - a[(r0, c1)] * a[(r1, c0)];
    Matrix3::new(
        c(1, 2, 1, 2),
        -c(1, 2, 0, 2),
        c(1, 2, 0, 1),
        -c(0, 2, 1, 2),
        c(0, 2, 0, 2),
        -c(0, 2, 0, 1),
        c(0, 1, 1, 2),
        -c(0, 1, 0, 2),
        c(0, 1, 0, 1),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cofactor_gives_adjugate() {
        let a = Matrix3::new(2.0, 1.0, 0.5, -1.0, 3.0, 0.2, 0.3, 0.1, 1.5);
        let inv = a.try_inverse().unwrap();
        let adj = cofactor(&a).transpose();
        assert!((adj - inv * a.determinant()).norm() < 1e-12);
    }

    #[test]
    fn polar_rotation_is_orthogonal() {
        let a = Matrix3::new(1.0, 0.01, 0.0, -0.02, 1.0, 0.003, 0.0, 0.0, 0.999);
        let r = polar_rotation(&a);
        assert!((r.transpose() * r - Matrix3::identity()).norm() < 1e-14);
        assert!((r.determinant() - 1.0).abs() < 1e-14);
        assert!((r - a).norm() < 0.05);
    }

    #[test]
    fn skew_is_cross_product() {
        let a = Vector3::new(1.0, -2.0, 0.5);
        let b = Vector3::new(0.3, 0.7, -1.1);
        assert!((skew(&a) * b - a.cross(&b)).norm() < 1e-15);
    }
}
