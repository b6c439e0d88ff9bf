use nalgebra::{Matrix3, Vector3};

use super::CutoffPsi;

/// Spatial rigid motion: center `h`, translational velocity `l` and angular
/// velocity `omega`, all in the fixed frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidMotion {
    pub h: Vector3<f64>,
    pub l: Vector3<f64>,
    pub omega: Vector3<f64>,
}

impl RigidMotion {
    pub fn velocity(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.l + self.omega.cross(&(x - self.h))
    }
}

/// Auxiliary field w(x) = l × (x − h) + ½|x − h|² ω.
pub fn eval_w(m: &RigidMotion, x: &Vector3<f64>) -> Vector3<f64> {
    let r = x - m.h;
    m.l.cross(&r) + m.omega * (0.5 * r.norm_squared())
}

/// Vector potential of the rigid field: curl A = l + ω × (x − h).
pub fn vector_potential(m: &RigidMotion, x: &Vector3<f64>) -> Vector3<f64> {
    let r = x - m.h;
    m.l.cross(&r) * 0.5 - m.omega * (0.5 * r.norm_squared())
}

/// Extension velocity Λ = curl(ψ A) = ψ (l + ω×(x−h)) + ∇ψ × A.
/// Rigid where ψ = 1, zero where ψ = 0, and divergence-free everywhere.
pub fn eval_lambda(m: &RigidMotion, x: &Vector3<f64>, psi: &CutoffPsi) -> Vector3<f64> {
    let j = psi.jet(x);
    m.velocity(x) * j.value + j.grad.cross(&vector_potential(m, x))
}

/// Λ with its first and second spatial derivatives.
#[derive(Debug, Clone, Copy)]
pub struct LambdaJet {
    pub value: Vector3<f64>,
    /// `grad[(i, m)] = ∂ₘ Λᵢ`.
    pub grad: Matrix3<f64>,
    /// `hess[i][(m, n)] = ∂ₘ∂ₙ Λᵢ`.
    pub hess: [Matrix3<f64>; 3],
}

/// Nonzero Levi-Civita entries (i, j, k, ε_ijk).
const PERMS: [(usize, usize, usize, f64); 6] = [
    (0, 1, 2, 1.0),
    (1, 2, 0, 1.0),
    (2, 0, 1, 1.0),
    (0, 2, 1, -1.0),
    (2, 1, 0, -1.0),
    (1, 0, 2, -1.0),
];

pub fn lambda_jet(m: &RigidMotion, x: &Vector3<f64>, psi: &CutoffPsi, second: bool) -> LambdaJet {
    let pj = psi.jet(x);
    let r = x - m.h;
    let v = m.velocity(x);
    let a = vector_potential(m, x);
    // dv[(i, m)] = ∂ₘ vᵢ = ε_{i p m} ω_p
    let dv = crate::linalg::skew(&m.omega);
    // da[(k, m)] = ∂ₘ A_k = ½ ε_{k a m} l_a − r_m ω_k
    let da = crate::linalg::skew(&m.l) * 0.5 - m.omega * r.transpose();
    let value = v * pj.value + pj.grad.cross(&a);
    if pj.grad == Vector3::zeros() && pj.hess == Matrix3::zeros() {
        return LambdaJet {
            value,
            grad: dv * pj.value,
            hess: [Matrix3::zeros(); 3],
        };
    }
    let mut grad = v * pj.grad.transpose() + dv * pj.value;
    for &(i, j, k, s) in &PERMS {
        for mm in 0..3 {
            grad[(i, mm)] += s * (pj.hess[(mm, j)] * a[k] + pj.grad[j] * da[(k, mm)]);
        }
    }
    let mut hess = [Matrix3::zeros(); 3];
    if second {
        for (i, hi) in hess.iter_mut().enumerate() {
            for mm in 0..3 {
                for n in 0..3 {
                    hi[(mm, n)] = pj.hess[(mm, n)] * v[i] + pj.grad[mm] * dv[(i, n)] + pj.grad[n] * dv[(i, mm)];
                }
            }
        }
        for &(i, j, k, s) in &PERMS {
            for mm in 0..3 {
                for n in 0..3 {
                    let d2a = if mm == n { -m.omega[k] } else { 0.0 };
                    hess[i][(mm, n)] += s
                        * (pj.third[n][(j, mm)] * a[k]
                            + pj.hess[(mm, j)] * da[(k, n)]
                            + pj.hess[(n, j)] * da[(k, mm)]
                            + pj.grad[j] * d2a);
                }
            }
        }
    }
    LambdaJet { value, grad, hess }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psi() -> CutoffPsi {
        CutoffPsi::for_sphere(Vector3::zeros(), 4.0, 3.0)
    }

    fn motion() -> RigidMotion {
        RigidMotion {
            h: Vector3::new(0.1, -0.05, 0.02),
            l: Vector3::new(1.0, 0.0, 0.0),
            omega: Vector3::new(0.0, 1.0, 0.0),
        }
    }

    #[test]
    fn w_examples() {
        let zero = RigidMotion::default();
        assert_eq!(eval_w(&zero, &Vector3::new(1.0, 2.0, 3.0)), Vector3::zeros());
        let m = motion();
        assert_eq!(eval_w(&m, &m.h), Vector3::zeros());
        let m2 = RigidMotion {
            h: Vector3::zeros(),
            l: Vector3::x(),
            omega: Vector3::zeros(),
        };
        assert_eq!(eval_w(&m2, &Vector3::y()), Vector3::z());
    }

    #[test]
    fn rigid_inside_and_zero_near_wall() {
        let m = motion();
        let x = Vector3::new(0.5, 1.2, -0.7);
        assert!((eval_lambda(&m, &x, &psi()) - m.velocity(&x)).norm() < 1e-15);
        let y = Vector3::new(0.0, 3.7, 0.0);
        assert_eq!(eval_lambda(&m, &y, &psi()), Vector3::zeros());
    }

    /// Independent evaluation: central-difference curl of ψ·A.
    fn curl_oracle(m: &RigidMotion, x: &Vector3<f64>, h: f64) -> Vector3<f64> {
        let f = |p: Vector3<f64>| vector_potential(m, &p) * psi().value(&p);
        let d = |k: usize, c: usize| {
            let mut e = Vector3::zeros();
            e[k] = h;
            (f(x + e)[c] - f(x - e)[c]) / (2.0 * h)
        };
        Vector3::new(d(1, 2) - d(2, 1), d(2, 0) - d(0, 2), d(0, 1) - d(1, 0))
    }

    #[test]
    fn transition_value_matches_curl_oracle() {
        let m = motion();
        let x = Vector3::new(2.0, 1.5, 2.2);
        let r = x.norm();
        assert!(r > 3.25 && r < 3.625);
        let got = eval_lambda(&m, &x, &psi());
        let want = curl_oracle(&m, &x, 1e-5);
        assert!((got - want).norm() < 1e-7 * (1.0 + want.norm()));
    }

    #[test]
    fn jet_matches_finite_differences() {
        let m = motion();
        let x = Vector3::new(2.0, 1.5, 2.2);
        let j = lambda_jet(&m, &x, &psi(), true);
        let h = 1e-5;
        for k in 0..3 {
            let mut e = Vector3::zeros();
            e[k] = h;
            let jp = lambda_jet(&m, &(x + e), &psi(), false);
            let jm = lambda_jet(&m, &(x - e), &psi(), false);
            let dl = (jp.value - jm.value) / (2.0 * h);
            assert!((dl - j.grad.column(k)).norm() < 1e-6 * (1.0 + dl.norm()));
            let dg = (jp.grad - jm.grad) / (2.0 * h);
            for i in 0..3 {
                for mm in 0..3 {
                    assert!((dg[(i, mm)] - j.hess[i][(mm, k)]).abs() < 1e-5 * (1.0 + dg.norm()));
                }
            }
        }
        assert!(j.grad.trace().abs() < 1e-12, "analytic divergence must vanish");
    }
}
