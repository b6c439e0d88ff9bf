use nalgebra::{Matrix3, Vector3};

use super::ViscosityModel;
use crate::error::Result;

/// Quasi-linear coefficients at one point,
/// `a^{kl}_{ij} = ½μ(δ_ik δ_jl + δ_il δ_jk) + 2μ′ D_ij D_kl` with μ, μ′ at `|D|²`.
///
/// Stored in the element-assembly layout: `tensor[i][l][(j, k)] = a^{kl}_{ij}`,
/// so that `∫ Σ a^{kl}_{ij} ∂ₖw_l ∂ⱼv_i` is the weak form of the tangent stress.
#[derive(Debug, Clone, Copy)]
pub struct QuasiLinearCoefficients {
    pub tensor: [[Matrix3<f64>; 3]; 3],
    pub mu: f64,
    pub mu_prime: f64,
    pub strain: Matrix3<f64>,
}

impl QuasiLinearCoefficients {
    #[inline]
    pub fn a(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.tensor[i][l][(j, k)]
    }

    /// Tangent stress `μDw + 2μ′(D:Dw)D` for a velocity gradient `grad[(l, k)] = ∂ₖw_l`.
    pub fn apply(&self, grad: &Matrix3<f64>) -> Matrix3<f64> {
        let dw = (grad + grad.transpose()) * 0.5;
        dw * self.mu + self.strain * (2.0 * self.mu_prime * self.strain.dot(&dw))
    }

    /// Legendre–Hadamard form `Σ a^{kl}_{ij} ξⱼ ξₖ ηᵢ η_l`.
    pub fn legendre_hadamard(&self, xi: &Vector3<f64>, eta: &Vector3<f64>) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for l in 0..3 {
                s += eta[i] * eta[l] * (xi.transpose() * self.tensor[i][l] * xi)[(0, 0)];
            }
        }
        s
    }
}

/// Coefficients at a point with symmetric gradient `du`.
pub fn coefficients(model: &ViscosityModel, du: &Matrix3<f64>) -> Result<QuasiLinearCoefficients> {
    let (mu, mu_prime) = model.eval(du.norm_squared())?;
    let mut tensor = [[Matrix3::zeros(); 3]; 3];
    for (i, ti) in tensor.iter_mut().enumerate() {
        for (l, til) in ti.iter_mut().enumerate() {
            for j in 0..3 {
                for k in 0..3 {
                    let mut v = 2.0 * mu_prime * du[(i, j)] * du[(k, l)];
                    if i == k && j == l {
                        v += 0.5 * mu;
                    }
                    if i == l && j == k {
                        v += 0.5 * mu;
                    }
                    til[(j, k)] = v;
                }
            }
        }
    }
    Ok(QuasiLinearCoefficients {
        tensor,
        mu,
        mu_prime,
        strain: *du,
    })
}

/// Extra stress `μ(|D|²) D`.
pub fn extra_stress(model: &ViscosityModel, d: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    Ok(d * model.eval(d.norm_squared())?.0)
}

/// Symmetric part of `Q ∇ũ J_Y`: the strain rate of `u = Qũ∘Y` at `X(y)`.
pub fn transformed_sym_gradient(grad: &Matrix3<f64>, q: &Matrix3<f64>, jy: &Matrix3<f64>) -> Matrix3<f64> {
    let g = q * grad * jy;
    (g + g.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{CutoffPsi, FlowMap, FlowOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, scale: f64) -> Matrix3<f64> {
        let m = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0) * scale);
        (m + m.transpose()) * 0.5
    }

    #[test]
    fn newtonian_coefficients_and_symmetries() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = coefficients(&ViscosityModel::newtonian(1.3), &random_sym(&mut rng, 1.0)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let want = 0.65 * (((i == k && j == l) as u8 + (i == l && j == k) as u8) as f64);
                        assert_eq!(c.a(i, j, k, l), want);
                    }
                }
            }
        }
        let c = coefficients(&ViscosityModel::carreau(1.0, 3.0), &random_sym(&mut rng, 2.0)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let a = c.a(i, j, k, l);
                        assert!((a - c.a(k, l, i, j)).abs() < 1e-15);
                        assert_eq!(a, c.a(j, i, k, l));
                        assert_eq!(a, c.a(i, j, l, k));
                    }
                }
            }
        }
    }

    #[test]
    fn legendre_hadamard_positive_on_random_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in [1.5, 3.0] {
            let m = ViscosityModel::carreau(1.0, d);
            for _ in 0..1000 {
                let scale = rng.random_range(0.0..10.0);
                let du = random_sym(&mut rng, scale);
                let c = coefficients(&m, &du).unwrap();
                let xi = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
                let eta = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
                assert!(c.legendre_hadamard(&xi, &eta) > 0.0);
            }
        }
    }

    #[test]
    fn contraction_reproduces_divergence_of_the_stress() {
        // u_l = Σ b_lmn y_m y_n + c_lm y_m, so ∂_j∂_k u_l is constant
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b: Vec<Matrix3<f64>> = (0..3).map(|_| random_sym(&mut rng, 0.5)).collect();
        let c = Matrix3::from_fn(|_, _| rng.random_range(-0.5..0.5));
        let grad = |y: &Vector3<f64>| Matrix3::from_fn(|l, k| 2.0 * (b[l] * y)[k] + c[(l, k)]);
        let model = ViscosityModel::carreau(1.0, 3.0);
        let flux = |y: &Vector3<f64>| {
            let g = grad(y);
            extra_stress(&model, &((g + g.transpose()) * 0.5)).unwrap()
        };
        let y = Vector3::new(0.3, -0.2, 0.5);
        let g = grad(&y);
        let coef = coefficients(&model, &((g + g.transpose()) * 0.5)).unwrap();
        let mut contracted = Vector3::<f64>::zeros();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        contracted[i] += coef.a(i, j, k, l) * 2.0 * b[l][(j, k)];
                    }
                }
            }
        }
        let err = |h: f64| -> f64 {
            let mut div = Vector3::<f64>::zeros();
            for j in 0..3 {
                let mut e = Vector3::zeros();
                e[j] = h;
                let d = (flux(&(y + e)) - flux(&(y - e))) / (2.0 * h);
                for i in 0..3 {
                    div[i] += d[(i, j)];
                }
            }
            (div - contracted).norm()
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        assert!(e1 < 1e-3, "{e1:e}");
        assert!((e1 / e2 - 4.0).abs() < 0.5, "order: {}", e1 / e2);
    }

    #[test]
    fn tangent_is_derivative_of_the_stress() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = ViscosityModel::carreau(0.7, 1.5);
        let d0 = random_sym(&mut rng, 1.0);
        let w = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let dw = (w + w.transpose()) * 0.5;
        let h = 1e-6;
        let fd = (extra_stress(&model, &(d0 + dw * h)).unwrap() - extra_stress(&model, &(d0 - dw * h)).unwrap()) / (2.0 * h);
        let tangent = coefficients(&model, &d0).unwrap().apply(&w);
        assert!((fd - tangent).norm() < 1e-8);
    }

    fn wobble() -> FlowMap {
        let n = 20;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * 0.05).collect();
        let l: Vec<_> = times.iter().map(|t| Vector3::new(0.1 * t.cos(), 0.05, -0.03)).collect();
        let w: Vec<_> = times.iter().map(|t| Vector3::new(0.02, -0.08 * t.cos(), 0.1)).collect();
        let psi = CutoffPsi::for_sphere(Vector3::zeros(), 4.0, 3.0);
        FlowMap::build(psi, vec![], &times, &l, &w, FlowOptions::default()).unwrap()
    }

    #[test]
    fn transformed_gradient_identity_rigid_and_pushforward() {
        let grad = Matrix3::new(0.1, 0.4, -0.3, 0.2, -0.5, 0.0, 0.7, 0.1, 0.4);
        let id = Matrix3::identity();
        let sym = (grad + grad.transpose()) * 0.5;
        assert_eq!(transformed_sym_gradient(&grad, &id, &id), sym);

        let map = wobble();
        let n = map.len() - 1;
        let q = map.q[n];
        // rigid field on the solid, where J_Y = Qᵀ
        let y_solid = Vector3::new(0.0, 0.6, 0.8);
        let jy = map.jacobians(&y_solid, n).unwrap().jy;
        let omega = crate::linalg::skew(&Vector3::new(0.3, -0.1, 0.2));
        assert!(transformed_sym_gradient(&omega, &q, &jy).norm() < 1e-10);

        // ũ(y) = G y: u(x) = Q G Y(x) and its strain at X(y) by differences
        let y = Vector3::new(2.2, 1.0, 0.7);
        let jy = map.jacobians(&y, n).unwrap().jy;
        let x = map.eval_x(&y, n).unwrap();
        let u = |x: &Vector3<f64>| q * grad * map.invert(x, n).unwrap();
        let h = 1e-4;
        let mut fd = Matrix3::zeros();
        for j in 0..3 {
            let mut e = Vector3::zeros();
            e[j] = h;
            fd.set_column(j, &((u(&(x + e)) - u(&(x - e))) / (2.0 * h)));
        }
        let fd_sym = (fd + fd.transpose()) * 0.5;
        assert!((transformed_sym_gradient(&grad, &q, &jy) - fd_sym).norm() < 1e-6);
    }
}
