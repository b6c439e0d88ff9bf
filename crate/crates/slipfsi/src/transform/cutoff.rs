use nalgebra::{Matrix3, Vector3};

/// Radial cut-off: 1 at distance ≥ `inner_margin` from the outer sphere,
/// 0 at distance ≤ `outer_margin`, septic smoothstep in between (C³, so the
/// second derivatives of the extension velocity stay Lipschitz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffPsi {
    pub center: Vector3<f64>,
    pub radius: f64,
    pub inner_margin: f64,
    pub outer_margin: f64,
}

/// Value and derivatives up to third order of ψ at a point.
#[derive(Debug, Clone, Copy)]
pub struct PsiJet {
    pub value: f64,
    pub grad: Vector3<f64>,
    pub hess: Matrix3<f64>,
    /// `third[k][(i, j)] = ∂ᵢ∂ⱼ∂ₖ ψ`.
    pub third: [Matrix3<f64>; 3],
}

fn smoothstep(t: f64) -> [f64; 4] {
    if t <= 0.0 {
        return [0.0; 4];
    }
    if t >= 1.0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let t2 = t * t;
    let u = 1.0 - t;
    [
        t2 * t2 * (35.0 - 84.0 * t + 70.0 * t2 - 20.0 * t2 * t),
        140.0 * t2 * t * u * u * u,
        420.0 * t2 * u * u * (1.0 - 2.0 * t),
        840.0 * t * u * (1.0 - 5.0 * t + 5.0 * t2),
    ]
}

impl CutoffPsi {
    /// Cut-off for an outer sphere and clearance `beta`: margins β/4 and β/8.
    pub fn for_sphere(center: Vector3<f64>, radius: f64, beta: f64) -> Self {
        Self {
            center,
            radius,
            inner_margin: beta / 4.0,
            outer_margin: beta / 8.0,
        }
    }

    /// g(r) and its first three radial derivatives.
    fn radial(&self, r: f64) -> [f64; 4] {
        let width = self.inner_margin - self.outer_margin;
        let t = (self.radius - r - self.outer_margin) / width;
        let s = smoothstep(t);
        let c = -1.0 / width;
        [s[0], s[1] * c, s[2] * c * c, s[3] * c * c * c]
    }

    pub fn value(&self, x: &Vector3<f64>) -> f64 {
        self.radial((x - self.center).norm())[0]
    }

    pub fn grad(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.jet(x).grad
    }

    pub fn jet(&self, x: &Vector3<f64>) -> PsiJet {
        let d = x - self.center;
        let r = d.norm();
        let g = self.radial(r);
        let zero = PsiJet {
            value: g[0],
            grad: Vector3::zeros(),
            hess: Matrix3::zeros(),
            third: [Matrix3::zeros(); 3],
        };
        if g[1] == 0.0 && g[2] == 0.0 && g[3] == 0.0 || r < 1e-300 {
            return zero;
        }
        let e = d / r;
        let p = Matrix3::identity() - e * e.transpose();
        let grad = e * g[1];
        let hess = e * e.transpose() * g[2] + p * (g[1] / r);
        let a = g[2] / r - g[1] / (r * r);
        let mut third = [Matrix3::zeros(); 3];
        for (k, tk) in third.iter_mut().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    tk[(i, j)] = g[3] * e[i] * e[j] * e[k]
                        + a * (p[(i, k)] * e[j] + p[(j, k)] * e[i] + p[(i, j)] * e[k]);
                }
            }
        }
        PsiJet {
            value: g[0],
            grad,
            hess,
            third,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psi() -> CutoffPsi {
        CutoffPsi::for_sphere(Vector3::zeros(), 4.0, 3.0)
    }

    #[test]
    fn plateau_values() {
        let p = psi();
        assert_eq!(p.value(&Vector3::new(0.0, 0.0, 3.25)), 1.0);
        assert_eq!(p.value(&Vector3::new(0.0, 0.0, 1.0)), 1.0);
        assert_eq!(p.value(&Vector3::new(3.7, 0.0, 0.0)), 0.0);
        let mid = p.value(&Vector3::new(0.0, 3.4375, 0.0));
        assert!((mid - 0.5).abs() < 1e-12);
        for k in 0..200 {
            let r = 3.0 + k as f64 * 0.005;
            let v = p.value(&Vector3::new(r, 0.0, 0.0));
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        let p = psi();
        let x = Vector3::new(1.9, -2.3, 1.7);
        assert!(p.value(&x) > 0.0 && p.value(&x) < 1.0);
        let j = p.jet(&x);
        let h = 1e-5;
        for k in 0..3 {
            let mut dx = Vector3::zeros();
            dx[k] = h;
            let jp = p.jet(&(x + dx));
            let jm = p.jet(&(x - dx));
            assert!(((p.value(&(x + dx)) - p.value(&(x - dx))) / (2.0 * h) - j.grad[k]).abs() < 1e-8);
            let dg = (jp.grad - jm.grad) / (2.0 * h);
            assert!((dg - j.hess.column(k)).norm() < 1e-7);
            let dh = (jp.hess - jm.hess) / (2.0 * h);
            assert!((dh - j.third[k]).norm() < 1e-5 * (1.0 + j.third[k].norm()));
        }
    }
}
