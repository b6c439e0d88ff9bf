use nalgebra::Vector3;
use rayon::prelude::*;

use super::FlowMap;
use crate::error::Result;

/// ũ(y) = Qᵀ u(X(y, tₙ)) and π̃(y) = π(X(y, tₙ)) at the given reference points.
pub fn pullback_fields<U, P>(
    u: U,
    pressure: P,
    map: &FlowMap,
    n: usize,
    points: &[Vector3<f64>],
) -> Result<(Vec<Vector3<f64>>, Vec<f64>)>
where
    U: Fn(&Vector3<f64>) -> Vector3<f64> + Sync,
    P: Fn(&Vector3<f64>) -> f64 + Sync,
{
    let qt = map.q[n].transpose();
    let out: Result<Vec<_>> = points
        .par_iter()
        .map(|y| {
            let x = map.eval_x(y, n)?;
            Ok((qt * u(&x), pressure(&x)))
        })
        .collect();
    Ok(out?.into_iter().unzip())
}

/// u(x) = Q ũ(Y(x, tₙ)) and π(x) = π̃(Y(x, tₙ)) at the given spatial points.
pub fn pushforward_fields<U, P>(
    u_ref: U,
    pressure_ref: P,
    map: &FlowMap,
    n: usize,
    points: &[Vector3<f64>],
) -> Result<(Vec<Vector3<f64>>, Vec<f64>)>
where
    U: Fn(&Vector3<f64>) -> Vector3<f64> + Sync,
    P: Fn(&Vector3<f64>) -> f64 + Sync,
{
    let q = map.q[n];
    let out: Result<Vec<_>> = points
        .par_iter()
        .map(|x| {
            let y = map.invert(x, n)?;
            Ok((q * u_ref(&y), pressure_ref(&y)))
        })
        .collect();
    Ok(out?.into_iter().unzip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{CutoffPsi, FlowOptions};

    fn map() -> FlowMap {
        let n = 20;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * 0.05).collect();
        let l: Vec<_> = times.iter().map(|t| Vector3::new(0.08, -0.02 * t, 0.03)).collect();
        let w: Vec<_> = times.iter().map(|t| Vector3::new(0.0, 0.05, 0.1 * t.cos())).collect();
        let psi = CutoffPsi::for_sphere(Vector3::zeros(), 4.0, 3.0);
        FlowMap::build(psi, vec![Vector3::x()], &times, &l, &w, FlowOptions::default()).unwrap()
    }

    #[test]
    fn identity_at_time_zero() {
        let m = map();
        let pts = vec![Vector3::new(1.5, 0.2, -0.3)];
        let u = |x: &Vector3<f64>| Vector3::new(x.y, x.z * x.x, 1.0);
        let (ut, pt) = pullback_fields(u, |x| x.norm(), &m, 0, &pts).unwrap();
        assert_eq!(ut[0], u(&pts[0]));
        assert_eq!(pt[0], pts[0].norm());
    }

    #[test]
    fn rigid_field_pulls_back_to_body_frame_velocities() {
        let m = map();
        let n = m.len() - 1;
        let motion = m.motion(n);
        let pts: Vec<_> = [Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, -0.6, 0.8), Vector3::new(0.0, 0.0, 1.0)].to_vec();
        let (ut, _) = pullback_fields(|x| motion.velocity(x), |_| 0.0, &m, n, &pts).unwrap();
        for (y, v) in pts.iter().zip(&ut) {
            let expect = m.l_body[n] + m.omega_body[n].cross(y);
            assert!((v - expect).norm() < 1e-11);
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let m = map();
        let n = m.len() - 1;
        let f = |y: &Vector3<f64>| Vector3::new(y.x.sin(), y.y * y.z, (0.3 * y.x).exp());
        let g = |y: &Vector3<f64>| y.x - 2.0 * y.z;
        let ys = [Vector3::new(2.0, 0.5, -0.4), Vector3::new(-1.2, 2.1, 1.1), Vector3::new(0.3, 0.2, 3.5)];
        let xs: Vec<_> = ys.iter().map(|y| m.eval_x(y, n).unwrap()).collect();
        let (u, p) = pushforward_fields(f, g, &m, n, &xs).unwrap();
        let ui = u.clone();
        let lookup = |x: &Vector3<f64>| {
            let k = xs.iter().position(|z| (z - x).norm() < 1e-9).unwrap();
            ui[k]
        };
        let (back, _) = pullback_fields(lookup, |_| 0.0, &m, n, &ys).unwrap();
        for (k, y) in ys.iter().enumerate() {
            assert!((back[k] - f(y)).norm() < 1e-9);
            assert!((p[k] - g(y)).abs() < 1e-9);
        }
    }
}
