use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use super::lambda::{lambda_jet, RigidMotion};
use super::CutoffPsi;
use crate::error::{Error, Result};
use crate::geometry::{RigidState, ROTATION_DRIFT_TOL};
use crate::linalg::{cofactor, polar_rotation, skew};

/// Integration controls for the flow map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    /// Allowed growth of |det J_X − 1| over one grid interval.
    pub det_tol: f64,
    /// Step-doubling tolerance on X and J_X per grid interval.
    pub local_tol: f64,
    /// Largest number of RK4 substeps per grid interval (a power of two).
    pub max_substeps: usize,
    /// Also integrate ∂²X/∂y² at the sample points.
    pub second_derivatives: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            det_tol: 1e-12,
            local_tol: 1e-11,
            max_substeps: 256,
            second_derivatives: false,
        }
    }
}

/// Time-indexed flow map X(y, t) of the extension velocity, sampled at a
/// fixed set of reference points, together with the rigid motion.
#[derive(Debug, Clone)]
pub struct FlowMap {
    pub psi: CutoffPsi,
    pub opts: FlowOptions,
    pub times: Vec<f64>,
    pub l_body: Vec<Vector3<f64>>,
    pub omega_body: Vec<Vector3<f64>>,
    pub h: Vec<Vector3<f64>>,
    pub q: Vec<Matrix3<f64>>,
    /// Rigid states on the fine grid of each interval (`2·max_substeps + 1` nodes).
    fine: Vec<Vec<(Vector3<f64>, Matrix3<f64>)>>,
    pub points: Vec<Vector3<f64>>,
    /// `x[n][i] = X(points[i], times[n])`.
    pub x: Vec<Vec<Vector3<f64>>>,
    /// `jx[n][i] = ∇_y X(points[i], times[n])`.
    pub jx: Vec<Vec<Matrix3<f64>>>,
    /// `hx[n][i][a] = ∂²X_a/∂y∂y`, present when second derivatives are tracked.
    pub hx: Vec<Vec<[Matrix3<f64>; 3]>>,
    substeps: Vec<usize>,
    pub max_substeps_used: usize,
    pub reorthonormalizations: usize,
}

/// Jacobian data of the flow at one reference point.
#[derive(Debug, Clone, Copy)]
pub struct Jacobians {
    pub jx: Matrix3<f64>,
    pub jy: Matrix3<f64>,
    pub det: f64,
    /// `d2y[a][(j, k)] = ∂²Y_a / ∂x_j ∂x_k`.
    pub d2y: [Matrix3<f64>; 3],
}

#[derive(Clone, Copy)]
struct PointState {
    x: Vector3<f64>,
    j: Matrix3<f64>,
    h: [Matrix3<f64>; 3],
}

impl PointState {
    fn start(y: Vector3<f64>) -> Self {
        Self {
            x: y,
            j: Matrix3::identity(),
            h: [Matrix3::zeros(); 3],
        }
    }

    fn axpy(&self, s: f64, d: &PointState) -> PointState {
        PointState {
            x: self.x + d.x * s,
            j: self.j + d.j * s,
            h: [self.h[0] + d.h[0] * s, self.h[1] + d.h[1] * s, self.h[2] + d.h[2] * s],
        }
    }
}

impl FlowMap {
    pub fn new(psi: CutoffPsi, points: Vec<Vector3<f64>>, l0: Vector3<f64>, omega0: Vector3<f64>, opts: FlowOptions) -> Self {
        assert!(opts.max_substeps.is_power_of_two());
        let n = points.len();
        Self {
            psi,
            opts,
            times: vec![0.0],
            l_body: vec![l0],
            omega_body: vec![omega0],
            h: vec![Vector3::zeros()],
            q: vec![Matrix3::identity()],
            fine: Vec::new(),
            x: vec![points.clone()],
            jx: vec![vec![Matrix3::identity(); n]],
            hx: if opts.second_derivatives { vec![vec![[Matrix3::zeros(); 3]; n]] } else { Vec::new() },
            points,
            substeps: vec![1; n],
            max_substeps_used: 1,
            reorthonormalizations: 0,
        }
    }

    /// Flow map along a prescribed body-frame velocity history.
    pub fn build(
        psi: CutoffPsi,
        points: Vec<Vector3<f64>>,
        times: &[f64],
        l_body: &[Vector3<f64>],
        omega_body: &[Vector3<f64>],
        opts: FlowOptions,
    ) -> Result<Self> {
        let mut map = Self::new(psi, points, l_body[0], omega_body[0], opts);
        for n in 1..times.len() {
            map.advance(l_body[n], omega_body[n], times[n] - times[n - 1])?;
        }
        Ok(map)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn fine_count(&self) -> usize {
        2 * self.opts.max_substeps
    }

    /// Body-frame velocities at fraction `s ∈ [0, 1]` of interval `n`.
    fn velocities(&self, n: usize, s: f64) -> (Vector3<f64>, Vector3<f64>) {
        let l = self.l_body[n] * (1.0 - s) + self.l_body[n + 1] * s;
        let w = self.omega_body[n] * (1.0 - s) + self.omega_body[n + 1] * s;
        (l, w)
    }

    fn fine_motion(&self, n: usize, j: usize) -> RigidMotion {
        let (h, q) = self.fine[n][j];
        let (l, w) = self.velocities(n, j as f64 / self.fine_count() as f64);
        RigidMotion {
            h,
            l: q * l,
            omega: q * w,
        }
    }

    /// Spatial rigid motion at grid time `n`.
    pub fn motion(&self, n: usize) -> RigidMotion {
        RigidMotion {
            h: self.h[n],
            l: self.q[n] * self.l_body[n],
            omega: self.q[n] * self.omega_body[n],
        }
    }

    pub fn rigid_state(&self, n: usize) -> RigidState {
        RigidState {
            h: self.h[n],
            q: self.q[n],
            l_body: self.l_body[n],
            omega_body: self.omega_body[n],
            t: self.times[n],
        }
    }

    /// Appends one time step: rigid motion by fine RK4, then every sample
    /// point with substeps doubled until det J_X stays within tolerance.
    pub fn advance(&mut self, l_next: Vector3<f64>, omega_next: Vector3<f64>, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Input(format!("time step must be positive, got {dt}")));
        }
        let n = self.times.len() - 1;
        self.times.push(self.times[n] + dt);
        self.l_body.push(l_next);
        self.omega_body.push(omega_next);
        let nf = self.fine_count();
        let delta = dt / nf as f64;
        let mut nodes = Vec::with_capacity(nf + 1);
        let (mut h, mut q) = (self.h[n], self.q[n]);
        nodes.push((h, q));
        let rhs = |q: &Matrix3<f64>, s: f64| {
            let (l, w) = self.velocities(n, s);
            (q * l, q * skew(&w))
        };
        for j in 0..nf {
            let s0 = j as f64 / nf as f64;
            let sm = (j as f64 + 0.5) / nf as f64;
            let s1 = (j + 1) as f64 / nf as f64;
            let (k1h, k1q) = rhs(&q, s0);
            let q2 = q + k1q * (0.5 * delta);
            let (k2h, k2q) = rhs(&q2, sm);
            let q3 = q + k2q * (0.5 * delta);
            let (k3h, k3q) = rhs(&q3, sm);
            let q4 = q + k3q * delta;
            let (k4h, k4q) = rhs(&q4, s1);
            h += (k1h + k2h * 2.0 + k3h * 2.0 + k4h) * (delta / 6.0);
            q += (k1q + k2q * 2.0 + k3q * 2.0 + k4q) * (delta / 6.0);
            nodes.push((h, q));
        }
        if (q.transpose() * q - Matrix3::identity()).norm() > ROTATION_DRIFT_TOL {
            q = polar_rotation(&q);
            nodes[nf].1 = q;
            self.reorthonormalizations += 1;
        }
        self.fine.push(nodes);
        self.h.push(h);
        self.q.push(q);

        let second = self.opts.second_derivatives;
        let results: Vec<Result<(PointState, usize)>> = (0..self.points.len())
            .into_par_iter()
            .map(|i| {
                let start = PointState {
                    x: self.x[n][i],
                    j: self.jx[n][i],
                    h: if second { self.hx[n][i] } else { [Matrix3::zeros(); 3] },
                };
                self.integrate_interval_adaptive(n, start, self.substeps[i], second)
            })
            .collect();
        let mut xs = Vec::with_capacity(self.points.len());
        let mut js = Vec::with_capacity(self.points.len());
        let mut hs = Vec::with_capacity(if second { self.points.len() } else { 0 });
        for (i, r) in results.into_iter().enumerate() {
            let (end, k) = r?;
            xs.push(end.x);
            js.push(end.j);
            if second {
                hs.push(end.h);
            }
            self.substeps[i] = k;
            self.max_substeps_used = self.max_substeps_used.max(k);
        }
        self.x.push(xs);
        self.jx.push(js);
        if second {
            self.hx.push(hs);
        }
        Ok(())
    }

    fn derivative(&self, n: usize, fine_idx: usize, s: &PointState, second: bool) -> PointState {
        let m = self.fine_motion(n, fine_idx);
        let lj = lambda_jet(&m, &s.x, &self.psi, second);
        let mut d = PointState {
            x: lj.value,
            j: lj.grad * s.j,
            h: [Matrix3::zeros(); 3],
        };
        if second {
            for i in 0..3 {
                let mut hi = s.j.transpose() * lj.hess[i] * s.j;
                for mm in 0..3 {
                    hi += s.h[mm] * lj.grad[(i, mm)];
                }
                d.h[i] = hi;
            }
        }
        d
    }

    fn integrate_interval(&self, n: usize, start: PointState, k: usize, second: bool) -> PointState {
        let nf = self.fine_count();
        let stride = nf / k;
        let dt = (self.times[n + 1] - self.times[n]) / k as f64;
        let mut s = start;
        for step in 0..k {
            let j0 = step * stride;
            let jm = j0 + stride / 2;
            let j1 = j0 + stride;
            let k1 = self.derivative(n, j0, &s, second);
            let k2 = self.derivative(n, jm, &s.axpy(0.5 * dt, &k1), second);
            let k3 = self.derivative(n, jm, &s.axpy(0.5 * dt, &k2), second);
            let k4 = self.derivative(n, j1, &s.axpy(dt, &k3), second);
            s = s
                .axpy(dt / 6.0, &k1)
                .axpy(dt / 3.0, &k2)
                .axpy(dt / 3.0, &k3)
                .axpy(dt / 6.0, &k4);
        }
        s
    }

    /// Integrates one grid interval with `k` and `2k` substeps and accepts the
    /// finer result once both agree and det J_X has not drifted; otherwise `k`
    /// doubles. The accepted `k` seeds the next interval.
    fn integrate_interval_adaptive(&self, n: usize, start: PointState, k0: usize, second: bool) -> Result<(PointState, usize)> {
        let before = (start.j.determinant() - 1.0).abs();
        let mut k = k0.clamp(1, self.opts.max_substeps / 2);
        let mut coarse = self.integrate_interval(n, start, k, second);
        loop {
            let fine = self.integrate_interval(n, start, 2 * k, second);
            let local = (fine.x - coarse.x).norm() + (fine.j - coarse.j).norm();
            let drift = (fine.j.determinant() - 1.0).abs() - before;
            if local <= self.opts.local_tol * (1.0 + fine.j.norm()) && drift <= self.opts.det_tol {
                return Ok((fine, k));
            }
            if 2 * k >= self.opts.max_substeps {
                return Err(Error::FlowMap(format!(
                    "step rejected at the minimum substep {:.3e}: local error {local:.3e}, det drift {drift:.3e}, near y = {:?}",
                    (self.times[n + 1] - self.times[n]) / (2 * k) as f64,
                    start.x.as_slice()
                )));
            }
            coarse = fine;
            k *= 2;
        }
    }

    fn trace_state(&self, y: &Vector3<f64>, n: usize, second: bool) -> Result<PointState> {
        let mut s = PointState::start(*y);
        let mut k = 1;
        for m in 0..n {
            let (e, kk) = self.integrate_interval_adaptive(m, s, k, second)?;
            s = e;
            k = kk;
        }
        Ok(s)
    }

    /// X(y, tₙ) for an arbitrary reference point.
    pub fn eval_x(&self, y: &Vector3<f64>, n: usize) -> Result<Vector3<f64>> {
        Ok(self.trace_state(y, n, false)?.x)
    }

    /// X(y, tₙ) and J_X(y, tₙ).
    pub fn eval_xj(&self, y: &Vector3<f64>, n: usize) -> Result<(Vector3<f64>, Matrix3<f64>)> {
        let s = self.trace_state(y, n, false)?;
        Ok((s.x, s.j))
    }

    /// ∂ₜX(y, tₙ) = Λ(X(y, tₙ), tₙ) at a stored sample point.
    pub fn velocity_at(&self, i: usize, n: usize) -> Vector3<f64> {
        super::lambda::eval_lambda(&self.motion(n), &self.x[n][i], &self.psi)
    }

    /// J_X, J_Y = J_X⁻¹ (from the cofactor matrix), det J_X and the second
    /// derivatives of the inverse map, at time index `n`.
    pub fn jacobians(&self, y: &Vector3<f64>, n: usize) -> Result<Jacobians> {
        let s = self.trace_state(y, n, true)?;
        jacobians_from(&s.j, &s.h)
    }

    /// Same as [`FlowMap::jacobians`] for a stored sample point; requires
    /// `second_derivatives` to have been enabled.
    pub fn stored_jacobians(&self, i: usize, n: usize) -> Result<Jacobians> {
        let h = self
            .hx
            .get(n)
            .map(|row| row[i])
            .ok_or_else(|| Error::FlowMap("second derivatives were not tracked".into()))?;
        jacobians_from(&self.jx[n][i], &h)
    }

    /// Backward flow from tₙ to 0: integrates ẋ = −Λ(x, t) with RK4, doubling
    /// substeps per interval until two resolutions agree.
    fn backward_trace(&self, x: &Vector3<f64>, n: usize) -> Vector3<f64> {
        let nf = self.fine_count();
        let mut p = *x;
        let mut k = 1;
        for m in (0..n).rev() {
            let run = |k: usize| {
                let stride = nf / k;
                let dt = (self.times[m + 1] - self.times[m]) / k as f64;
                let vel = |j: usize, q: &Vector3<f64>| -super::lambda::eval_lambda(&self.fine_motion(m, j), q, &self.psi);
                let mut q = p;
                for step in (0..k).rev() {
                    let j1 = (step + 1) * stride;
                    let jm = j1 - stride / 2;
                    let j0 = step * stride;
                    let k1 = vel(j1, &q);
                    let k2 = vel(jm, &(q + k1 * (0.5 * dt)));
                    let k3 = vel(jm, &(q + k2 * (0.5 * dt)));
                    let k4 = vel(j0, &(q + k3 * dt));
                    q += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
                }
                q
            };
            let mut coarse = run(k);
            while k < self.opts.max_substeps {
                let fine = run(2 * k);
                let agree = (fine - coarse).norm() < 1e-13 * (1.0 + fine.norm());
                coarse = fine;
                k *= 2;
                if agree {
                    k /= 2;
                    break;
                }
            }
            p = coarse;
        }
        p
    }

    /// Y(x, tₙ): backward flow for the initial guess, then damped Newton on X(·, tₙ).
    pub fn invert(&self, x: &Vector3<f64>, n: usize) -> Result<Vector3<f64>> {
        const TOL: f64 = 1e-11;
        let mut y = self.backward_trace(x, n);
        let (mut fx, mut jx) = self.eval_xj(&y, n)?;
        let mut res = (fx - x).norm();
        let mut it = 0;
        while res > TOL && it < 50 {
            it += 1;
            let step = jx
                .try_inverse()
                .ok_or_else(|| Error::FlowMap("singular Jacobian during inversion".into()))?
                * (fx - x);
            let mut t = 1.0;
            loop {
                let cand = y - step * t;
                let (cx, cj) = self.eval_xj(&cand, n)?;
                let cres = (cx - x).norm();
                if cres < res || t < 1e-4 {
                    y = cand;
                    fx = cx;
                    jx = cj;
                    res = cres;
                    break;
                }
                t *= 0.5;
            }
        }
        if res > 1e-10 {
            return Err(Error::FlowInversion { residual: res, iterations: it });
        }
        Ok(y)
    }

    /// max |det J_X − 1| over all stored points and times.
    pub fn max_det_error(&self) -> f64 {
        self.jx
            .iter()
            .flatten()
            .map(|j| (j.determinant() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn jacobians_from(jx: &Matrix3<f64>, hx: &[Matrix3<f64>; 3]) -> Result<Jacobians> {
    let det = jx.determinant();
    if !(det.abs() > 1e-12) {
        return Err(Error::FlowMap(format!("singular J_X (det = {det:e})")));
    }
    let jy = cofactor(jx).transpose() / det;
    let mut d2y = [Matrix3::zeros(); 3];
    for (a, da) in d2y.iter_mut().enumerate() {
        let mut acc = Matrix3::zeros();
        for (m, hm) in hx.iter().enumerate() {
            acc += hm * (-jy[(a, m)]);
        }
        *da = jy.transpose() * acc * jy;
    }
    Ok(Jacobians { jx: *jx, jy, det, d2y })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;

    fn psi() -> CutoffPsi {
        CutoffPsi::for_sphere(Vector3::zeros(), 4.0, 3.0)
    }

    fn sample_points() -> Vec<Vector3<f64>> {
        vec![
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 0.6, -0.8),
            Vector3::new(2.0, 1.0, 0.5),
            Vector3::new(2.6, 1.5, 1.0),
            Vector3::new(0.0, 3.4, 0.3),
            Vector3::new(3.9, 0.0, 0.0),
        ]
    }

    #[test]
    fn stationary_body_gives_identity() {
        let n = 5;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * 0.1).collect();
        let z = vec![Vector3::zeros(); n + 1];
        let map = FlowMap::build(psi(), sample_points(), &times, &z, &z, FlowOptions::default()).unwrap();
        for (a, b) in map.x[n].iter().zip(&map.points) {
            assert_eq!(a, b);
        }
        assert_eq!(map.q[n], Matrix3::identity());
        let j = map.jacobians(&Vector3::new(2.0, 0.3, 0.1), n).unwrap();
        assert_eq!(j.jx, Matrix3::identity());
        assert!(j.d2y.iter().all(|m| m.norm() == 0.0));
    }

    #[test]
    fn constant_spin_matches_closed_form_rotation() {
        let c = 0.1;
        let n = 40;
        let dt = 0.05;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        let w = vec![Vector3::new(0.0, 0.0, c); n + 1];
        let z = vec![Vector3::zeros(); n + 1];
        let map = FlowMap::build(psi(), sample_points(), &times, &z, &w, FlowOptions::default()).unwrap();
        let exact = *Rotation3::from_axis_angle(&Vector3::z_axis(), c * times[n]).matrix();
        assert!((map.q[n] - exact).norm() < 1e-12);
        for k in 0..2 {
            assert!((map.x[n][k] - exact * map.points[k]).norm() < 1e-11);
            assert!((map.jx[n][k] - map.q[n]).norm() < 1e-11);
        }
        assert!(map.max_det_error() < 1e-9);
        assert!((map.x[n][5] - map.points[5]).norm() == 0.0, "identity at the wall");
    }

    fn wobble() -> FlowMap {
        let n = 30;
        let dt = 0.05;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        let l: Vec<_> = times.iter().map(|t| Vector3::new(0.1 * t.cos(), 0.05 * t.sin(), -0.03)).collect();
        let w: Vec<_> = times.iter().map(|t| Vector3::new(0.02, -0.08 * t.cos(), 0.1)).collect();
        FlowMap::build(psi(), sample_points(), &times, &l, &w, FlowOptions::default()).unwrap()
    }

    #[test]
    fn solid_points_move_rigidly_and_volume_is_preserved() {
        let map = wobble();
        let n = map.len() - 1;
        for k in 0..2 {
            let rigid = map.h[n] + map.q[n] * map.points[k];
            assert!((map.x[n][k] - rigid).norm() < 1e-11);
            assert!((map.jx[n][k] - map.q[n]).norm() < 1e-11);
        }
        assert!(map.max_det_error() < 1e-9);
    }

    #[test]
    fn jacobian_matches_finite_differences_and_inverse_second_derivatives() {
        let map = wobble();
        let n = map.len() - 1;
        let y = Vector3::new(2.6, 1.5, 1.0);
        let jac = map.jacobians(&y, n).unwrap();
        let h = 1e-4;
        for k in 0..3 {
            let mut e = Vector3::zeros();
            e[k] = h;
            let d = (map.eval_x(&(y + e), n).unwrap() - map.eval_x(&(y - e), n).unwrap()) / (2.0 * h);
            assert!((d - jac.jx.column(k)).norm() < 1e-6);
        }
        assert!((jac.jy * jac.jx - Matrix3::identity()).norm() < 1e-12);
        let x = map.eval_x(&y, n).unwrap();
        for k in 0..3 {
            let mut e = Vector3::zeros();
            e[k] = h;
            let jp = map.jacobians(&map.invert(&(x + e), n).unwrap(), n).unwrap().jy;
            let jm = map.jacobians(&map.invert(&(x - e), n).unwrap(), n).unwrap().jy;
            let d = (jp - jm) / (2.0 * h);
            for a in 0..3 {
                for j in 0..3 {
                    assert!((d[(a, j)] - jac.d2y[a][(j, k)]).abs() < 1e-5, "a={a} j={j} k={k}");
                }
            }
        }
    }

    #[test]
    fn inversion_round_trip() {
        let map = wobble();
        let n = map.len() - 1;
        for (i, y) in map.points.iter().enumerate() {
            let back = map.invert(&map.x[n][i], n).unwrap();
            assert!((back - y).norm() < 1e-9);
        }
        let near_wall = Vector3::new(0.0, 0.0, 3.8);
        assert_eq!(map.invert(&near_wall, n).unwrap(), near_wall);
        assert_eq!(map.invert(&near_wall, 0).unwrap(), near_wall);
    }
}
