use serde::{Deserialize, Serialize};

use super::horizon::{HorizonData, LinearHorizon, Trajectory};
use super::snorm::{s_norm, NormWeights};
use super::terms::{LinearStress, NonlinearContext};
use crate::error::{Error, Result};
use crate::geometry::{body_distance, DomainConfig};
use crate::linalg::{axpy, dot};
use crate::nonnewtonian::{nonlinear_slip_load, FrozenOperator};
use crate::stokes::StokesBlocks;
use crate::transform::FlowMap;

/// Per-iteration record of the fixed-point loop.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContractionLog {
    pub eta: f64,
    pub gamma: f64,
    /// Smallness bound from the clearance, `min{1, β/(2C(1+diam))}`.
    pub gamma0: f64,
    /// S-norm of every iterate, starting with the linear solution.
    pub s_norms: Vec<f64>,
    /// `‖x^{k+1} − x^k‖_S`.
    pub differences: Vec<f64>,
    /// `‖x^{k+1} − x^k‖_S / ‖x^k − x^{k−1}‖_S`.
    pub ratios: Vec<f64>,
    /// Weighted norm of the nonlinear data built from each iterate.
    pub rhs_norms: Vec<f64>,
    /// First contraction ratio, the observed Lipschitz constant.
    pub lipschitz: Option<f64>,
    pub first_rhs_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ContractionLog {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedPointOptions {
    /// Stop when `‖x^{k+1} − x^k‖_S ≤ tol·‖x⁰‖_S`.
    pub tol: f64,
    pub max_iter: usize,
    /// Requested smallness radius γ.
    pub gamma: f64,
    /// Weight exponent η of the S-norm, positive.
    pub eta: f64,
    /// Refuse data with `‖x⁰‖_S > γ_eff/2`.
    pub gate: bool,
    /// Replace linear friction by the wall law `α|u|u_τ`.
    pub nonlinear_slip: bool,
    /// Stop at the first level where the clearance drops below β/2.
    pub contact_check: bool,
    /// S-norms above this count as blow-up.
    pub blowup: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 60,
            gamma: 0.1,
            eta: 0.5,
            gate: true,
            nonlinear_slip: false,
            contact_check: true,
            blowup: 1e8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunStatus {
    Global,
    Contact,
    BlowupNorm,
}

#[derive(Debug, Clone)]
pub struct FixedPointOutcome {
    pub status: RunStatus,
    pub trajectory: Trajectory,
    pub log: ContractionLog,
    /// Rigid motion of the returned trajectory.
    pub motion: FlowMap,
    /// First level whose clearance is below β/2.
    pub contact_level: Option<usize>,
}

/// Linear problem, nonlinear data and geometry of one fixed-point run.
pub struct FixedPointProblem<'a> {
    pub blocks: &'a StokesBlocks,
    pub domain: &'a DomainConfig,
    pub context: &'a NonlinearContext,
    pub horizon: &'a LinearHorizon,
    /// Frozen linearization for a generalized viscosity; `None` is Newtonian.
    pub frozen: Option<&'a FrozenOperator>,
    pub z0: &'a [f64],
    /// Additional loads independent of the iterate.
    pub external: HorizonData,
}

/// `γ₀ = min{1, β / (2C(1 + diam))}` with `C = (2η)^{−1/2}`.
pub fn smallness_bound(beta: f64, diameter: f64, eta: f64) -> f64 {
    let c = (0.5 / eta).sqrt();
    (beta / (2.0 * c * (1.0 + diameter))).min(1.0)
}

impl FixedPointProblem<'_> {
    fn linear(&self) -> LinearStress<'_> {
        match self.frozen {
            Some(f) => LinearStress::Frozen(&f.coefficients),
            None => LinearStress::Newtonian,
        }
    }

    /// Nonlinear data of an iterate and its weighted norm.
    fn data(&self, x: &Trajectory, map: &FlowMap, eta: f64, nonlinear_slip: bool) -> Result<(HorizonData, f64)> {
        let steps = x.grid.steps;
        let mut loads = Vec::with_capacity(steps);
        let mut divergence = Vec::with_capacity(steps);
        let mut norm_sq = 0.0;
        for n in 1..=steps {
            let mut s = self.context.step_load(self.blocks, x, map, n, self.linear())?;
            if nonlinear_slip {
                axpy(&mut s.load, 1.0, &nonlinear_slip_load(self.blocks, &x.z[n]));
            }
            norm_sq += x.grid.dt * (2.0 * eta * x.grid.t(n)).exp() * (dot(&s.load, &s.load) + dot(&s.divergence, &s.divergence));
            if let Some(ext) = &self.external.loads {
                axpy(&mut s.load, 1.0, &ext[n - 1]);
            }
            if let Some(ext) = &self.external.divergence {
                axpy(&mut s.divergence, 1.0, &ext[n - 1]);
            }
            loads.push(s.load);
            divergence.push(s.divergence);
        }
        Ok((
            HorizonData {
                loads: Some(loads),
                divergence: Some(divergence),
            },
            norm_sq.sqrt(),
        ))
    }

    /// First level whose clearance is below β/2.
    fn contact(&self, map: &FlowMap) -> Option<usize> {
        (0..map.len()).find(|&n| body_distance(&map.rigid_state(n), self.domain) < 0.5 * self.domain.beta)
    }
}

/// Picard iteration `x^{k+1} = 𝒩(x^k)` from the linear solution `x⁰`, with
/// the flow map rebuilt from each iterate's rigid velocities.
pub fn fixed_point_solve(problem: &FixedPointProblem, opts: &FixedPointOptions) -> Result<FixedPointOutcome> {
    if !(opts.eta > 0.0) {
        return Err(Error::Input(format!("eta must be positive, got {}", opts.eta)));
    }
    let ctx = problem.context;
    let weights = NormWeights::new(problem.blocks);
    let norm = |t: &Trajectory| s_norm(&weights, t, opts.eta).total;
    let gamma0 = smallness_bound(problem.domain.beta, problem.domain.solid_diameter(), opts.eta);
    let mut log = ContractionLog {
        eta: opts.eta,
        gamma: opts.gamma,
        gamma0,
        ..Default::default()
    };
    let mut x = problem.horizon.solve(problem.z0, &problem.external)?;
    let s0 = norm(&x);
    log.s_norms.push(s0);
    let limit = 0.5 * opts.gamma.min(gamma0);
    if opts.gate && s0 > limit {
        return Err(Error::SmallnessGate { norm: s0, limit });
    }
    let finish = |status, x: Trajectory, log: ContractionLog, motion: FlowMap, contact_level| {
        Ok(FixedPointOutcome {
            status,
            trajectory: x,
            log,
            motion,
            contact_level,
        })
    };
    let mut prev_diff: Option<f64> = None;
    for k in 1..=opts.max_iter {
        if opts.contact_check {
            // rigid motion first: the full flow map degenerates as the gap closes
            if let Some(level) = problem.contact(&ctx.rigid_kinematics(&x)?) {
                let motion = ctx.rigid_kinematics(&x.truncated(level))?;
                log.iterations = k - 1;
                return finish(RunStatus::Contact, x.truncated(level), log, motion, Some(level));
            }
        }
        let map = ctx.kinematics(&x)?;
        let (data, rhs) = problem.data(&x, &map, opts.eta, opts.nonlinear_slip)?;
        log.rhs_norms.push(rhs);
        if k == 1 {
            log.first_rhs_norm = rhs;
        }
        let next = problem.horizon.solve(problem.z0, &data)?;
        let s = norm(&next);
        let diff = norm(&next.difference(&x));
        log.s_norms.push(s);
        log.differences.push(diff);
        log.iterations = k;
        if !s.is_finite() || s > opts.blowup {
            let motion = ctx.rigid_kinematics(&next)?;
            return finish(RunStatus::BlowupNorm, next, log, motion, None);
        }
        if let Some(p) = prev_diff {
            let r = if p > 0.0 { diff / p } else { 0.0 };
            log.ratios.push(r);
            log.lipschitz.get_or_insert(r);
        }
        prev_diff = Some(diff);
        x = next;
        if diff <= opts.tol * s0.max(f64::MIN_POSITIVE) {
            log.converged = true;
            let motion = ctx.rigid_kinematics(&x)?;
            return finish(RunStatus::Global, x, log, motion, None);
        }
    }
    let ratio = log.ratios.last().copied().unwrap_or(f64::INFINITY);
    if ratio >= 1.0 {
        return Err(Error::NonContraction {
            ratio,
            iterations: log.iterations,
            log: Box::new(log),
        });
    }
    let motion = ctx.rigid_kinematics(&x)?;
    finish(RunStatus::Global, x, log, motion, None)
}
