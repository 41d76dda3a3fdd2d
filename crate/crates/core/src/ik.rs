/*
Copyright 2026 The erspace Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

//! Iterative inverse kinematics on stacked residuals.
//!
//! Every solver here is one damped Gauss-Newton loop. The pseudo-inverse solver
//! is the same loop with zero damping, the constrained solver stacks extra point
//! rows under the pose rows, and the sub-chain solver drops fixed columns.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::chain::{JointConfig, KinematicChain};
use crate::error::IkError;
use crate::pose::Pose;

/// Metres of position error that count as one radian of orientation error.
pub const ORIENTATION_ROW_SCALE: f64 = 0.5;

/// Relative singular-value cutoff for the undamped pseudo-inverse.
const PINV_CUTOFF: f64 = 1e-10;

/// Adaptive damping factors applied to `damping_lambda`.
const DAMPING_DOWN: f64 = 0.5;
const DAMPING_UP: f64 = 4.0;
/// Damping stays within `[λ / range, λ · range]`.
const DAMPING_RANGE: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub max_iterations: usize,
    pub position_tolerance: f64,
    pub orientation_tolerance: f64,
    /// Tolerance on point-constraint residuals (metres).
    pub constraint_tolerance: f64,
    pub damping_lambda: f64,
    /// Largest per-joint change in one iteration (radians).
    pub step_clamp: f64,
    pub respect_limits: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            max_iterations: 100,
            position_tolerance: 1e-4,
            orientation_tolerance: 1e-3,
            constraint_tolerance: 1e-5,
            damping_lambda: 0.05,
            step_clamp: 0.2,
            respect_limits: true,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), IkError> {
        let bad = |m: &str| Err(IkError::InvalidParams(m.to_string()));
        if self.max_iterations < 1 {
            return bad("max_iterations must be >= 1");
        }
        if !(self.position_tolerance > 0.0 && self.orientation_tolerance > 0.0 && self.constraint_tolerance > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.damping_lambda >= 0.0 && self.damping_lambda.is_finite()) {
            return bad("damping_lambda must be finite and >= 0");
        }
        if !(self.step_clamp > 0.0 && self.step_clamp.is_finite()) {
            return bad("step_clamp must be positive");
        }
        Ok(())
    }

    /// Same settings with all tolerances tightened to `tol`.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.position_tolerance = tol;
        self.orientation_tolerance = tol;
        self.constraint_tolerance = tol;
        self
    }
}

/// Pin the origin of `link` to a world point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointConstraint {
    pub link: usize,
    pub point: Vector3<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkRequest {
    pub target: Pose,
    pub seed: JointConfig,
    pub point_constraints: Vec<PointConstraint>,
    pub fixed_joints: BTreeMap<usize, f64>,
}

impl IkRequest {
    pub fn new(target: Pose, seed: JointConfig) -> Self {
        IkRequest {
            target,
            seed,
            point_constraints: Vec::new(),
            fixed_joints: BTreeMap::new(),
        }
    }

    pub fn with_point(mut self, link: usize, point: Vector3<f64>) -> Self {
        self.point_constraints.push(PointConstraint { link, point, weight: 1.0 });
        self
    }

    pub fn with_fixed(mut self, joint: usize, value: f64) -> Self {
        self.fixed_joints.insert(joint, value);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IkStatus {
    Converged,
    /// Iteration budget spent without meeting tolerances.
    Exhausted,
    /// Not converged and the iterate is pinned against joint limits.
    LimitBlocked,
    /// The iterate stopped being finite; the last finite iterate is returned.
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkResult {
    pub q: JointConfig,
    pub converged: bool,
    pub status: IkStatus,
    pub iterations: usize,
    pub position_residual: f64,
    pub orientation_residual: f64,
    pub constraint_residual: f64,
    /// Largest per-joint change taken in any single iteration.
    pub max_step: f64,
    pub wall_time: f64,
}

/// `(target.position - current.position, log(target.rotation * current.rotation⁻¹))`.
pub fn pose_error(current: &Pose, target: &Pose) -> Vector6<f64> {
    let dp = target.position - current.position;
    let dr = (target.orientation() * current.orientation().inverse()).scaled_axis();
    Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
}

/// Plain task-space solve with the Jacobian pseudo-inverse.
pub fn solve_pinv(chain: &KinematicChain, request: &IkRequest, params: &SolverParams) -> Result<IkResult, IkError> {
    if !request.point_constraints.is_empty() || !request.fixed_joints.is_empty() {
        return Err(IkError::InvalidRequest(
            "pseudo-inverse solver takes neither point constraints nor fixed joints".into(),
        ));
    }
    solve_stacked(chain, request, params, 0.0)
}

/// Damped least squares; accepts point constraints.
pub fn solve_dls(chain: &KinematicChain, request: &IkRequest, params: &SolverParams) -> Result<IkResult, IkError> {
    if !request.fixed_joints.is_empty() {
        return Err(IkError::InvalidRequest("use solve_subchain for fixed joints".into()));
    }
    solve_stacked(chain, request, params, params.damping_lambda)
}

/// Pose plus one point constraint per redundant degree of freedom, solved by DLS.
pub fn solve_constrained(
    chain: &KinematicChain,
    request: &IkRequest,
    params: &SolverParams,
) -> Result<IkResult, IkError> {
    if request.point_constraints.len() != chain.redundancy() {
        return Err(IkError::InvalidRequest(format!(
            "expected {} point constraint(s), got {}",
            chain.redundancy(),
            request.point_constraints.len()
        )));
    }
    solve_dls(chain, request, params)
}

/// Pose solve over the joints left free after pinning `fixed_joints`.
pub fn solve_subchain(chain: &KinematicChain, request: &IkRequest, params: &SolverParams) -> Result<IkResult, IkError> {
    if !request.point_constraints.is_empty() {
        return Err(IkError::InvalidRequest("sub-chain solver takes no point constraints".into()));
    }
    let free = chain.dof() - request.fixed_joints.len();
    if free < 6 {
        return Err(IkError::InvalidRequest(format!(
            "{} joints fixed leaves {free} free, need at least 6",
            request.fixed_joints.len()
        )));
    }
    solve_stacked(chain, request, params, params.damping_lambda)
}

fn validate_request(chain: &KinematicChain, request: &IkRequest) -> Result<(), IkError> {
    chain.validate(&request.seed)?;
    for (&j, &v) in &request.fixed_joints {
        let Some(spec) = chain.joints.get(j) else {
            return Err(IkError::InvalidRequest(format!("fixed joint {j} out of range")));
        };
        if !v.is_finite() || !spec.limits.contains(v) {
            return Err(IkError::FixedJointOutOfLimits {
                joint: j,
                value: v,
                lo: spec.limits.lo,
                hi: spec.limits.hi,
            });
        }
    }
    for c in &request.point_constraints {
        if c.link == 0 || c.link > chain.dof() {
            return Err(IkError::InvalidRequest(format!("constraint link {} out of range", c.link)));
        }
        if !(c.point.iter().all(|v| v.is_finite()) && c.weight.is_finite() && c.weight > 0.0) {
            return Err(IkError::InvalidRequest("constraint point and weight must be finite".into()));
        }
    }
    Ok(())
}

struct Residuals {
    error: DVector<f64>,
    position: f64,
    orientation: f64,
    constraint: f64,
}

fn residuals(
    chain: &KinematicChain,
    request: &IkRequest,
    frames: &[nalgebra::Isometry3<f64>],
) -> Residuals {
    let rows = 6 + 3 * request.point_constraints.len();
    let mut error = DVector::zeros(rows);
    let pose = chain.ee_from_frames(frames);
    let e = pose_error(&pose, &request.target);
    for r in 0..3 {
        error[r] = e[r];
        error[r + 3] = ORIENTATION_ROW_SCALE * e[r + 3];
    }
    let mut constraint: f64 = 0.0;
    for (k, c) in request.point_constraints.iter().enumerate() {
        let d = c.point - frames[c.link].translation.vector;
        constraint = constraint.max(d.norm());
        for r in 0..3 {
            error[6 + 3 * k + r] = c.weight * d[r];
        }
    }
    Residuals {
        error,
        position: e.fixed_rows::<3>(0).norm(),
        orientation: e.fixed_rows::<3>(3).norm(),
        constraint,
    }
}

fn stacked_jacobian(
    chain: &KinematicChain,
    request: &IkRequest,
    frames: &[nalgebra::Isometry3<f64>],
    free: &[usize],
) -> DMatrix<f64> {
    let rows = 6 + 3 * request.point_constraints.len();
    let mut full = DMatrix::zeros(rows, chain.dof());
    let ee = chain.ee_from_frames(frames).position;
    let pose_j = chain.jacobian_from_frames(frames, &ee, None);
    full.view_mut((0, 0), (3, chain.dof())).copy_from(&pose_j.rows(0, 3));
    full.view_mut((3, 0), (3, chain.dof()))
        .copy_from(&(pose_j.rows(3, 3) * ORIENTATION_ROW_SCALE));
    for (k, c) in request.point_constraints.iter().enumerate() {
        let p = frames[c.link].translation.vector;
        // link `c.link` moves only with joints before it
        let jp = chain.jacobian_from_frames(frames, &p, Some(c.link - 1));
        full.view_mut((6 + 3 * k, 0), (3, chain.dof()))
            .copy_from(&(jp.rows(0, 3) * c.weight));
    }
    full.select_columns(free.iter())
}

/// `Σ σ/(σ²+λ²) v uᵀ e`; with `λ = 0` tiny singular values are dropped.
fn damped_step(j: DMatrix<f64>, e: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let svd = j.try_svd(true, true, 1e-14, 500)?;
    let u = svd.u.as_ref()?;
    let v_t = svd.v_t.as_ref()?;
    let smax = svd.singular_values.max();
    let mut coeffs = u.transpose() * e;
    for (i, c) in coeffs.iter_mut().enumerate() {
        let s = svd.singular_values[i];
        let gain = if lambda > 0.0 {
            s / (s * s + lambda * lambda)
        } else if s > PINV_CUTOFF * smax.max(1.0) {
            1.0 / s
        } else {
            0.0
        };
        *c *= gain;
    }
    Some(v_t.transpose() * coeffs)
}

fn solve_stacked(
    chain: &KinematicChain,
    request: &IkRequest,
    params: &SolverParams,
    lambda: f64,
) -> Result<IkResult, IkError> {
    let start = Instant::now();
    params.validate()?;
    validate_request(chain, request)?;

    let free: Vec<usize> = (0..chain.dof())
        .filter(|j| !request.fixed_joints.contains_key(j))
        .collect();
    let mut q = request.seed.clone();
    for (&j, &v) in &request.fixed_joints {
        q[j] = v;
    }
    if params.respect_limits {
        for &j in &free {
            q[j] = chain.joints[j].limits.clamp(q[j]);
        }
    }

    let within = |r: &Residuals| {
        r.position <= params.position_tolerance
            && r.orientation <= params.orientation_tolerance
            && r.constraint <= params.constraint_tolerance
    };

    let mut frames = chain.link_frames(&q)?;
    let mut res = residuals(chain, request, &frames);
    let mut iterations = 0;
    let mut max_step: f64 = 0.0;
    let mut status = IkStatus::Exhausted;
    let mut mu = lambda;

    while iterations < params.max_iterations {
        if within(&res) {
            status = IkStatus::Converged;
            break;
        }
        // clamping loop: joints that would cross a limit are pinned there, their
        // clamped motion is taken out of the error, and the rest re-solve
        let full = stacked_jacobian(chain, request, &frames, &free);
        let mut active: Vec<usize> = (0..free.len()).collect();
        let mut error = res.error.clone();
        let mut next = q.clone();
        let mut failed = false;
        while !active.is_empty() {
            let Some(mut dq) = damped_step(full.select_columns(active.iter()), &error, mu) else {
                failed = true;
                break;
            };
            let largest = dq.amax();
            if !largest.is_finite() {
                failed = true;
                break;
            }
            if largest > params.step_clamp {
                dq *= params.step_clamp / largest;
            }
            let crossing: Vec<usize> = if params.respect_limits {
                (0..active.len())
                    .filter(|&k| !chain.joints[free[active[k]]].limits.contains(q[free[active[k]]] + dq[k]))
                    .collect()
            } else {
                Vec::new()
            };
            if crossing.is_empty() {
                for (k, &col) in active.iter().enumerate() {
                    next[free[col]] = q[free[col]] + dq[k];
                }
                break;
            }
            for &k in crossing.iter().rev() {
                let col = active.remove(k);
                let jnt = free[col];
                let v = chain.joints[jnt].limits.clamp(q[jnt] + dq[k]);
                error -= full.column(col) * (v - q[jnt]);
                next[jnt] = v;
            }
        }
        if failed {
            status = IkStatus::NumericalFailure;
            break;
        }
        let step_taken = free.iter().map(|&j| (next[j] - q[j]).abs()).fold(0.0, f64::max);
        if !next.is_finite() {
            status = IkStatus::NumericalFailure;
            break;
        }
        iterations += 1;
        let next_frames = chain.link_frames(&next)?;
        let next_res = residuals(chain, request, &next_frames);
        if lambda > 0.0 {
            // Levenberg-Marquardt schedule: damping falls while the error does
            // and rises on a rejected step, so convergence near the solution
            // is not held back by damping meant for singular regions
            if next_res.error.norm() >= res.error.norm() {
                mu *= DAMPING_UP;
                if mu > lambda * DAMPING_RANGE {
                    break;
                }
                continue;
            }
            mu = (mu * DAMPING_DOWN).max(lambda / DAMPING_RANGE);
        }
        max_step = max_step.max(step_taken);
        q = next;
        frames = next_frames;
        res = next_res;
    }
    if status == IkStatus::Exhausted && within(&res) {
        status = IkStatus::Converged;
    }
    if status == IkStatus::Exhausted && params.respect_limits {
        let pinned = free.iter().any(|&j| {
            let l = chain.joints[j].limits;
            q[j] <= l.lo || q[j] >= l.hi
        });
        if pinned {
            status = IkStatus::LimitBlocked;
        }
    }
    let converged = status == IkStatus::Converged && (!params.respect_limits || chain.within_limits(&q));
    Ok(IkResult {
        q,
        converged,
        status: if converged { IkStatus::Converged } else { status },
        iterations,
        position_residual: res.position,
        orientation_residual: res.orientation,
        constraint_residual: res.constraint,
        max_step,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
