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

//! Action-space translators.
//!
//! Each space maps an agent action and the current configuration to a joint
//! target, or to a classified failure. Translation never mutates anything;
//! the caller decides what an invalid action costs.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DVector, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::chain::{JointConfig, KinematicChain};
use crate::error::{GeometryError, IkError, KinematicsError};
use crate::ik::{self, IkRequest, IkResult, IkStatus, SolverParams};
use crate::pose::Pose;
use crate::redundancy::{self, ArmAngle};

/// Defaults of the JAiLeR control reward.
pub const JAILER_LAMBDA_ERR: f64 = 20.0;
pub const JAILER_LAMBDA_EFF: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Joint,
    Task,
    Era,
    Erj,
}

impl Space {
    pub const ALL: [Space; 4] = [Space::Joint, Space::Task, Space::Era, Space::Erj];

    pub fn as_str(self) -> &'static str {
        match self {
            Space::Joint => "joint",
            Space::Task => "task",
            Space::Era => "era",
            Space::Erj => "erj",
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Space {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "joint" => Ok(Space::Joint),
            "task" => Ok(Space::Task),
            "era" => Ok(Space::Era),
            "erj" => Ok(Space::Erj),
            other => Err(format!("unknown action space `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionMode {
    Absolute,
    Delta,
}

/// Identity delta pose: no translation, unit quaternion.
pub const IDENTITY_DELTA: [f64; 7] = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];

/// Poses are `[px, py, pz, qw, qx, qy, qz]`. In delta mode the quaternion is a
/// world-frame increment and the position an additive offset.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionPayload {
    Joint { values: Vec<f64> },
    Task { pose: [f64; 7] },
    Era { pose: [f64; 7], phi: Vec<f64> },
    Erj { pose: [f64; 7], joint_values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub mode: ActionMode,
    pub payload: ActionPayload,
}

impl Action {
    pub fn joint(mode: ActionMode, values: Vec<f64>) -> Self {
        Action { mode, payload: ActionPayload::Joint { values } }
    }

    pub fn task(mode: ActionMode, pose: [f64; 7]) -> Self {
        Action { mode, payload: ActionPayload::Task { pose } }
    }

    pub fn era(mode: ActionMode, pose: [f64; 7], phi: Vec<f64>) -> Self {
        Action { mode, payload: ActionPayload::Era { pose, phi } }
    }

    pub fn erj(mode: ActionMode, pose: [f64; 7], joint_values: Vec<f64>) -> Self {
        Action { mode, payload: ActionPayload::Erj { pose, joint_values } }
    }

    pub fn space(&self) -> Space {
        match self.payload {
            ActionPayload::Joint { .. } => Space::Joint,
            ActionPayload::Task { .. } => Space::Task,
            ActionPayload::Era { .. } => Space::Era,
            ActionPayload::Erj { .. } => Space::Erj,
        }
    }

    pub fn to_record(&self) -> ActionRecord {
        let (pose, values, phi) = match &self.payload {
            ActionPayload::Joint { values } => (None, Some(values.clone()), None),
            ActionPayload::Task { pose } => (Some(*pose), None, None),
            ActionPayload::Era { pose, phi } => (Some(*pose), None, Some(phi.clone())),
            ActionPayload::Erj { pose, joint_values } => (Some(*pose), Some(joint_values.clone()), None),
        };
        ActionRecord { space: self.space(), mode: self.mode, pose, values, phi }
    }
}

/// One line of an action replay file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub space: Space,
    pub mode: ActionMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<[f64; 7]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<f64>>,
}

impl TryFrom<ActionRecord> for Action {
    type Error = String;

    fn try_from(r: ActionRecord) -> Result<Self, Self::Error> {
        let need_pose = || r.pose.ok_or_else(|| format!("{} action needs `pose`", r.space));
        let payload = match r.space {
            Space::Joint => ActionPayload::Joint {
                values: r.values.clone().ok_or("joint action needs `values`")?,
            },
            Space::Task => ActionPayload::Task { pose: need_pose()? },
            Space::Era => ActionPayload::Era {
                pose: need_pose()?,
                phi: r.phi.clone().ok_or("era action needs `phi`")?,
            },
            Space::Erj => ActionPayload::Erj {
                pose: need_pose()?,
                joint_values: r.values.clone().ok_or("erj action needs `values`")?,
            },
        };
        Ok(Action { mode: r.mode, payload })
    }
}

/// Parse a JSON-lines replay file; blank lines are skipped.
pub fn parse_action_lines(text: &str) -> Result<Vec<Action>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let rec: ActionRecord = serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1))?;
            Action::try_from(rec).map_err(|e| format!("line {}: {e}", i + 1))
        })
        .collect()
}

/// Joints commanded directly in ERJ, in action order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RedundancySelection {
    pub joint_indices: Vec<usize>,
}

impl RedundancySelection {
    pub fn new(joint_indices: Vec<usize>) -> Self {
        RedundancySelection { joint_indices }
    }

    /// The base-most `n - 6` joints.
    pub fn default_for(chain: &KinematicChain) -> Self {
        RedundancySelection::new((0..chain.redundancy()).collect())
    }

    pub fn validate(&self, chain: &KinematicChain) -> Result<(), String> {
        if self.joint_indices.len() != chain.redundancy() {
            return Err(format!(
                "selection has {} joints, chain has {} redundant DoF",
                self.joint_indices.len(),
                chain.redundancy()
            ));
        }
        for (k, &j) in self.joint_indices.iter().enumerate() {
            if j >= chain.dof() {
                return Err(format!("selected joint {j} out of range"));
            }
            if self.joint_indices[..k].contains(&j) {
                return Err(format!("joint {j} selected twice"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Failure {
    None,
    Malformed,
    IkNoSolution,
    LimitViolation,
    Unreachable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IkSummary {
    pub converged: bool,
    pub status: IkStatus,
    pub iterations: usize,
    pub position_residual: f64,
    pub orientation_residual: f64,
    pub constraint_residual: f64,
}

impl From<&IkResult> for IkSummary {
    fn from(r: &IkResult) -> Self {
        IkSummary {
            converged: r.converged,
            status: r.status,
            iterations: r.iterations,
            position_residual: r.position_residual,
            orientation_residual: r.orientation_residual,
            constraint_residual: r.constraint_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionOutcome {
    pub valid: bool,
    pub q_target: Option<JointConfig>,
    pub failure: Failure,
    pub diagnostics: Option<IkSummary>,
    /// Wall-clock seconds spent translating.
    pub latency: f64,
}

impl ActionOutcome {
    fn ok(q: JointConfig, diagnostics: Option<IkSummary>) -> Self {
        ActionOutcome { valid: true, q_target: Some(q), failure: Failure::None, diagnostics, latency: 0.0 }
    }

    fn fail(failure: Failure, diagnostics: Option<IkSummary>) -> Self {
        ActionOutcome { valid: false, q_target: None, failure, diagnostics, latency: 0.0 }
    }

    fn from_ik(chain: &KinematicChain, target: &Pose, result: &IkResult) -> Self {
        let summary = Some(IkSummary::from(result));
        let (center, reach) = chain.reach_ball();
        if result.converged {
            if chain.within_limits(&result.q) {
                ActionOutcome::ok(result.q.clone(), summary)
            } else {
                ActionOutcome::fail(Failure::LimitViolation, summary)
            }
        } else if result.status == IkStatus::LimitBlocked && (target.position - center).norm() <= reach {
            // a target out of reach stretches the arm into its limits; that is
            // still a missing solution, not a limit problem
            ActionOutcome::fail(Failure::LimitViolation, summary)
        } else {
            ActionOutcome::fail(Failure::IkNoSolution, summary)
        }
    }
}

impl From<IkError> for ActionOutcome {
    fn from(e: IkError) -> Self {
        match e {
            IkError::FixedJointOutOfLimits { .. } => ActionOutcome::fail(Failure::LimitViolation, None),
            _ => ActionOutcome::fail(Failure::Malformed, None),
        }
    }
}

impl From<KinematicsError> for ActionOutcome {
    fn from(_: KinematicsError) -> Self {
        ActionOutcome::fail(Failure::Malformed, None)
    }
}

fn finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

/// Target pose for an absolute or delta pose payload.
pub fn resolve_pose(
    chain: &KinematicChain,
    current_q: &JointConfig,
    mode: ActionMode,
    pose: &[f64; 7],
) -> Result<Pose, Failure> {
    match mode {
        ActionMode::Absolute => Pose::from_array(pose).ok_or(Failure::Malformed),
        ActionMode::Delta => {
            let delta = Pose::from_array(pose).ok_or(Failure::Malformed)?;
            let current = chain.forward_kinematics(current_q).map_err(|_| Failure::Malformed)?;
            Ok(current.compose_delta(&delta.position, &delta.orientation()))
        }
    }
}

/// Dispatch an action to the translator of `space` and time it.
pub fn translate(
    space: Space,
    action: &Action,
    current_q: &JointConfig,
    chain: &KinematicChain,
    selection: &RedundancySelection,
    params: &SolverParams,
) -> ActionOutcome {
    let start = Instant::now();
    let mut outcome = if action.space() != space || chain.validate(current_q).is_err() {
        ActionOutcome::fail(Failure::Malformed, None)
    } else {
        match space {
            Space::Joint => joint_translate(action, current_q, chain),
            Space::Task => task_translate(action, current_q, chain, params),
            Space::Era => era_translate(action, current_q, chain, params),
            Space::Erj => erj_translate(action, current_q, chain, selection, params),
        }
    };
    outcome.latency = start.elapsed().as_secs_f64();
    outcome
}

pub fn joint_translate(action: &Action, current_q: &JointConfig, chain: &KinematicChain) -> ActionOutcome {
    let ActionPayload::Joint { values } = &action.payload else {
        return ActionOutcome::fail(Failure::Malformed, None);
    };
    if values.len() != chain.dof() || !finite(values) || current_q.len() != chain.dof() {
        return ActionOutcome::fail(Failure::Malformed, None);
    }
    let v = DVector::from_column_slice(values);
    let q = match action.mode {
        ActionMode::Absolute => JointConfig(v),
        ActionMode::Delta => JointConfig(&current_q.0 + v),
    };
    if chain.within_limits(&q) {
        ActionOutcome::ok(q, None)
    } else {
        ActionOutcome::fail(Failure::LimitViolation, None)
    }
}

pub fn task_translate(
    action: &Action,
    current_q: &JointConfig,
    chain: &KinematicChain,
    params: &SolverParams,
) -> ActionOutcome {
    let ActionPayload::Task { pose } = &action.payload else {
        return ActionOutcome::fail(Failure::Malformed, None);
    };
    let target = match resolve_pose(chain, current_q, action.mode, pose) {
        Ok(p) => p,
        Err(f) => return ActionOutcome::fail(f, None),
    };
    match ik::solve_pinv(chain, &IkRequest::new(target, current_q.clone()), params) {
        Ok(r) => ActionOutcome::from_ik(chain, &target, &r),
        Err(e) => e.into(),
    }
}

pub fn era_translate(
    action: &Action,
    current_q: &JointConfig,
    chain: &KinematicChain,
    params: &SolverParams,
) -> ActionOutcome {
    let ActionPayload::Era { pose, phi } = &action.payload else {
        return ActionOutcome::fail(Failure::Malformed, None);
    };
    if chain.srs().is_none() || phi.len() != chain.redundancy() || !finite(phi) {
        return ActionOutcome::fail(Failure::Malformed, None);
    }
    let target = match resolve_pose(chain, current_q, action.mode, pose) {
        Ok(p) => p,
        Err(f) => return ActionOutcome::fail(f, None),
    };
    let phi_target = match action.mode {
        ActionMode::Absolute => ArmAngle::new(phi[0]),
        ActionMode::Delta => match redundancy::arm_angle_from_config(chain, current_q) {
            Ok(current) => ArmAngle::new(current.radians() + phi[0]),
            Err(_) => return ActionOutcome::fail(Failure::Unreachable, None),
        },
    };
    let circle = match redundancy::elbow_circle(chain, &target) {
        Ok(c) => c,
        Err(GeometryError::Unreachable { .. }) => return ActionOutcome::fail(Failure::Unreachable, None),
        Err(_) => return ActionOutcome::fail(Failure::Malformed, None),
    };
    let elbow = circle.point(phi_target);
    let request = IkRequest::new(target, current_q.clone()).with_point(chain.elbow_link_index, elbow);
    match ik::solve_constrained(chain, &request, params) {
        Ok(r) => ActionOutcome::from_ik(chain, &target, &r),
        Err(e) => e.into(),
    }
}

pub fn erj_translate(
    action: &Action,
    current_q: &JointConfig,
    chain: &KinematicChain,
    selection: &RedundancySelection,
    params: &SolverParams,
) -> ActionOutcome {
    let ActionPayload::Erj { pose, joint_values } = &action.payload else {
        return ActionOutcome::fail(Failure::Malformed, None);
    };
    if selection.validate(chain).is_err()
        || joint_values.len() != selection.joint_indices.len()
        || !finite(joint_values)
    {
        return ActionOutcome::fail(Failure::Malformed, None);
    }
    let target = match resolve_pose(chain, current_q, action.mode, pose) {
        Ok(p) => p,
        Err(f) => return ActionOutcome::fail(f, None),
    };
    let mut request = IkRequest::new(target, current_q.clone());
    for (&j, &v) in selection.joint_indices.iter().zip(joint_values) {
        let value = match action.mode {
            ActionMode::Absolute => v,
            ActionMode::Delta => current_q[j] + v,
        };
        if !chain.joints[j].limits.contains(value) {
            return ActionOutcome::fail(Failure::LimitViolation, None);
        }
        request.fixed_joints.insert(j, value);
    }
    match ik::solve_subchain(chain, &request, params) {
        Ok(r) => ActionOutcome::from_ik(chain, &target, &r),
        Err(e) => e.into(),
    }
}

/// RMP-style joint-space redundancy term `α(q₀ − q) − β q̇`.
pub fn rmp_redundancy_resolution(
    q: &[f64],
    q_dot: &[f64],
    q0: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<Vec<f64>, KinematicsError> {
    if q_dot.len() != q.len() || q0.len() != q.len() {
        return Err(KinematicsError::DimensionMismatch {
            expected: q.len(),
            got: if q_dot.len() != q.len() { q_dot.len() } else { q0.len() },
        });
    }
    Ok(q.iter()
        .zip(q_dot)
        .zip(q0)
        .map(|((&qi, &qdi), &q0i)| alpha * (q0i - qi) - beta * qdi)
        .collect())
}

/// JAiLeR control reward `exp(−λ_err‖δx‖²) − λ_eff‖q̈‖`.
pub fn jailer_control_reward(delta_x: &[f64; 6], q_ddot: &[f64], lambda_err: f64, lambda_eff: f64) -> f64 {
    let dx2: f64 = delta_x.iter().map(|v| v * v).sum();
    let qdd = q_ddot.iter().map(|v| v * v).sum::<f64>().sqrt();
    (-lambda_err * dx2).exp() - lambda_eff * qdd
}

/// Quaternion array for a world-frame rotation vector (axis · angle).
pub fn rotation_delta(rotation: &Vector3<f64>) -> [f64; 4] {
    let q = UnitQuaternion::from_scaled_axis(*rotation);
    let q: &Quaternion<f64> = q.quaternion();
    [q.w, q.i, q.j, q.k]
}

/// Delta pose array from a translation and a rotation vector.
pub fn delta_pose(translation: &Vector3<f64>, rotation: &Vector3<f64>) -> [f64; 7] {
    let r = rotation_delta(rotation);
    [translation.x, translation.y, translation.z, r[0], r[1], r[2], r[3]]
}
