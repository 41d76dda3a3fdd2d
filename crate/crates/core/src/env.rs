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

//! Quasi-static episodic environment over a kinematic chain.
//!
//! Valid actions teleport the arm to the translated target, sweeping the
//! straight joint-space segment for collisions; invalid actions earn exactly
//! zero reward.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{self, Action, ActionMode, ActionOutcome, RedundancySelection, Space, IDENTITY_DELTA};
use crate::chain::{JointConfig, JointKind, KinematicChain};
use crate::collision::{self, ArmCollisionModel, Contact, Obstacle};
use crate::error::EnvError;
use crate::ik::{self, IkRequest, SolverParams};
use crate::pose::Pose;
use crate::redundancy::{self, ArmAngle};

/// Joint-space interpolation substeps checked for collision on every valid step.
pub const SWEEP_SUBSTEPS: usize = 10;
/// Rate of the dense reward `exp(-k d)`.
pub const REWARD_RATE: f64 = 5.0;
/// Capsule radius of the default arm model (metres).
pub const ARM_RADIUS: f64 = 0.045;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default = "default_workspace")]
    pub workspace: Aabb,
}

fn default_workspace() -> Aabb {
    Aabb { min: [-1.2, -1.2, 0.0], max: [1.2, 1.2, 1.5] }
}

impl Default for Scene {
    fn default() -> Self {
        Scene { obstacles: Vec::new(), workspace: default_workspace() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InvalidActionPolicy {
    /// Keep the episode running; the arm does not move.
    #[default]
    Hold,
    Terminate,
}

/// What counts as success.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SuccessSpec {
    Pose {
        target: Pose,
        position_tolerance: f64,
        orientation_tolerance: f64,
    },
    /// End-effector pose plus elbow point; expresses a full joint goal.
    ElbowPose {
        target: Pose,
        elbow: [f64; 3],
        position_tolerance: f64,
        orientation_tolerance: f64,
        elbow_tolerance: f64,
    },
}

impl SuccessSpec {
    pub fn target_pose(&self) -> Pose {
        match self {
            SuccessSpec::Pose { target, .. } | SuccessSpec::ElbowPose { target, .. } => *target,
        }
    }

    pub fn target_elbow(&self) -> Option<Vector3<f64>> {
        match self {
            SuccessSpec::ElbowPose { elbow, .. } => Some(Vector3::from(*elbow)),
            SuccessSpec::Pose { .. } => None,
        }
    }

    /// Task distance: metres, with radians weighted by the IK orientation scale.
    pub fn distance(&self, pose: &Pose, elbow: &Vector3<f64>) -> f64 {
        let t = self.target_pose();
        let mut d = (pose.position - t.position).norm() + ik::ORIENTATION_ROW_SCALE * pose.angle_to(&t);
        if let Some(e) = self.target_elbow() {
            d += (elbow - e).norm();
        }
        d
    }

    pub fn satisfied(&self, pose: &Pose, elbow: &Vector3<f64>) -> bool {
        match *self {
            SuccessSpec::Pose { target, position_tolerance, orientation_tolerance } => {
                pose.approx_eq(&target, position_tolerance, orientation_tolerance)
            }
            SuccessSpec::ElbowPose { target, elbow: e, position_tolerance, orientation_tolerance, elbow_tolerance } => {
                pose.approx_eq(&target, position_tolerance, orientation_tolerance)
                    && (elbow - Vector3::from(e)).norm() <= elbow_tolerance
            }
        }
    }

    fn translated(&self, offset: &Vector3<f64>) -> SuccessSpec {
        let mut s = *self;
        match &mut s {
            SuccessSpec::Pose { target, .. } => target.position += offset,
            SuccessSpec::ElbowPose { target, elbow, .. } => {
                target.position += offset;
                let e = Vector3::from(*elbow) + offset;
                *elbow = e.into();
            }
        }
        s
    }
}

/// Distinguishes scripted behaviours of the builtin tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    #[default]
    ReachTarget,
    ReachElbowPose,
    CabinetReach,
}

/// Per-reset randomisation of the goal.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TargetJitter {
    /// Uniform half-range of the target translation per axis (m).
    pub position: [f64; 3],
    /// Uniform half-range added to the goal arm angle (rad); elbow-pose goals only.
    pub arm_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    #[serde(default)]
    pub kind: TaskKind,
    #[serde(default)]
    pub scene: Scene,
    pub initial_q: Vec<f64>,
    pub success: SuccessSpec,
    pub horizon: usize,
    #[serde(default)]
    pub invalid_action_policy: InvalidActionPolicy,
    #[serde(default)]
    pub jitter: TargetJitter,
    /// Joint configuration realising the nominal goal, when known.
    #[serde(default)]
    pub goal_q: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TaskDoc {
    #[serde(default)]
    scene: Scene,
    task: TaskSpec,
}

/// Parse `{scene: {...}, task: {...}}`; the top-level scene replaces the task's.
pub fn load_task(document: &str) -> Result<TaskSpec, EnvError> {
    let doc: TaskDoc = serde_json::from_str(document)?;
    let mut task = doc.task;
    task.scene = doc.scene;
    Ok(task)
}

pub fn task_document(task: &TaskSpec) -> serde_json::Value {
    serde_json::json!({ "scene": task.scene, "task": task })
}

/// Goal realised for one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetParams {
    pub success: SuccessSpec,
    pub goal_q: Option<JointConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub step: usize,
    pub q: JointConfig,
    pub ee_pose: Pose,
    pub elbow: [f64; 3],
    pub target: TargetParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub action: crate::action::ActionRecord,
    pub valid: bool,
    pub failure: action::Failure,
    pub latency: f64,
    /// Solver iterations, when the action went through IK.
    pub iterations: Option<usize>,
    pub collision: bool,
    pub reward: f64,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub success: bool,
    pub steps: usize,
    pub invalid_count: usize,
    pub collision_count: usize,
    pub total_reward: f64,
    pub records: Vec<StepRecord>,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub record: StepRecord,
    pub outcome: ActionOutcome,
}

#[derive(Debug, Clone)]
struct EpisodeState {
    q: JointConfig,
    target: TargetParams,
    step: usize,
    done: bool,
    success: bool,
}

/// One environment instance; not shared between threads.
#[derive(Debug, Clone)]
pub struct Env {
    pub chain: KinematicChain,
    pub task: TaskSpec,
    pub model: ArmCollisionModel,
    pub selection: RedundancySelection,
    pub params: SolverParams,
    state: Option<EpisodeState>,
}

impl Env {
    pub fn new(chain: KinematicChain, task: TaskSpec) -> Result<Self, EnvError> {
        let model = ArmCollisionModel::from_chain(&chain, ARM_RADIUS);
        let selection = RedundancySelection::default_for(&chain);
        let env = Env { chain, task, model, selection, params: SolverParams::default(), state: None };
        env.validate_task()?;
        Ok(env)
    }

    pub fn with_selection(mut self, selection: RedundancySelection) -> Self {
        self.selection = selection;
        self
    }

    pub fn with_params(mut self, params: SolverParams) -> Self {
        self.params = params;
        self
    }

    fn validate_task(&self) -> Result<(), EnvError> {
        let t = &self.task;
        if t.horizon == 0 {
            return Err(EnvError::InvalidTask("horizon must be >= 1".into()));
        }
        if let Some(o) = t.scene.obstacles.iter().find(|o| !o.is_valid()) {
            return Err(EnvError::InvalidTask(format!("obstacle `{}` has non-positive size", o.name)));
        }
        let q = JointConfig::from_slice(&t.initial_q);
        self.chain.validate(&q)?;
        if !self.chain.within_limits(&q) {
            return Err(EnvError::InvalidTask("initial_q violates joint limits".into()));
        }
        let contacts = self.contacts(&q)?;
        if !contacts.is_empty() {
            return Err(EnvError::InitialCollision(contacts.len()));
        }
        Ok(())
    }

    pub fn contacts(&self, q: &JointConfig) -> Result<Vec<Contact>, EnvError> {
        Ok(collision::collide(&self.chain, q, &self.model, &self.task.scene.obstacles)?)
    }

    fn observe(&self, s: &EpisodeState) -> Observation {
        let frames = self.chain.link_frames(&s.q).expect("state q validated");
        Observation {
            step: s.step,
            q: s.q.clone(),
            ee_pose: Pose::from_isometry(&(frames[self.chain.dof()] * self.chain.ee_offset)),
            elbow: frames[self.chain.elbow_link_index].translation.vector.into(),
            target: s.target.clone(),
        }
    }

    /// Start an episode. The goal is randomised deterministically from `seed`.
    pub fn reset(&mut self, seed: u64) -> Result<Observation, EnvError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = JointConfig::from_slice(&self.task.initial_q);
        let target = self.sample_target(&mut rng)?;
        let p = target.success.target_pose().position;
        if !self.task.scene.workspace.contains(&p) {
            return Err(EnvError::InvalidTask("target outside workspace bounds".into()));
        }
        let state = EpisodeState { q, target, step: 0, done: false, success: false };
        let obs = self.observe(&state);
        self.state = Some(state);
        Ok(obs)
    }

    fn sample_target(&self, rng: &mut ChaCha8Rng) -> Result<TargetParams, EnvError> {
        let j = self.task.jitter;
        let mut offset = Vector3::zeros();
        for i in 0..3 {
            if j.position[i] > 0.0 {
                offset[i] = rng.random_range(-j.position[i]..=j.position[i]);
            }
        }
        let dphi = if j.arm_angle > 0.0 { rng.random_range(-j.arm_angle..=j.arm_angle) } else { 0.0 };
        let nominal_goal = self.task.goal_q.as_ref().map(|g| JointConfig::from_slice(g));
        match (self.task.success, nominal_goal) {
            (SuccessSpec::ElbowPose { target, position_tolerance, orientation_tolerance, elbow_tolerance, .. }, Some(goal))
                if self.chain.srs().is_some() =>
            {
                // move the goal pose and arm angle, then re-solve for the joint goal
                let phi = redundancy::arm_angle_from_config(&self.chain, &goal)
                    .map_err(|e| EnvError::InvalidTask(e.to_string()))?;
                let pose = Pose::new(target.position + offset, target.orientation());
                let q = configure(&self.chain, &pose, ArmAngle::new(phi.radians() + dphi), &goal)
                    .ok_or_else(|| EnvError::InvalidTask("jittered elbow goal is infeasible".into()))?;
                let elbow = self.chain.elbow_position(&q)?;
                Ok(TargetParams {
                    success: SuccessSpec::ElbowPose {
                        target: pose,
                        elbow: elbow.into(),
                        position_tolerance,
                        orientation_tolerance,
                        elbow_tolerance,
                    },
                    goal_q: Some(q),
                })
            }
            (success, goal) => Ok(TargetParams { success: success.translated(&offset), goal_q: goal }),
        }
    }

    pub fn is_done(&self) -> bool {
        self.state.as_ref().is_none_or(|s| s.done)
    }

    pub fn current_q(&self) -> Option<&JointConfig> {
        self.state.as_ref().map(|s| &s.q)
    }

    pub fn step(&mut self, space: Space, action: &Action) -> Result<StepOutcome, EnvError> {
        let Some(state) = self.state.as_ref() else {
            return Err(EnvError::EpisodeDone);
        };
        if state.done {
            return Err(EnvError::EpisodeDone);
        }
        let outcome = action::translate(space, action, &state.q, &self.chain, &self.selection, &self.params);
        let mut next = state.clone();
        next.step += 1;
        let mut collision = false;
        let reward;
        if let (true, Some(target_q)) = (outcome.valid, outcome.q_target.as_ref()) {
            let (reached, hit) = self.sweep(&state.q, target_q)?;
            next.q = reached;
            collision = hit;
            let obs = self.observe(&next);
            let elbow = Vector3::from(obs.elbow);
            if collision {
                reward = 0.0;
                next.done = true;
            } else {
                reward = (-REWARD_RATE * next.target.success.distance(&obs.ee_pose, &elbow)).exp();
                if next.target.success.satisfied(&obs.ee_pose, &elbow) {
                    next.success = true;
                    next.done = true;
                }
            }
        } else {
            reward = 0.0;
            if self.task.invalid_action_policy == InvalidActionPolicy::Terminate {
                next.done = true;
            }
        }
        if next.step >= self.task.horizon {
            next.done = true;
        }
        let record = StepRecord {
            step: next.step,
            action: action.to_record(),
            valid: outcome.valid,
            failure: outcome.failure,
            latency: outcome.latency,
            iterations: outcome.diagnostics.map(|d| d.iterations),
            collision,
            reward,
            success: next.success,
        };
        let observation = self.observe(&next);
        let done = next.done;
        self.state = Some(next);
        Ok(StepOutcome { observation, reward, done, record, outcome })
    }

    /// Walk the joint-space segment; stops at the first colliding substep.
    fn sweep(&self, from: &JointConfig, to: &JointConfig) -> Result<(JointConfig, bool), EnvError> {
        for k in 1..=SWEEP_SUBSTEPS {
            let t = k as f64 / SWEEP_SUBSTEPS as f64;
            let q = JointConfig(from.0.lerp(&to.0, t));
            if !self.contacts(&q)?.is_empty() {
                return Ok((q, true));
            }
        }
        Ok((to.clone(), false))
    }
}

/// Roll out one episode with `policy`.
pub fn run_episode(env: &mut Env, space: Space, policy: &mut dyn Policy, seed: u64) -> Result<EpisodeResult, EnvError> {
    let mut obs = env.reset(seed)?;
    let mut records = Vec::new();
    let mut result = EpisodeResult {
        success: false,
        steps: 0,
        invalid_count: 0,
        collision_count: 0,
        total_reward: 0.0,
        records: Vec::new(),
    };
    loop {
        let action = policy.act(&obs);
        let out = env.step(space, &action)?;
        result.steps += 1;
        result.total_reward += out.reward;
        if !out.record.valid {
            result.invalid_count += 1;
        }
        if out.record.collision {
            result.collision_count += 1;
        }
        result.success = out.record.success;
        records.push(out.record);
        obs = out.observation;
        if out.done {
            break;
        }
    }
    result.records = records;
    Ok(result)
}

#[derive(Serialize)]
struct LogLine<'a> {
    episode: usize,
    seed: u64,
    #[serde(flatten)]
    record: &'a StepRecord,
}

/// Append one episode as JSON lines, one step record per line.
pub fn write_episode_log<W: std::io::Write>(
    out: &mut W,
    episode: usize,
    seed: u64,
    result: &EpisodeResult,
) -> Result<(), EnvError> {
    for record in &result.records {
        serde_json::to_writer(&mut *out, &LogLine { episode, seed, record })?;
        out.write_all(b"\n").map_err(serde_json::Error::io)?;
    }
    Ok(())
}

/// Solve for the configuration with end-effector `pose` and elbow at arm
/// angle `phi`, starting from `seed`. Tight tolerances; `None` if infeasible.
pub fn configure(chain: &KinematicChain, pose: &Pose, phi: ArmAngle, seed: &JointConfig) -> Option<JointConfig> {
    let circle = redundancy::elbow_circle(chain, pose).ok()?;
    let request = IkRequest::new(*pose, seed.clone()).with_point(chain.elbow_link_index, circle.point(phi));
    let params = SolverParams { max_iterations: 400, ..SolverParams::default() }.with_tolerance(1e-9);
    let r = ik::solve_constrained(chain, &request, &params).ok()?;
    r.converged.then_some(r.q)
}

/// Hand pointing along world +x.
pub fn horizontal_orientation() -> UnitQuaternion<f64> {
    UnitQuaternion::from_euler_angles(0.0, FRAC_PI_2, 0.0)
}

/// Seed for forward reaches with the hand horizontal and the elbow up.
pub fn forward_seed(chain: &KinematicChain) -> JointConfig {
    let mut q = chain.mid_config();
    // the preset is laid out for the seven-joint shoulder-elbow-wrist layout
    if chain.srs().is_some() {
        q.0.copy_from_slice(&[0.0, 0.3, 0.0, -2.0, 0.0, 0.9, 0.0]);
    }
    q
}

/// Cabinet cavity, open towards the robot (−x side).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CabinetGeometry {
    /// x of the open face.
    pub front: f64,
    /// x of the inner back face.
    pub back: f64,
    /// Half-width of the opening along y.
    pub half_width: f64,
    /// Half-height of the opening along z.
    pub half_height: f64,
    /// z of the cavity centre.
    pub center_z: f64,
    pub wall: f64,
}

impl Default for CabinetGeometry {
    fn default() -> Self {
        CabinetGeometry { front: 0.35, back: 0.82, half_width: 0.25, half_height: 0.12, center_z: 0.333, wall: 0.03 }
    }
}

impl CabinetGeometry {
    /// Back, top, bottom, left and right walls.
    pub fn walls(&self) -> Vec<Obstacle> {
        let depth = self.back + self.wall - self.front;
        let cx = self.front + 0.5 * depth;
        let hx = 0.5 * depth;
        let outer_y = self.half_width + self.wall;
        let outer_z = self.half_height + self.wall;
        let hw = 0.5 * self.wall;
        vec![
            Obstacle::cuboid("back", Vector3::new(self.back + hw, 0.0, self.center_z), [hw, outer_y, outer_z]),
            Obstacle::cuboid("top", Vector3::new(cx, 0.0, self.center_z + self.half_height + hw), [hx, outer_y, hw]),
            Obstacle::cuboid("bottom", Vector3::new(cx, 0.0, self.center_z - self.half_height - hw), [hx, outer_y, hw]),
            Obstacle::cuboid("left", Vector3::new(cx, self.half_width + hw, self.center_z), [hx, hw, outer_z]),
            Obstacle::cuboid("right", Vector3::new(cx, -self.half_width - hw, self.center_z), [hx, hw, outer_z]),
        ]
    }
}

/// Start and goal pose of the cabinet task.
pub const CABINET_START_X: f64 = 0.45;
pub const CABINET_GOAL_X: f64 = 0.70;
/// Arm angle that keeps the forearm inside the opening.
pub const CABINET_TUCK_ANGLE: f64 = 70.0 * std::f64::consts::PI / 180.0;

/// Elbow-pose start and goal arm angles (opposite sides of the circle).
pub const ELBOW_START_ANGLE: f64 = 1.0;
pub const ELBOW_GOAL_ANGLE: f64 = -1.0;

/// `reach_target`, `reach_elbow_pose` and `cabinet_reach` for `chain`. The
/// elbow and cabinet tasks need an S-R-S chain and are omitted otherwise.
pub fn builtin_tasks(chain: &KinematicChain) -> Vec<TaskSpec> {
    let mut tasks = Vec::new();
    let horizontal = horizontal_orientation();
    let seed = forward_seed(chain);

    let home = Pose::new(Vector3::new(0.55, 0.0, 0.40), horizontal);
    let home_q = if chain.srs().is_some() {
        configure(chain, &home, ArmAngle::new(0.0), &seed)
    } else {
        let r = ik::solve_pinv(
            chain,
            &IkRequest::new(home, seed.clone()),
            &SolverParams { max_iterations: 400, ..SolverParams::default() }.with_tolerance(1e-9),
        )
        .ok();
        r.filter(|r| r.converged).map(|r| r.q)
    };
    if let Some(q) = home_q {
        tasks.push(TaskSpec {
            name: "reach_target".into(),
            kind: TaskKind::ReachTarget,
            scene: Scene::default(),
            initial_q: q.to_vec(),
            success: SuccessSpec::Pose {
                target: Pose::new(Vector3::new(0.62, 0.05, 0.36), horizontal),
                position_tolerance: 0.01,
                orientation_tolerance: 0.05,
            },
            horizon: 60,
            invalid_action_policy: InvalidActionPolicy::Hold,
            jitter: TargetJitter { position: [0.05, 0.1, 0.05], arm_angle: 0.0 },
            goal_q: None,
        });
    }
    if chain.srs().is_none() {
        return tasks;
    }

    let start = Pose::new(Vector3::new(0.60, 0.0, 0.25), horizontal);
    let start_q = configure(chain, &start, ArmAngle::new(ELBOW_START_ANGLE), &seed);
    let goal = Pose::new(Vector3::new(0.62, 0.0, 0.27), horizontal);
    let goal_q = start_q.as_ref().and_then(|q| {
        // mirror image of the start across the x-z plane
        let mut g = q.clone();
        for (v, j) in g.iter_mut().zip(&chain.joints) {
            if j.kind == JointKind::RevoluteTwist {
                *v = -*v;
            }
        }
        configure(chain, &goal, ArmAngle::new(ELBOW_GOAL_ANGLE), &g)
    });
    if let (Some(q0), Some(qg)) = (start_q, goal_q) {
        let elbow = chain.elbow_position(&qg).expect("valid goal");
        tasks.push(TaskSpec {
            name: "reach_elbow_pose".into(),
            kind: TaskKind::ReachElbowPose,
            scene: Scene::default(),
            initial_q: q0.to_vec(),
            success: SuccessSpec::ElbowPose {
                target: goal,
                elbow: elbow.into(),
                position_tolerance: 0.01,
                orientation_tolerance: 0.05,
                elbow_tolerance: 0.02,
            },
            horizon: 60,
            invalid_action_policy: InvalidActionPolicy::Hold,
            jitter: TargetJitter { position: [0.02, 0.02, 0.02], arm_angle: 0.1 },
            goal_q: Some(qg.to_vec()),
        });
    }

    let cab = CabinetGeometry::default();
    let start = Pose::new(Vector3::new(CABINET_START_X, 0.0, cab.center_z), horizontal);
    if let Some(q0) = configure(chain, &start, ArmAngle::new(0.0), &seed) {
        tasks.push(TaskSpec {
            name: "cabinet_reach".into(),
            kind: TaskKind::CabinetReach,
            scene: Scene { obstacles: cab.walls(), workspace: default_workspace() },
            initial_q: q0.to_vec(),
            success: SuccessSpec::Pose {
                target: Pose::new(Vector3::new(CABINET_GOAL_X, 0.0, cab.center_z), horizontal),
                position_tolerance: 0.01,
                orientation_tolerance: 0.05,
            },
            horizon: 60,
            invalid_action_policy: InvalidActionPolicy::Hold,
            jitter: TargetJitter { position: [0.02, 0.02, 0.01], arm_angle: 0.0 },
            goal_q: None,
        });
    }
    tasks
}

pub fn builtin_task(chain: &KinematicChain, name: &str) -> Option<TaskSpec> {
    builtin_tasks(chain).into_iter().find(|t| t.name == name)
}

/// Maps observations to actions.
pub trait Policy {
    fn act(&mut self, obs: &Observation) -> Action;
}

/// Steps spent rotating the redundancy before moving the hand (cabinet task).
pub const TUCK_STEPS: usize = 10;
/// Steps spent on the straight-line approach.
pub const APPROACH_STEPS: usize = 20;

/// Absolute waypoint commands for one entry of the script.
#[derive(Debug, Clone)]
struct Waypoint {
    pose: Pose,
    phi: f64,
    redundancy: Vec<f64>,
    q: Option<JointConfig>,
}

/// Deterministic waypoint follower for a (space, task) pair. The script is
/// planned from the first observation of each episode.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    space: Space,
    chain: KinematicChain,
    kind: TaskKind,
    selection: RedundancySelection,
    plan: Vec<Waypoint>,
    cursor: usize,
}

impl ScriptedPolicy {
    pub fn new(space: Space, chain: &KinematicChain, task: &TaskSpec, selection: &RedundancySelection) -> Self {
        ScriptedPolicy {
            space,
            chain: chain.clone(),
            kind: task.kind,
            selection: selection.clone(),
            plan: Vec::new(),
            cursor: 0,
        }
    }

    fn plan(&mut self, obs: &Observation) {
        let chain = &self.chain;
        let q0 = obs.q.clone();
        let start = obs.ee_pose;
        let goal = obs.target.success.target_pose();
        let phi0 = redundancy::arm_angle_from_config(chain, &q0).map(|a| a.radians()).unwrap_or(0.0);
        let sel = &self.selection.joint_indices;
        let hold: Vec<f64> = sel.iter().map(|&j| q0[j]).collect();

        let mut plan = Vec::new();
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        match self.kind {
            TaskKind::CabinetReach => {
                // rotate the elbow down to the tuck angle, then slide in
                let tuck = CABINET_TUCK_ANGLE;
                let mut prev = q0.clone();
                let mut q_track = Vec::new();
                for k in 1..=TUCK_STEPS {
                    let t = k as f64 / TUCK_STEPS as f64;
                    q_track.push((start, lerp(phi0, tuck, t)));
                }
                for k in 1..=APPROACH_STEPS {
                    let t = k as f64 / APPROACH_STEPS as f64;
                    q_track.push((start.interpolate(&goal, t), tuck));
                }
                for (pose, phi) in q_track {
                    let q = configure(chain, &pose, ArmAngle::new(phi), &prev);
                    if let Some(q) = &q {
                        prev = q.clone();
                    }
                    let redundancy = q.as_ref().map(|q| sel.iter().map(|&j| q[j]).collect()).unwrap_or(hold.clone());
                    plan.push(Waypoint { pose, phi, redundancy, q });
                }
            }
            TaskKind::ReachElbowPose | TaskKind::ReachTarget => {
                let goal_q = obs.target.goal_q.clone().or_else(|| {
                    let r = ik::solve_pinv(chain, &IkRequest::new(goal, q0.clone()), &SolverParams::default()).ok()?;
                    r.converged.then_some(r.q)
                });
                let (phi_goal, red_goal) = match (&obs.target.goal_q, obs.target.success.target_elbow()) {
                    (Some(gq), Some(elbow)) => {
                        let phi = redundancy::elbow_circle(chain, &goal)
                            .and_then(|c| c.angle_of(&elbow))
                            .map(|a| a.radians())
                            .unwrap_or(phi0);
                        (phi, sel.iter().map(|&j| gq[j]).collect::<Vec<_>>())
                    }
                    _ => (phi0, hold.clone()),
                };
                let dphi = redundancy::wrap_angle(phi_goal - phi0);
                for k in 1..=APPROACH_STEPS {
                    let t = k as f64 / APPROACH_STEPS as f64;
                    let q = goal_q.as_ref().map(|g| JointConfig(q0.0.lerp(&g.0, t)));
                    plan.push(Waypoint {
                        pose: start.interpolate(&goal, t),
                        phi: phi0 + dphi * t,
                        redundancy: hold.iter().zip(&red_goal).map(|(a, b)| lerp(*a, *b, t)).collect(),
                        q,
                    });
                }
            }
        }
        self.plan = plan;
        self.cursor = 0;
    }
}

impl Policy for ScriptedPolicy {
    fn act(&mut self, obs: &Observation) -> Action {
        if obs.step == 0 || self.plan.is_empty() {
            self.plan(obs);
        }
        let idx = self.cursor.min(self.plan.len() - 1);
        self.cursor += 1;
        let w = &self.plan[idx];
        let pose = w.pose.to_array();
        match self.space {
            Space::Joint => match &w.q {
                Some(q) => Action::joint(ActionMode::Absolute, q.to_vec()),
                None => Action::joint(ActionMode::Delta, vec![0.0; self.chain.dof()]),
            },
            Space::Task => Action::task(ActionMode::Absolute, pose),
            Space::Era => Action::era(ActionMode::Absolute, pose, vec![w.phi]),
            Space::Erj => Action::erj(ActionMode::Absolute, pose, w.redundancy.clone()),
        }
    }
}

/// Uniform random delta actions of bounded magnitude (radians / metres).
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    space: Space,
    dof: usize,
    redundancy: usize,
    magnitude: f64,
    rng: ChaCha8Rng,
    /// Joint space only: sample absolute targets inside these limits instead of deltas.
    joint_limits: Option<Vec<(f64, f64)>>,
}

impl RandomPolicy {
    pub fn new(space: Space, chain: &KinematicChain, seed: u64, magnitude: f64) -> Self {
        RandomPolicy {
            space,
            dof: chain.dof(),
            redundancy: chain.redundancy(),
            magnitude,
            rng: ChaCha8Rng::seed_from_u64(seed),
            joint_limits: None,
        }
    }

    /// Joint-space policy sampling absolute configurations inside the limits.
    pub fn in_limits(chain: &KinematicChain, seed: u64) -> Self {
        let mut p = RandomPolicy::new(Space::Joint, chain, seed, 0.0);
        p.joint_limits = Some(chain.limits().map(|l| (l.lo, l.hi)).collect());
        p
    }

    fn uniform(&mut self, n: usize) -> Vec<f64> {
        let m = self.magnitude;
        (0..n).map(|_| if m > 0.0 { self.rng.random_range(-m..=m) } else { 0.0 }).collect()
    }

    fn delta_pose(&mut self) -> [f64; 7] {
        if self.magnitude == 0.0 {
            return IDENTITY_DELTA;
        }
        let t = self.uniform(3);
        let r = self.uniform(3);
        action::delta_pose(&Vector3::from_column_slice(&t), &Vector3::from_column_slice(&r))
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _obs: &Observation) -> Action {
        match self.space {
            Space::Joint => match self.joint_limits.clone() {
                Some(limits) => Action::joint(
                    ActionMode::Absolute,
                    limits.iter().map(|&(lo, hi)| self.rng.random_range(lo..=hi)).collect(),
                ),
                None => Action::joint(ActionMode::Delta, self.uniform(self.dof)),
            },
            Space::Task => Action::task(ActionMode::Delta, self.delta_pose()),
            Space::Era => {
                let pose = self.delta_pose();
                Action::era(ActionMode::Delta, pose, self.uniform(self.redundancy))
            }
            Space::Erj => {
                let pose = self.delta_pose();
                Action::erj(ActionMode::Delta, pose, self.uniform(self.redundancy))
            }
        }
    }
}
