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

//! Benchmark harness: invalid-action rates, translation latency, scripted
//! task success and the ERJ joint-selection ablation.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{self, Failure, RedundancySelection, Space};
use crate::chain::{self, JointConfig, JointKind, KinematicChain};
use crate::env::{self, Env, EpisodeResult, Policy, RandomPolicy, ScriptedPolicy, TaskSpec};
use crate::error::BenchError;
use crate::ik::SolverParams;
use crate::redundancy::{self, ArmAngle};

pub const SCHEMA_VERSION: u32 = 1;
const WILSON_Z: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchKind {
    Validity,
    Latency,
    Tasks,
    Ablation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

/// Checks evaluated after a run; any failure maps to exit code 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Expectation {
    SuccessAtLeast { space: Space, task: String, value: f64 },
    SuccessAtMost { space: Space, task: String, value: f64 },
    InvalidRateGreater { space: Space, than: Space },
    InvalidRateWithinFactor { space: Space, of: Space, factor: f64 },
    MedianLatencyAtMostMs { space: Space, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Builtin chain name or path to a chain file.
    pub chain: String,
    pub spaces: Vec<Space>,
    /// Task names; empty means every builtin task.
    pub tasks: Vec<String>,
    pub episodes: usize,
    /// Steps per random-policy episode in the validity bench.
    pub steps: usize,
    pub seed: u64,
    pub solver: SolverParams,
    pub out: PathBuf,
    pub format: ReportFormat,
    /// Overrides the ERJ joint selection.
    pub select_joints: Option<Vec<usize>>,
    pub benches: Vec<BenchKind>,
    /// Random-policy step size (rad for joints and arm angles, m for positions).
    pub magnitude: f64,
    pub validity_task: String,
    pub latency_calls: usize,
    /// Write JSON-lines step logs for the task bench.
    pub episode_logs: bool,
    pub expect: Vec<Expectation>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            chain: "srs7".into(),
            spaces: Space::ALL.to_vec(),
            tasks: Vec::new(),
            episodes: 20,
            steps: 100,
            seed: 0,
            solver: SolverParams::default(),
            out: PathBuf::from("bench-out"),
            format: ReportFormat::Json,
            select_joints: None,
            benches: vec![BenchKind::Validity, BenchKind::Latency, BenchKind::Tasks],
            magnitude: 0.05,
            validity_task: "reach_target".into(),
            latency_calls: 1000,
            episode_logs: false,
            expect: Vec::new(),
        }
    }
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| BenchError::Config(format!("{}: {}", e.path(), e.inner())))
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.episodes == 0 {
            return Err(BenchError::Config("episodes must be >= 1".into()));
        }
        if self.steps == 0 {
            return Err(BenchError::Config("steps must be >= 1".into()));
        }
        if self.spaces.is_empty() {
            return Err(BenchError::Config("no spaces selected".into()));
        }
        if !(self.magnitude.is_finite() && self.magnitude >= 0.0) {
            return Err(BenchError::Config("magnitude must be finite and >= 0".into()));
        }
        self.solver.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        Ok(())
    }
}

/// Everything a bench run needs, resolved from a config.
#[derive(Debug, Clone)]
pub struct BenchContext {
    pub config: BenchConfig,
    pub chain: KinematicChain,
    pub tasks: Vec<TaskSpec>,
    pub selection: RedundancySelection,
}

impl BenchContext {
    pub fn new(config: BenchConfig) -> Result<Self, BenchError> {
        config.validate()?;
        let chain = chain::resolve_chain(&config.chain).map_err(|e| BenchError::Config(e.to_string()))?;
        let builtin = env::builtin_tasks(&chain);
        let mut wanted: Vec<String> = config.tasks.clone();
        if !config.benches.contains(&BenchKind::Tasks) && !config.benches.contains(&BenchKind::Ablation) {
            wanted.clear();
        }
        let tasks = if config.tasks.is_empty() {
            builtin
        } else {
            let mut out = Vec::new();
            for name in &wanted {
                match builtin.iter().find(|t| &t.name == name) {
                    Some(t) => out.push(t.clone()),
                    None => return Err(BenchError::Config(format!("unknown task `{name}` for chain `{}`", chain.name))),
                }
            }
            out
        };
        let selection = match &config.select_joints {
            Some(j) => RedundancySelection::new(j.clone()),
            None => RedundancySelection::default_for(&chain),
        };
        selection.validate(&chain).map_err(BenchError::Config)?;
        Ok(BenchContext { config, chain, tasks, selection })
    }

    fn task(&self, name: &str) -> Result<TaskSpec, BenchError> {
        env::builtin_task(&self.chain, name)
            .ok_or_else(|| BenchError::Config(format!("unknown task `{name}` for chain `{}`", self.chain.name)))
    }

    fn env(&self, task: TaskSpec, selection: &RedundancySelection) -> Result<Env, BenchError> {
        Ok(Env::new(self.chain.clone(), task)?
            .with_selection(selection.clone())
            .with_params(self.config.solver))
    }
}

/// Binomial rate with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub count: usize,
    pub total: usize,
    pub rate: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Rate {
    pub fn new(count: usize, total: usize) -> Self {
        if total == 0 {
            return Rate { count, total, rate: 0.0, stderr: 0.0, ci_low: 0.0, ci_high: 1.0 };
        }
        let n = total as f64;
        let p = count as f64 / n;
        let z2 = WILSON_Z * WILSON_Z;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Rate {
            count,
            total,
            rate: p,
            stderr: (p * (1.0 - p) / n).sqrt(),
            ci_low: (centre - half).max(0.0),
            ci_high: (centre + half).min(1.0),
        }
    }
}

/// Latency summary in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub samples: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl Timing {
    pub fn from_seconds(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Timing::default();
        }
        let mut ms: Vec<f64> = samples.iter().map(|s| s * 1e3).collect();
        ms.sort_by(f64::total_cmp);
        let n = ms.len();
        let median = if n % 2 == 1 { ms[n / 2] } else { 0.5 * (ms[n / 2 - 1] + ms[n / 2]) };
        let p99 = ms[((0.99 * n as f64).ceil() as usize).clamp(1, n) - 1];
        Timing {
            samples: n,
            mean_ms: ms.iter().sum::<f64>() / n as f64,
            median_ms: median,
            p99_ms: p99,
            max_ms: ms[n - 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IterationStats {
    pub solves: usize,
    pub mean: f64,
    pub max: usize,
}

impl IterationStats {
    fn from_counts(counts: &[usize]) -> Self {
        if counts.is_empty() {
            return IterationStats::default();
        }
        IterationStats {
            solves: counts.len(),
            mean: counts.iter().sum::<usize>() as f64 / counts.len() as f64,
            max: counts.iter().copied().max().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityRow {
    pub space: Space,
    pub task: String,
    pub magnitude: f64,
    pub invalid: Rate,
    pub failures: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub space: Space,
    pub attempts: usize,
    pub timing: Timing,
    pub iterations: IterationStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRow {
    pub space: Space,
    pub task: String,
    pub selection: Vec<usize>,
    pub success: Rate,
    pub invalid: Rate,
    pub collision_episodes: usize,
    pub mean_reward: f64,
    pub timing: Timing,
    pub iterations: IterationStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub joint: usize,
    pub kind: JointKind,
    pub task: String,
    pub success: Rate,
    pub invalid: Rate,
    /// Targets whose goal configuration the selection can steer to from the start.
    pub feasible: Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub chain: String,
    pub seed: u64,
    pub validity: Vec<ValidityRow>,
    pub latency: Vec<LatencyRow>,
    pub tasks: Vec<TaskRow>,
    pub ablation: Vec<AblationRow>,
}

impl BenchReport {
    pub fn empty(chain: &str, seed: u64) -> Self {
        BenchReport {
            schema_version: SCHEMA_VERSION,
            chain: chain.into(),
            seed,
            validity: Vec::new(),
            latency: Vec::new(),
            tasks: Vec::new(),
            ablation: Vec::new(),
        }
    }

    /// Structural checks run before anything is written.
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |what: String| Err(BenchError::Schema(what));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} != {SCHEMA_VERSION}", self.schema_version));
        }
        let rate_ok = |r: &Rate| {
            (0.0..=1.0).contains(&r.rate) && r.ci_low <= r.ci_high && r.count <= r.total
        };
        let timing_ok = |t: &Timing| t.samples == 0 || (t.median_ms > 0.0 && t.p99_ms.is_finite());
        for r in &self.validity {
            if !rate_ok(&r.invalid) {
                return bad(format!("validity {}/{}: rate out of range", r.space, r.task));
            }
        }
        for r in &self.latency {
            if !timing_ok(&r.timing) {
                return bad(format!("latency {}: non-positive timing", r.space));
            }
        }
        for r in &self.tasks {
            if !rate_ok(&r.success) || !rate_ok(&r.invalid) || !timing_ok(&r.timing) {
                return bad(format!("tasks {}/{}: field out of range", r.space, r.task));
            }
        }
        for r in &self.ablation {
            if !rate_ok(&r.success) || !rate_ok(&r.invalid) || !rate_ok(&r.feasible) {
                return bad(format!("ablation joint {}: rate out of range", r.joint));
            }
        }
        Ok(())
    }

    /// Copy with every wall-clock field zeroed; equal across reruns of one config.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        for row in &mut r.latency {
            row.timing = Timing::default();
        }
        for row in &mut r.tasks {
            row.timing = Timing::default();
        }
        r
    }

    pub fn validity_for(&self, space: Space) -> Option<&ValidityRow> {
        self.validity.iter().find(|r| r.space == space)
    }

    pub fn latency_for(&self, space: Space) -> Option<&LatencyRow> {
        self.latency.iter().find(|r| r.space == space)
    }

    pub fn task_for(&self, space: Space, task: &str) -> Option<&TaskRow> {
        self.tasks.iter().find(|r| r.space == space && r.task == task)
    }
}

/// Independent per-item seeds drawn from one root; parallel order never matters.
pub fn derive_seeds(root: u64, stream: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(stream);
    (0..count).map(|_| rng.next_u64()).collect()
}

fn space_stream(space: Space) -> u64 {
    Space::ALL.iter().position(|s| *s == space).unwrap_or(0) as u64
}

/// Random-policy rollouts per space on the validity task.
pub fn run_validity_bench(ctx: &BenchContext) -> Result<Vec<ValidityRow>, BenchError> {
    let cfg = &ctx.config;
    let mut task = ctx.task(&cfg.validity_task)?;
    task.horizon = cfg.steps;
    // every space replays the same episode and policy seeds
    let seeds = derive_seeds(cfg.seed, 0x100, cfg.episodes);
    ctx.config.spaces.iter().map(|&space| {
        let results: Vec<EpisodeResult> = seeds
            .par_iter()
            .map(|&seed| {
                let mut env = ctx.env(task.clone(), &ctx.selection)?;
                let mut policy = RandomPolicy::new(space, &ctx.chain, seed ^ 0x5eed, cfg.magnitude);
                Ok(env::run_episode(&mut env, space, &mut policy, seed)?)
            })
            .collect::<Result<_, BenchError>>()?;
        let steps: usize = results.iter().map(|r| r.steps).sum();
        let invalid: usize = results.iter().map(|r| r.invalid_count).sum();
        let mut failures = BTreeMap::new();
        for rec in results.iter().flat_map(|r| &r.records).filter(|r| !r.valid) {
            *failures.entry(failure_name(rec.failure).to_string()).or_insert(0) += 1;
        }
        Ok(ValidityRow { space, task: task.name.clone(), magnitude: cfg.magnitude, invalid: Rate::new(invalid, steps), failures })
    })
    .collect()
}

fn failure_name(f: Failure) -> &'static str {
    match f {
        Failure::None => "none",
        Failure::Malformed => "malformed",
        Failure::IkNoSolution => "ik_no_solution",
        Failure::LimitViolation => "limit_violation",
        Failure::Unreachable => "unreachable",
    }
}

/// Draw a configuration inside the limits, away from the stops by `margin` of each range.
fn sample_config(chain: &KinematicChain, rng: &mut ChaCha8Rng, margin: f64) -> JointConfig {
    JointConfig::from(
        chain
            .limits()
            .map(|l| {
                let m = margin * l.span();
                rng.random_range(l.lo + m..=l.hi - m)
            })
            .collect::<Vec<_>>(),
    )
}

/// Time `translate` over `latency_calls` valid calls per space. Calls run
/// sequentially so timings are not disturbed by other work.
pub fn run_latency_bench(ctx: &BenchContext) -> Result<Vec<LatencyRow>, BenchError> {
    let cfg = &ctx.config;
    let chain = &ctx.chain;
    let mut rows = Vec::new();
    for &space in &cfg.spaces {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(0x200 + space_stream(space));
        let mut policy = RandomPolicy::new(space, chain, rng.next_u64(), cfg.magnitude.max(1e-3));
        let mut samples = Vec::with_capacity(cfg.latency_calls);
        let mut iterations = Vec::new();
        let mut attempts = 0;
        let limit = cfg.latency_calls.saturating_mul(20).max(100);
        while samples.len() < cfg.latency_calls && attempts < limit {
            attempts += 1;
            let q = sample_config(chain, &mut rng, 0.1);
            let obs = placeholder_observation(chain, &q);
            let a = policy.act(&obs);
            let out = action::translate(space, &a, &q, chain, &ctx.selection, &cfg.solver);
            if out.valid {
                samples.push(out.latency);
                if let Some(d) = out.diagnostics {
                    iterations.push(d.iterations);
                }
            }
        }
        rows.push(LatencyRow {
            space,
            attempts,
            timing: Timing::from_seconds(&samples),
            iterations: IterationStats::from_counts(&iterations),
        });
    }
    Ok(rows)
}

fn placeholder_observation(chain: &KinematicChain, q: &JointConfig) -> env::Observation {
    let pose = chain.forward_kinematics(q).expect("sampled q is valid");
    env::Observation {
        step: 1,
        q: q.clone(),
        ee_pose: pose,
        elbow: chain.elbow_position(q).expect("sampled q is valid").into(),
        target: env::TargetParams {
            success: env::SuccessSpec::Pose { target: pose, position_tolerance: 0.0, orientation_tolerance: 0.0 },
            goal_q: None,
        },
    }
}

fn scripted_episodes(
    ctx: &BenchContext,
    space: Space,
    task: &TaskSpec,
    selection: &RedundancySelection,
    stream: u64,
) -> Result<(Vec<u64>, Vec<EpisodeResult>), BenchError> {
    let seeds = derive_seeds(ctx.config.seed, stream, ctx.config.episodes);
    let results = seeds
        .par_iter()
        .map(|&seed| {
            let mut env = ctx.env(task.clone(), selection)?;
            let mut policy = ScriptedPolicy::new(space, &ctx.chain, task, selection);
            Ok(env::run_episode(&mut env, space, &mut policy, seed)?)
        })
        .collect::<Result<Vec<_>, BenchError>>()?;
    Ok((seeds, results))
}

fn task_row(space: Space, task: &TaskSpec, selection: &RedundancySelection, results: &[EpisodeResult]) -> TaskRow {
    let episodes = results.len();
    let successes = results.iter().filter(|r| r.success).count();
    let steps: usize = results.iter().map(|r| r.steps).sum();
    let invalid: usize = results.iter().map(|r| r.invalid_count).sum();
    let records = || results.iter().flat_map(|r| &r.records);
    let latencies: Vec<f64> = records().filter(|r| r.valid).map(|r| r.latency).collect();
    let iterations: Vec<usize> = records().filter_map(|r| r.iterations).collect();
    let total_reward: f64 = results.iter().map(|r| r.total_reward).sum();
    TaskRow {
        space,
        task: task.name.clone(),
        selection: if space == Space::Erj { selection.joint_indices.clone() } else { Vec::new() },
        success: Rate::new(successes, episodes),
        invalid: Rate::new(invalid, steps),
        collision_episodes: results.iter().filter(|r| r.collision_count > 0).count(),
        mean_reward: if episodes > 0 { total_reward / episodes as f64 } else { 0.0 },
        timing: Timing::from_seconds(&latencies),
        iterations: IterationStats::from_counts(&iterations),
    }
}

/// Scripted policies for every (space, task) pair.
pub fn run_task_bench(ctx: &BenchContext) -> Result<Vec<TaskRow>, BenchError> {
    let mut rows = Vec::new();
    let logs = if ctx.config.episode_logs { Some(ctx.config.out.join("episodes")) } else { None };
    if let Some(dir) = &logs {
        fs::create_dir_all(dir)?;
    }
    for (ti, task) in ctx.tasks.iter().enumerate() {
        for &space in &ctx.config.spaces {
            let stream = 0x300 + (ti as u64) * 16 + space_stream(space);
            let (seeds, results) = scripted_episodes(ctx, space, task, &ctx.selection, stream)?;
            if let Some(dir) = &logs {
                let mut f = std::io::BufWriter::new(fs::File::create(dir.join(format!("{}-{space}.jsonl", task.name)))?);
                for (i, (seed, r)) in seeds.iter().zip(&results).enumerate() {
                    env::write_episode_log(&mut f, i, *seed, r)?;
                }
                f.flush()?;
            }
            rows.push(task_row(space, task, &ctx.selection, &results));
        }
    }
    Ok(rows)
}

/// Arm-angle resolution of the self-motion trace used by [`erj_steerable`].
pub const TRACE_STEP: f64 = 0.01;

/// Whether commanding only `joint` can carry the arm along the goal pose's
/// self-motion from the arm angle `phi_from` to the configuration `goal_q`.
///
/// The trace follows the elbow circle with constrained IK; sub-chain
/// continuation passes a stretch of it only where the selected joint is
/// strictly monotone, so either arc must be monotone in that joint.
pub fn erj_steerable(chain: &KinematicChain, goal_q: &JointConfig, phi_from: f64, joint: usize) -> bool {
    let Ok(goal_pose) = chain.forward_kinematics(goal_q) else {
        return false;
    };
    let Ok(phi_goal) = redundancy::arm_angle_from_config(chain, goal_q).map(|a| a.radians()) else {
        return false;
    };
    let short = redundancy::wrap_angle(phi_from - phi_goal);
    let long = if short >= 0.0 { short - 2.0 * PI } else { short + 2.0 * PI };
    [short, long].iter().any(|&span| {
        let n = (span.abs() / TRACE_STEP).ceil().max(1.0) as usize;
        let mut q = goal_q.clone();
        let mut prev = q[joint];
        let mut sign = 0.0;
        for i in 1..=n {
            let phi = phi_goal + span * i as f64 / n as f64;
            let Some(next) = env::configure(chain, &goal_pose, ArmAngle::new(phi), &q) else {
                return false;
            };
            let d = next[joint] - prev;
            if d == 0.0 || (sign != 0.0 && d.signum() != sign) {
                return false;
            }
            sign = d.signum();
            prev = next[joint];
            q = next;
        }
        true
    })
}

/// Scripted ERJ runs for each single-joint selection, plus the steerability
/// check per episode target. Needs a 7-joint (single redundancy) chain.
pub fn run_joint_ablation(ctx: &BenchContext) -> Result<Vec<AblationRow>, BenchError> {
    if ctx.chain.redundancy() != 1 {
        return Err(BenchError::Config("joint ablation needs exactly one redundant joint".into()));
    }
    let mut rows = Vec::new();
    for (ti, task) in ctx.tasks.iter().enumerate() {
        for joint in 0..ctx.chain.dof() {
            let selection = RedundancySelection::new(vec![joint]);
            let stream = 0x400 + ti as u64;
            let (seeds, results) = scripted_episodes(ctx, Space::Erj, task, &selection, stream)?;
            let feasible = seeds
                .par_iter()
                .map(|&seed| {
                    let mut env = ctx.env(task.clone(), &selection)?;
                    let obs = env.reset(seed)?;
                    let Some(goal) = obs.target.goal_q else {
                        return Ok(true);
                    };
                    let phi = redundancy::arm_angle_from_config(&ctx.chain, &obs.q).map(|a| a.radians());
                    Ok(phi.is_ok_and(|phi| erj_steerable(&ctx.chain, &goal, phi, joint)))
                })
                .collect::<Result<Vec<bool>, BenchError>>()?;
            let row = task_row(Space::Erj, task, &selection, &results);
            rows.push(AblationRow {
                joint,
                kind: ctx.chain.joints[joint].kind,
                task: task.name.clone(),
                success: row.success,
                invalid: row.invalid,
                feasible: Rate::new(feasible.iter().filter(|f| **f).count(), feasible.len()),
            });
        }
    }
    Ok(rows)
}

pub fn run(ctx: &BenchContext) -> Result<BenchReport, BenchError> {
    let mut report = BenchReport::empty(&ctx.chain.name, ctx.config.seed);
    for kind in &ctx.config.benches {
        match kind {
            BenchKind::Validity => report.validity = run_validity_bench(ctx)?,
            BenchKind::Latency => report.latency = run_latency_bench(ctx)?,
            BenchKind::Tasks => report.tasks = run_task_bench(ctx)?,
            BenchKind::Ablation => report.ablation = run_joint_ablation(ctx)?,
        }
    }
    report.validate()?;
    Ok(report)
}

/// Outcome of one expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub expectation: Expectation,
    pub passed: bool,
    pub detail: String,
}

pub fn check_expectations(report: &BenchReport, expect: &[Expectation]) -> Vec<Check> {
    expect
        .iter()
        .map(|e| {
            let (passed, detail) = match e {
                Expectation::SuccessAtLeast { space, task, value } | Expectation::SuccessAtMost { space, task, value } => {
                    match report.task_for(*space, task) {
                        None => (false, format!("no task row for {space}/{task}")),
                        Some(r) => {
                            let ok = if matches!(e, Expectation::SuccessAtLeast { .. }) {
                                r.success.rate >= *value
                            } else {
                                r.success.rate <= *value
                            };
                            (ok, format!("{space}/{task} success {:.3}", r.success.rate))
                        }
                    }
                }
                Expectation::InvalidRateGreater { space, than } => {
                    match (report.validity_for(*space), report.validity_for(*than)) {
                        (Some(a), Some(b)) => (
                            a.invalid.rate > b.invalid.rate,
                            format!("{space} {:.4} vs {than} {:.4}", a.invalid.rate, b.invalid.rate),
                        ),
                        _ => (false, "missing validity rows".into()),
                    }
                }
                Expectation::InvalidRateWithinFactor { space, of, factor } => {
                    match (report.validity_for(*space), report.validity_for(*of)) {
                        (Some(a), Some(b)) => {
                            let (x, y) = (a.invalid.rate, b.invalid.rate);
                            let ok = (x == 0.0 && y == 0.0) || (x <= factor * y && y <= factor * x);
                            (ok, format!("{space} {x:.4} vs {of} {y:.4}"))
                        }
                        _ => (false, "missing validity rows".into()),
                    }
                }
                Expectation::MedianLatencyAtMostMs { space, value } => match report.latency_for(*space) {
                    Some(r) => (r.timing.median_ms <= *value, format!("{space} median {:.3} ms", r.timing.median_ms)),
                    None => (false, format!("no latency row for {space}")),
                },
            };
            Check { expectation: e.clone(), passed, detail }
        })
        .collect()
}

pub const VALIDITY_COLUMNS: [&str; 13] = [
    "schema_version", "chain", "seed", "space", "task", "magnitude", "steps", "invalid", "invalid_rate",
    "ci_low", "ci_high", "unreachable", "limit_violation",
];
pub const LATENCY_COLUMNS: [&str; 12] = [
    "schema_version", "chain", "seed", "space", "attempts", "samples", "mean_ms", "median_ms", "p99_ms",
    "max_ms", "mean_iterations", "max_iterations",
];
pub const TASK_COLUMNS: [&str; 16] = [
    "schema_version", "chain", "seed", "space", "task", "selection", "episodes", "successes", "success_rate",
    "success_stderr", "success_ci_low", "success_ci_high", "invalid_rate", "collision_episodes", "median_ms",
    "mean_iterations",
];
pub const ABLATION_COLUMNS: [&str; 12] = [
    "schema_version", "chain", "seed", "joint", "kind", "task", "episodes", "successes", "success_rate",
    "invalid_rate", "feasible", "targets",
];

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_table(columns: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        out.push_str(&row.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// CSV tables keyed by file stem, one per report section.
pub fn report_csv(report: &BenchReport) -> Vec<(&'static str, String)> {
    let head = || vec![report.schema_version.to_string(), report.chain.clone(), report.seed.to_string()];
    let joined = |v: &[usize]| v.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(" ");
    let validity = report
        .validity
        .iter()
        .map(|r| {
            let mut row = head();
            let f = |k: &str| r.failures.get(k).copied().unwrap_or(0).to_string();
            row.extend([
                r.space.to_string(),
                r.task.clone(),
                r.magnitude.to_string(),
                r.invalid.total.to_string(),
                r.invalid.count.to_string(),
                r.invalid.rate.to_string(),
                r.invalid.ci_low.to_string(),
                r.invalid.ci_high.to_string(),
                f("unreachable"),
                f("limit_violation"),
            ]);
            row
        })
        .collect();
    let latency = report
        .latency
        .iter()
        .map(|r| {
            let mut row = head();
            row.extend([
                r.space.to_string(),
                r.attempts.to_string(),
                r.timing.samples.to_string(),
                r.timing.mean_ms.to_string(),
                r.timing.median_ms.to_string(),
                r.timing.p99_ms.to_string(),
                r.timing.max_ms.to_string(),
                r.iterations.mean.to_string(),
                r.iterations.max.to_string(),
            ]);
            row
        })
        .collect();
    let tasks = report
        .tasks
        .iter()
        .map(|r| {
            let mut row = head();
            row.extend([
                r.space.to_string(),
                r.task.clone(),
                joined(&r.selection),
                r.success.total.to_string(),
                r.success.count.to_string(),
                r.success.rate.to_string(),
                r.success.stderr.to_string(),
                r.success.ci_low.to_string(),
                r.success.ci_high.to_string(),
                r.invalid.rate.to_string(),
                r.collision_episodes.to_string(),
                r.timing.median_ms.to_string(),
                r.iterations.mean.to_string(),
            ]);
            row
        })
        .collect();
    let ablation = report
        .ablation
        .iter()
        .map(|r| {
            let mut row = head();
            row.extend([
                r.joint.to_string(),
                match r.kind {
                    JointKind::RevoluteTwist => "twist".to_string(),
                    JointKind::RevoluteRotational => "rotational".to_string(),
                },
                r.task.clone(),
                r.success.total.to_string(),
                r.success.count.to_string(),
                r.success.rate.to_string(),
                r.invalid.rate.to_string(),
                r.feasible.count.to_string(),
                r.feasible.total.to_string(),
            ]);
            row
        })
        .collect();
    vec![
        ("validity", csv_table(&VALIDITY_COLUMNS, validity)),
        ("latency", csv_table(&LATENCY_COLUMNS, latency)),
        ("tasks", csv_table(&TASK_COLUMNS, tasks)),
        ("ablation", csv_table(&ABLATION_COLUMNS, ablation)),
    ]
}

/// Validate and write the report into `dir`; returns the written paths.
pub fn emit_report(report: &BenchReport, format: ReportFormat, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    report.validate()?;
    fs::create_dir_all(dir)?;
    match format {
        ReportFormat::Json => {
            let path = dir.join("report.json");
            fs::write(&path, serde_json::to_string_pretty(report)?)?;
            Ok(vec![path])
        }
        ReportFormat::Csv => report_csv(report)
            .into_iter()
            .map(|(stem, text)| {
                let path = dir.join(format!("{stem}.csv"));
                fs::write(&path, text)?;
                Ok(path)
            })
            .collect(),
    }
}

pub fn parse_report(text: &str) -> Result<BenchReport, BenchError> {
    let report: BenchReport = serde_json::from_str(text)?;
    report.validate()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_interval_brackets_rate() {
        let r = Rate::new(3, 10);
        assert!(r.ci_low < 0.3 && 0.3 < r.ci_high);
        let zero = Rate::new(0, 20);
        assert_eq!(zero.ci_low, 0.0);
        assert!(zero.ci_high > 0.0 && zero.ci_high < 0.2);
        let all = Rate::new(20, 20);
        assert!((all.ci_high - 1.0).abs() < 1e-12);
    }

    #[test]
    fn timing_percentiles() {
        let s: Vec<f64> = (1..=100).map(|i| i as f64 * 1e-3).collect();
        let t = Timing::from_seconds(&s);
        assert!((t.median_ms - 50.5).abs() < 1e-9);
        assert!((t.p99_ms - 99.0).abs() < 1e-9);
        assert!((t.max_ms - 100.0).abs() < 1e-9);
    }

    #[test]
    fn seeds_are_stable_and_distinct_per_stream() {
        assert_eq!(derive_seeds(1, 2, 5), derive_seeds(1, 2, 5));
        assert_ne!(derive_seeds(1, 2, 5), derive_seeds(1, 3, 5));
    }

    #[test]
    fn config_rejects_zero_episodes_and_unknown_fields() {
        assert!(BenchConfig::from_json(r#"{"episodes": 0}"#).unwrap().validate().is_err());
        let e = BenchConfig::from_json(r#"{"episode": 3}"#).unwrap_err();
        assert!(e.to_string().contains("episode"));
    }
}
