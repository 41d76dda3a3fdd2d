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

//! Serial kinematic chains: description loading, forward kinematics,
//! geometric Jacobians and joint-limit bookkeeping.

use std::ops::{Deref, DerefMut};
use std::path::Path;

use nalgebra::{DMatrix, DVector, Isometry3, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ChainError, KinematicsError};
use crate::pose::Pose;

const SRS7_JSON: &str = include_str!("../assets/srs7.json");
const SRS8PLUS_JSON: &str = include_str!("../assets/srs8plus.json");

/// Twisting joints rotate about the link they drive; rotational joints bend the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JointKind {
    #[serde(rename = "revolute-twist")]
    RevoluteTwist,
    #[serde(rename = "revolute-rotational")]
    RevoluteRotational,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimits {
    pub lo: f64,
    pub hi: f64,
}

impl JointLimits {
    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone)]
pub struct JointSpec {
    pub name: String,
    pub kind: JointKind,
    /// Rotation axis in the joint frame (after `origin`).
    pub axis: Unit<Vector3<f64>>,
    /// Transform from the parent link frame to the joint frame.
    pub origin: Isometry3<f64>,
    pub limits: JointLimits,
    pub velocity_limit: Option<f64>,
}

impl JointSpec {
    fn motion(&self, q: f64) -> Isometry3<f64> {
        self.origin * UnitQuaternion::from_axis_angle(&self.axis, q)
    }
}

/// Fixed geometry of a spherical-shoulder / revolute-elbow / spherical-wrist arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrsGeometry {
    /// Shoulder centre in the world frame; no joint moves it.
    pub shoulder: Vector3<f64>,
    pub upper_arm: f64,
    pub forearm: f64,
    /// Wrist centre expressed in the end-effector frame.
    pub wrist_in_ee: Vector3<f64>,
}

impl SrsGeometry {
    /// Wrist centre implied by an end-effector pose.
    pub fn wrist_from_ee(&self, ee: &Pose) -> Vector3<f64> {
        ee.position + ee.orientation() * self.wrist_in_ee
    }
}

/// Joint positions in radians, one entry per joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointConfig(pub DVector<f64>);

impl JointConfig {
    pub fn zeros(n: usize) -> Self {
        JointConfig(DVector::zeros(n))
    }

    pub fn from_slice(v: &[f64]) -> Self {
        JointConfig(DVector::from_column_slice(v))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for JointConfig {
    type Target = DVector<f64>;

    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl DerefMut for JointConfig {
    fn deref_mut(&mut self) -> &mut Self::Target {
        &mut self.0
    }
}

impl From<Vec<f64>> for JointConfig {
    fn from(v: Vec<f64>) -> Self {
        JointConfig(DVector::from_vec(v))
    }
}

/// 6×n world-frame geometric Jacobian; rows 0..3 linear, rows 3..6 angular.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    pub matrix: DMatrix<f64>,
}

impl Jacobian {
    pub fn singular_values(&self) -> DVector<f64> {
        self.matrix.clone().svd(false, false).singular_values
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.singular_values().iter().filter(|s| **s > tol).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitViolation {
    pub joint: usize,
    /// Signed distance outside the interval: positive above `hi`, negative below `lo`.
    pub amount: f64,
}

#[derive(Debug, Clone)]
pub struct KinematicChain {
    pub name: String,
    pub joints: Vec<JointSpec>,
    pub ee_offset: Isometry3<f64>,
    pub shoulder_link_index: usize,
    pub elbow_link_index: usize,
    pub wrist_link_index: usize,
    srs: Option<SrsGeometry>,
}

// ---- description document ----

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainDoc {
    name: String,
    joints: Vec<JointDoc>,
    #[serde(default)]
    ee_offset: OriginDoc,
    elbow_link_index: usize,
    shoulder_link_index: usize,
    wrist_link_index: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDoc {
    #[serde(default)]
    name: Option<String>,
    kind: JointKind,
    axis: [f64; 3],
    #[serde(default)]
    origin: OriginDoc,
    limits: [f64; 2],
    #[serde(default)]
    velocity_limit: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OriginDoc {
    #[serde(default)]
    xyz: [f64; 3],
    #[serde(default)]
    rpy: [f64; 3],
}

impl OriginDoc {
    fn to_isometry(&self, path: &str) -> Result<Isometry3<f64>, ChainError> {
        if self.xyz.iter().chain(self.rpy.iter()).any(|v| !v.is_finite()) {
            return Err(ChainError::Invalid {
                path: path.to_string(),
                message: "origin contains a non-finite value".into(),
            });
        }
        Ok(Isometry3::from_parts(
            Translation3::new(self.xyz[0], self.xyz[1], self.xyz[2]),
            UnitQuaternion::from_euler_angles(self.rpy[0], self.rpy[1], self.rpy[2]),
        ))
    }
}

/// Parse and validate a chain description (JSON).
pub fn load_chain(document: &str) -> Result<KinematicChain, ChainError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let doc: ChainDoc = serde_path_to_error::deserialize(de).map_err(|e| ChainError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    KinematicChain::from_doc(doc)
}

pub fn load_chain_file(path: impl AsRef<Path>) -> Result<KinematicChain, ChainError> {
    let text = std::fs::read_to_string(path)?;
    load_chain(&text)
}

/// Load one of the shipped chains (`srs7`, `srs8plus`) by name, or a path to a JSON file.
pub fn resolve_chain(name_or_path: &str) -> Result<KinematicChain, ChainError> {
    match name_or_path {
        "srs7" | "srs7.json" => load_chain(SRS7_JSON),
        "srs8plus" | "srs8plus.json" => load_chain(SRS8PLUS_JSON),
        other if Path::new(other).exists() => load_chain_file(other),
        other => Err(ChainError::UnknownBuiltin(other.to_string())),
    }
}

pub fn srs7() -> KinematicChain {
    load_chain(SRS7_JSON).expect("shipped srs7 chain is valid")
}

pub fn srs8plus() -> KinematicChain {
    load_chain(SRS8PLUS_JSON).expect("shipped srs8plus chain is valid")
}

impl KinematicChain {
    fn from_doc(doc: ChainDoc) -> Result<Self, ChainError> {
        if doc.joints.is_empty() {
            return Err(ChainError::Invalid {
                path: "joints".into(),
                message: "chain needs at least one joint".into(),
            });
        }
        let mut joints = Vec::with_capacity(doc.joints.len());
        for (i, j) in doc.joints.iter().enumerate() {
            let axis = Vector3::from(j.axis);
            let norm = axis.norm();
            if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
                return Err(ChainError::NonUnitAxis {
                    path: format!("joints[{i}].axis"),
                    norm,
                });
            }
            let [lo, hi] = j.limits;
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(ChainError::InvalidLimits {
                    path: format!("joints[{i}].limits"),
                    lo,
                    hi,
                });
            }
            joints.push(JointSpec {
                name: j.name.clone().unwrap_or_else(|| format!("joint{i}")),
                kind: j.kind,
                axis: Unit::new_unchecked(axis),
                origin: j.origin.to_isometry(&format!("joints[{i}].origin"))?,
                limits: JointLimits { lo, hi },
                velocity_limit: j.velocity_limit,
            });
        }
        let n = joints.len();
        if !(doc.shoulder_link_index < doc.elbow_link_index
            && doc.elbow_link_index < doc.wrist_link_index
            && doc.wrist_link_index <= n)
        {
            return Err(ChainError::Invalid {
                path: "elbow_link_index".into(),
                message: format!(
                    "need shoulder < elbow < wrist <= {n}, got {} / {} / {}",
                    doc.shoulder_link_index, doc.elbow_link_index, doc.wrist_link_index
                ),
            });
        }
        let mut chain = KinematicChain {
            name: doc.name,
            joints,
            ee_offset: doc.ee_offset.to_isometry("ee_offset")?,
            shoulder_link_index: doc.shoulder_link_index,
            elbow_link_index: doc.elbow_link_index,
            wrist_link_index: doc.wrist_link_index,
            srs: None,
        };
        chain.srs = chain.detect_srs();
        Ok(chain)
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    /// Number of redundant degrees of freedom beyond a 6-DoF task.
    pub fn redundancy(&self) -> usize {
        self.dof().saturating_sub(6)
    }

    /// Closed-form elbow geometry, present only for exactly-7-DoF S-R-S chains.
    pub fn srs(&self) -> Option<&SrsGeometry> {
        self.srs.as_ref()
    }

    pub fn limits(&self) -> impl Iterator<Item = JointLimits> + '_ {
        self.joints.iter().map(|j| j.limits)
    }

    /// Centre and radius of a ball holding every reachable end-effector position:
    /// the first joint's origin and the summed length of every later offset.
    pub fn reach_ball(&self) -> (Vector3<f64>, f64) {
        let center = self.joints[0].origin.translation.vector;
        let radius = self.joints[1..]
            .iter()
            .map(|j| j.origin.translation.vector.norm())
            .sum::<f64>()
            + self.ee_offset.translation.vector.norm();
        (center, radius)
    }

    pub fn mid_config(&self) -> JointConfig {
        JointConfig(DVector::from_iterator(self.dof(), self.limits().map(|l| l.mid())))
    }

    pub fn validate(&self, q: &JointConfig) -> Result<(), KinematicsError> {
        if q.len() != self.dof() {
            return Err(KinematicsError::DimensionMismatch {
                expected: self.dof(),
                got: q.len(),
            });
        }
        if let Some(i) = q.iter().position(|v| !v.is_finite()) {
            return Err(KinematicsError::NonFinite(i));
        }
        Ok(())
    }

    fn frames_unchecked(&self, q: &JointConfig) -> Vec<Isometry3<f64>> {
        let mut frames = Vec::with_capacity(self.dof() + 1);
        let mut t = Isometry3::identity();
        frames.push(t);
        for (joint, &angle) in self.joints.iter().zip(q.iter()) {
            t *= joint.motion(angle);
            frames.push(t);
        }
        frames
    }

    /// World frames of every link: index 0 is the base, index `k` is the frame
    /// after joint `k - 1`, so frame `k` depends only on `q[0..k]`.
    pub fn link_frames(&self, q: &JointConfig) -> Result<Vec<Isometry3<f64>>, KinematicsError> {
        self.validate(q)?;
        Ok(self.frames_unchecked(q))
    }

    pub fn forward_kinematics(&self, q: &JointConfig) -> Result<Pose, KinematicsError> {
        self.validate(q)?;
        let frames = self.frames_unchecked(q);
        Ok(self.ee_from_frames(&frames))
    }

    pub(crate) fn ee_from_frames(&self, frames: &[Isometry3<f64>]) -> Pose {
        Pose::from_isometry(&(frames[self.dof()] * self.ee_offset))
    }

    /// World position of the origin of link `link`.
    pub fn link_origin(&self, q: &JointConfig, link: usize) -> Result<Vector3<f64>, KinematicsError> {
        if link > self.dof() {
            return Err(KinematicsError::LinkOutOfRange {
                index: link,
                links: self.dof() + 1,
            });
        }
        Ok(self.link_frames(q)?[link].translation.vector)
    }

    pub fn elbow_position(&self, q: &JointConfig) -> Result<Vector3<f64>, KinematicsError> {
        self.link_origin(q, self.elbow_link_index)
    }

    /// Geometric Jacobian at `query_point` (world frame). With `up_to_joint`
    /// set, columns after that joint are zero.
    pub fn jacobian(
        &self,
        q: &JointConfig,
        query_point: &Vector3<f64>,
        up_to_joint: Option<usize>,
    ) -> Result<Jacobian, KinematicsError> {
        self.validate(q)?;
        let frames = self.frames_unchecked(q);
        Ok(Jacobian {
            matrix: self.jacobian_from_frames(&frames, query_point, up_to_joint),
        })
    }

    pub(crate) fn jacobian_from_frames(
        &self,
        frames: &[Isometry3<f64>],
        query_point: &Vector3<f64>,
        up_to_joint: Option<usize>,
    ) -> DMatrix<f64> {
        let n = self.dof();
        let last = up_to_joint.map_or(n, |j| (j + 1).min(n));
        let mut m = DMatrix::zeros(6, n);
        for i in 0..last {
            let frame = &frames[i + 1];
            let axis = frame.rotation * self.joints[i].axis.into_inner();
            let arm = query_point - frame.translation.vector;
            let lin = axis.cross(&arm);
            m.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
            m.fixed_view_mut::<3, 1>(3, i).copy_from(&axis);
        }
        m
    }

    pub fn ee_jacobian(&self, q: &JointConfig) -> Result<Jacobian, KinematicsError> {
        self.validate(q)?;
        let frames = self.frames_unchecked(q);
        let p = self.ee_from_frames(&frames).position;
        Ok(Jacobian {
            matrix: self.jacobian_from_frames(&frames, &p, None),
        })
    }

    /// Joints outside their closed limit interval.
    pub fn check_limits(&self, q: &JointConfig) -> Vec<LimitViolation> {
        self.joints
            .iter()
            .zip(q.iter())
            .enumerate()
            .filter_map(|(i, (j, &v))| {
                if v > j.limits.hi {
                    Some(LimitViolation { joint: i, amount: v - j.limits.hi })
                } else if v < j.limits.lo {
                    Some(LimitViolation { joint: i, amount: v - j.limits.lo })
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn within_limits(&self, q: &JointConfig) -> bool {
        self.check_limits(q).is_empty()
    }

    pub fn clamp_to_limits(&self, q: &mut JointConfig) {
        for (v, j) in q.iter_mut().zip(&self.joints) {
            *v = j.limits.clamp(*v);
        }
    }

    /// S-R-S structure holds when the shoulder centre never moves, the upper-arm
    /// and forearm lengths stay fixed, and the wrist centre is rigid in the
    /// end-effector frame. Checked on a fixed set of probe configurations.
    fn detect_srs(&self) -> Option<SrsGeometry> {
        if self.dof() != 7 {
            return None;
        }
        const PROBES: [[f64; 7]; 4] = [
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.4, -0.7, 1.1, -1.3, 0.9, 1.7, -0.5],
            [-1.9, 1.2, -0.3, -2.2, -1.4, 0.6, 2.1],
            [2.6, 0.35, 2.2, -0.6, 0.15, 2.9, 1.3],
        ];
        let mut reference: Option<SrsGeometry> = None;
        for probe in PROBES {
            let q = JointConfig::from_slice(&probe);
            let frames = self.frames_unchecked(&q);
            let s = frames[self.shoulder_link_index].translation.vector;
            let e = frames[self.elbow_link_index].translation.vector;
            let w = frames[self.wrist_link_index].translation.vector;
            let ee = frames[self.dof()] * self.ee_offset;
            let geom = SrsGeometry {
                shoulder: s,
                upper_arm: (e - s).norm(),
                forearm: (w - e).norm(),
                wrist_in_ee: ee.inverse_transform_point(&w.into()).coords,
            };
            match reference {
                None => reference = Some(geom),
                Some(r) => {
                    let tol = 1e-9;
                    if (r.shoulder - geom.shoulder).norm() > tol
                        || (r.upper_arm - geom.upper_arm).abs() > tol
                        || (r.forearm - geom.forearm).abs() > tol
                        || (r.wrist_in_ee - geom.wrist_in_ee).norm() > tol
                    {
                        return None;
                    }
                }
            }
        }
        reference.filter(|g| g.upper_arm > 1e-6 && g.forearm > 1e-6)
    }
}
