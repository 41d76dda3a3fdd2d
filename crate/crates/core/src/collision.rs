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

//! Capsule arm model against box and sphere obstacles.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::chain::{JointConfig, KinematicChain};
use crate::error::KinematicsError;
use crate::pose::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    Box { half_extents: [f64; 3] },
    Sphere { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    #[serde(default)]
    pub name: String,
    pub shape: Shape,
    pub pose: Pose,
}

impl Obstacle {
    pub fn cuboid(name: &str, center: Vector3<f64>, half_extents: [f64; 3]) -> Self {
        Obstacle {
            name: name.to_string(),
            shape: Shape::Box { half_extents },
            pose: Pose::new(center, Default::default()),
        }
    }

    pub fn sphere(name: &str, center: Vector3<f64>, radius: f64) -> Self {
        Obstacle {
            name: name.to_string(),
            shape: Shape::Sphere { radius },
            pose: Pose::new(center, Default::default()),
        }
    }

    pub fn is_valid(&self) -> bool {
        match self.shape {
            Shape::Box { half_extents } => half_extents.iter().all(|h| h.is_finite() && *h > 0.0),
            Shape::Sphere { radius } => radius.is_finite() && radius > 0.0,
        }
    }

    /// Unsigned distance from the segment `a`-`b` (world frame) to the solid.
    pub fn segment_distance(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
        let iso = self.pose.to_isometry();
        let la = iso.inverse_transform_point(&(*a).into()).coords;
        let lb = iso.inverse_transform_point(&(*b).into()).coords;
        match self.shape {
            Shape::Box { half_extents } => segment_box_distance(&la, &lb, &Vector3::from(half_extents)),
            Shape::Sphere { radius } => (segment_point_distance(&la, &lb, &Vector3::zeros()) - radius).max(0.0),
        }
    }
}

/// World-frame capsule axis `(start, end)` and radius.
pub type Segment = (Vector3<f64>, Vector3<f64>, f64);

/// A capsule rigidly attached to a link frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capsule {
    pub link: usize,
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmCollisionModel {
    pub capsules: Vec<Capsule>,
}

impl ArmCollisionModel {
    /// One capsule per non-zero link offset plus one for the end-effector
    /// offset, all with the same radius.
    pub fn from_chain(chain: &KinematicChain, radius: f64) -> Self {
        let mut capsules = Vec::new();
        for (k, joint) in chain.joints.iter().enumerate() {
            let t = joint.origin.translation.vector;
            if t.norm() > 1e-9 {
                capsules.push(Capsule { link: k, start: [0.0; 3], end: t.into(), radius });
            }
        }
        let t = chain.ee_offset.translation.vector;
        if t.norm() > 1e-9 {
            capsules.push(Capsule { link: chain.dof(), start: [0.0; 3], end: t.into(), radius });
        }
        ArmCollisionModel { capsules }
    }

    /// World-frame segments of every capsule.
    pub fn segments(
        &self,
        chain: &KinematicChain,
        q: &JointConfig,
    ) -> Result<Vec<Segment>, KinematicsError> {
        let frames = chain.link_frames(q)?;
        Ok(self
            .capsules
            .iter()
            .map(|c| {
                let f = &frames[c.link.min(chain.dof())];
                let a = f.transform_point(&Vector3::from(c.start).into()).coords;
                let b = f.transform_point(&Vector3::from(c.end).into()).coords;
                (a, b, c.radius)
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    /// Index into the collision model's capsule list.
    pub capsule: usize,
    pub link: usize,
    pub obstacle: usize,
    /// Capsule radius minus segment distance; always strictly positive.
    pub penetration: f64,
}

/// Every capsule/obstacle pair whose distance is strictly below the capsule radius.
pub fn collide(
    chain: &KinematicChain,
    q: &JointConfig,
    model: &ArmCollisionModel,
    obstacles: &[Obstacle],
) -> Result<Vec<Contact>, KinematicsError> {
    let segments = model.segments(chain, q)?;
    let mut contacts = Vec::new();
    for (ci, (a, b, r)) in segments.iter().enumerate() {
        for (oi, obstacle) in obstacles.iter().enumerate() {
            let penetration = r - obstacle.segment_distance(a, b);
            if penetration > 0.0 {
                contacts.push(Contact {
                    capsule: ci,
                    link: model.capsules[ci].link,
                    obstacle: oi,
                    penetration,
                });
            }
        }
    }
    Ok(contacts)
}

pub fn segment_point_distance(a: &Vector3<f64>, b: &Vector3<f64>, p: &Vector3<f64>) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&d) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (a + d * t - p).norm()
}

/// Exact distance between a segment and the origin-centred box `[-h, h]`.
///
/// Along the segment each axis' excess outside the slab is piecewise linear,
/// so the squared distance is a quadratic on every interval between slab
/// crossings; each piece is minimised in closed form.
pub fn segment_box_distance(a: &Vector3<f64>, b: &Vector3<f64>, h: &Vector3<f64>) -> f64 {
    let d = b - a;
    let mut breaks = vec![0.0, 1.0];
    for i in 0..3 {
        if d[i] != 0.0 {
            for bound in [-h[i], h[i]] {
                let t = (bound - a[i]) / d[i];
                if t > 0.0 && t < 1.0 {
                    breaks.push(t);
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    let excess2 = |t: f64| -> f64 {
        (0..3)
            .map(|i| {
                let p = a[i] + d[i] * t;
                let e = (p.abs() - h[i]).max(0.0);
                e * e
            })
            .sum()
    };
    let mut best = f64::INFINITY;
    for w in breaks.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let tm = 0.5 * (t0 + t1);
        // on this piece each active axis contributes (alpha + beta t)^2
        let (mut ab, mut bb) = (0.0, 0.0);
        for i in 0..3 {
            let p = a[i] + d[i] * tm;
            let s = if p > h[i] {
                1.0
            } else if p < -h[i] {
                -1.0
            } else {
                0.0
            };
            if s != 0.0 {
                let alpha = s * a[i] - h[i];
                let beta = s * d[i];
                ab += alpha * beta;
                bb += beta * beta;
            }
        }
        let t = if bb > 0.0 { (-ab / bb).clamp(t0, t1) } else { t0 };
        best = best.min(excess2(t)).min(excess2(t0)).min(excess2(t1));
    }
    best.sqrt()
}
