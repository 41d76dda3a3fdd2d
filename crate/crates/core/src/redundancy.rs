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

//! Self-motion geometry of single-redundancy S-R-S arms.
//!
//! For a fixed end-effector pose the elbow of such an arm is confined to the
//! circle where the upper-arm sphere (about the shoulder) meets the forearm
//! sphere (about the wrist). The arm angle indexes that circle, with zero at
//! its highest point.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector3};

use crate::chain::{JointConfig, KinematicChain};
use crate::error::{GeometryError, KinematicsError};
use crate::ik::pose_error;
use crate::pose::Pose;

/// Axes closer than this to world z switch the zero reference to world x.
pub const VERTICAL_AXIS_TOLERANCE: f64 = 1e-6;

/// Radii at or below this have no arm angle. Rounding alone leaves about
/// 1e-8 m at full extension, since the radius grows as a square root there.
pub const DEGENERATE_RADIUS: f64 = 1e-7;

/// Smallest Jacobian singular value accepted by the null-space flow.
pub const FLOW_SINGULAR_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElbowCircle {
    pub center: Vector3<f64>,
    pub radius: f64,
    /// Direction of arm angle zero.
    pub tangent: Vector3<f64>,
    /// `axis × tangent`, direction of arm angle π/2.
    pub bitangent: Vector3<f64>,
    /// Unit shoulder-to-wrist direction, normal to the circle plane.
    pub axis: Vector3<f64>,
}

/// An arm angle on the principal interval (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ArmAngle(f64);

impl ArmAngle {
    pub fn new(phi: f64) -> Self {
        ArmAngle(wrap_angle(phi))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Signed difference `self - other`, wrapped.
    pub fn distance(self, other: ArmAngle) -> f64 {
        wrap_angle(self.0 - other.0)
    }
}

/// Wrap to (−π, π].
pub fn wrap_angle(phi: f64) -> f64 {
    let mut w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

impl ElbowCircle {
    /// Intersection of the sphere of radius `upper_arm` about `shoulder` with
    /// the sphere of radius `forearm` about `wrist`.
    pub fn from_spheres(
        shoulder: &Vector3<f64>,
        wrist: &Vector3<f64>,
        upper_arm: f64,
        forearm: f64,
    ) -> Result<Self, GeometryError> {
        let sw = wrist - shoulder;
        let d = sw.norm();
        let max = upper_arm + forearm;
        let min = (upper_arm - forearm).abs();
        let slack = 1e-12 * max;
        if d > max + slack || d < min - slack || d <= 0.0 {
            return Err(GeometryError::Unreachable { distance: d, min, max });
        }
        let axis = sw / d;
        let along = (upper_arm * upper_arm - forearm * forearm + d * d) / (2.0 * d);
        let radius = (upper_arm * upper_arm - along * along).max(0.0).sqrt();
        let center = shoulder + axis * along;
        let tangent = zero_reference(&axis);
        let bitangent = axis.cross(&tangent);
        Ok(ElbowCircle {
            center,
            radius,
            tangent,
            bitangent,
            axis,
        })
    }

    /// `c + r (t cos φ + b sin φ)`.
    pub fn point(&self, phi: ArmAngle) -> Vector3<f64> {
        let (s, c) = phi.radians().sin_cos();
        self.center + self.radius * (self.tangent * c + self.bitangent * s)
    }

    /// Arm angle of a point, measured in the circle plane.
    pub fn angle_of(&self, p: &Vector3<f64>) -> Result<ArmAngle, GeometryError> {
        if self.radius <= DEGENERATE_RADIUS {
            return Err(GeometryError::NoArmAngle(self.radius));
        }
        let v = p - self.center;
        Ok(ArmAngle::new(v.dot(&self.bitangent).atan2(v.dot(&self.tangent))))
    }
}

/// Unit projection of world +z onto the plane normal to `axis`, or of world +x
/// when the axis is near vertical.
fn zero_reference(axis: &Vector3<f64>) -> Vector3<f64> {
    let up = Vector3::z();
    let reference = if axis.cross(&up).norm() < VERTICAL_AXIS_TOLERANCE {
        Vector3::x()
    } else {
        up
    };
    (reference - axis * axis.dot(&reference)).normalize()
}

/// Elbow circle of an S-R-S chain for a given end-effector pose.
pub fn elbow_circle(chain: &KinematicChain, ee_pose: &Pose) -> Result<ElbowCircle, GeometryError> {
    let g = chain.srs().ok_or_else(|| GeometryError::NotSrs(chain.name.clone()))?;
    let wrist = g.wrist_from_ee(ee_pose);
    ElbowCircle::from_spheres(&g.shoulder, &wrist, g.upper_arm, g.forearm)
}

pub fn elbow_point(circle: &ElbowCircle, phi: ArmAngle) -> Vector3<f64> {
    circle.point(phi)
}

pub fn arm_angle_from_config(chain: &KinematicChain, q: &JointConfig) -> Result<ArmAngle, GeometryError> {
    let frames = chain.link_frames(q)?;
    let pose = chain.ee_from_frames(&frames);
    let circle = elbow_circle(chain, &pose)?;
    circle.angle_of(&frames[chain.elbow_link_index].translation.vector)
}

/// Configurations visited by a null-space flow.
#[derive(Debug, Clone)]
pub struct FlowTrace {
    /// Starts with the initial configuration.
    pub configs: Vec<JointConfig>,
    /// Index of the step at which a singular Jacobian stopped the flow.
    pub singular_at: Option<usize>,
}

impl FlowTrace {
    pub fn aborted(&self) -> bool {
        self.singular_at.is_some()
    }
}

/// Orthonormal basis (as columns) of the kernel of the 6×n end-effector
/// Jacobian, or `None` when its smallest task singular value is below tolerance.
pub fn null_space_basis(chain: &KinematicChain, q: &JointConfig) -> Result<Option<DMatrix<f64>>, KinematicsError> {
    let j = chain.ee_jacobian(q)?.matrix;
    let n = chain.dof();
    if n <= 6 {
        return Ok(None);
    }
    // pad to square so the SVD returns a full V
    let mut padded = DMatrix::zeros(n, n);
    padded.view_mut((0, 0), (6, n)).copy_from(&j);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    if svd.singular_values[order[5]] < FLOW_SINGULAR_TOLERANCE {
        return Ok(None);
    }
    let basis = DMatrix::from_fn(n, n - 6, |r, c| v_t[(order[6 + c], r)]);
    Ok(Some(basis))
}

fn project(basis: &DMatrix<f64>, dir: &DVector<f64>) -> DVector<f64> {
    basis * (basis.transpose() * dir)
}

/// Walk along the self-motion manifold of a 7-DoF chain; the direction sign is
/// fixed so that the largest component starts positive.
pub fn null_space_flow(
    chain: &KinematicChain,
    q: &JointConfig,
    step: f64,
    steps: usize,
) -> Result<FlowTrace, KinematicsError> {
    chain.validate(q)?;
    let Some(basis) = null_space_basis(chain, q)? else {
        return Ok(FlowTrace {
            configs: vec![q.clone()],
            singular_at: Some(0),
        });
    };
    let mut dir: DVector<f64> = basis.column(0).into_owned();
    let imax = dir.iamax();
    if dir[imax] < 0.0 {
        dir = -dir;
    }
    null_space_flow_along(chain, q, &dir, step, steps)
}

/// Null-space flow that starts along the projection of `direction` and
/// keeps continuity afterwards. Works for any redundancy.
pub fn null_space_flow_along(
    chain: &KinematicChain,
    q: &JointConfig,
    direction: &DVector<f64>,
    step: f64,
    steps: usize,
) -> Result<FlowTrace, KinematicsError> {
    let anchor = chain.forward_kinematics(q)?;
    let mut configs = vec![q.clone()];
    let mut current = q.clone();
    let mut dir = direction.clone();
    for k in 0..steps {
        // midpoint rule on the unit null direction, then pull back onto the pose
        let Some(d0) = unit_null_direction(chain, &current, &dir)? else {
            return Ok(FlowTrace { configs, singular_at: Some(k) });
        };
        let mid = JointConfig(&current.0 + &d0 * (0.5 * step));
        let Some(d1) = unit_null_direction(chain, &mid, &d0)? else {
            return Ok(FlowTrace { configs, singular_at: Some(k) });
        };
        let mut next = JointConfig(&current.0 + &d1 * step);
        reproject(chain, &mut next, &anchor)?;
        if !next.is_finite() {
            return Ok(FlowTrace { configs, singular_at: Some(k) });
        }
        dir = d1;
        current = next.clone();
        configs.push(next);
    }
    Ok(FlowTrace { configs, singular_at: None })
}

fn unit_null_direction(
    chain: &KinematicChain,
    q: &JointConfig,
    previous: &DVector<f64>,
) -> Result<Option<DVector<f64>>, KinematicsError> {
    let Some(basis) = null_space_basis(chain, q)? else {
        return Ok(None);
    };
    let d = project(&basis, previous);
    let norm = d.norm();
    if norm < 1e-9 {
        return Ok(None);
    }
    Ok(Some(d / norm))
}

/// A few undamped Newton corrections back onto `anchor`.
fn reproject(chain: &KinematicChain, q: &mut JointConfig, anchor: &Pose) -> Result<(), KinematicsError> {
    for _ in 0..4 {
        let pose = chain.forward_kinematics(q)?;
        let e = pose_error(&pose, anchor);
        if e.norm() < 1e-14 {
            break;
        }
        let j = chain.ee_jacobian(q)?.matrix;
        let Ok(pinv) = j.pseudo_inverse(1e-10) else {
            break;
        };
        let e = DVector::from_column_slice(e.as_slice());
        q.0 += pinv * e;
    }
    Ok(())
}
