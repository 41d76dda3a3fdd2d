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

//! Rigid end-effector poses with a canonical quaternion sign.

use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Position plus unit quaternion. The quaternion is always stored with `w >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 7]", try_from = "[f64; 7]")]
pub struct Pose {
    pub position: Vector3<f64>,
    orientation: UnitQuaternion<f64>,
}

/// Flip a quaternion onto the `w >= 0` hemisphere.
pub fn canonical(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    if q.w < 0.0 {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        q
    }
}

impl Pose {
    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Pose {
            position,
            orientation: canonical(orientation),
        }
    }

    pub fn identity() -> Self {
        Pose::new(Vector3::zeros(), UnitQuaternion::identity())
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        Pose::new(iso.translation.vector, iso.rotation)
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.position), self.orientation)
    }

    pub fn orientation(&self) -> UnitQuaternion<f64> {
        self.orientation
    }

    /// Build from `[px, py, pz, qw, qx, qy, qz]`, normalizing the quaternion.
    /// Returns `None` for non-finite input or a zero quaternion.
    pub fn from_array(a: &[f64; 7]) -> Option<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let q = Quaternion::new(a[3], a[4], a[5], a[6]);
        let norm = q.norm();
        if norm < 1e-12 {
            return None;
        }
        Some(Pose::new(
            Vector3::new(a[0], a[1], a[2]),
            UnitQuaternion::new_unchecked(q / norm),
        ))
    }

    pub fn to_array(&self) -> [f64; 7] {
        let q = self.orientation.quaternion();
        [
            self.position.x,
            self.position.y,
            self.position.z,
            q.w,
            q.i,
            q.j,
            q.k,
        ]
    }

    /// Angle of the relative rotation between the two orientations, double cover resolved.
    pub fn angle_to(&self, other: &Pose) -> f64 {
        self.orientation.angle_to(&other.orientation)
    }

    pub fn approx_eq(&self, other: &Pose, position_tol: f64, angle_tol: f64) -> bool {
        (self.position - other.position).norm() <= position_tol && self.angle_to(other) <= angle_tol
    }

    /// Apply a world-frame increment: translation added, rotation composed as `delta * self`.
    pub fn compose_delta(&self, delta_position: &Vector3<f64>, delta_rotation: &UnitQuaternion<f64>) -> Pose {
        Pose::new(self.position + delta_position, *delta_rotation * self.orientation)
    }

    /// Straight-line position interpolation with slerp on the orientation.
    pub fn interpolate(&self, other: &Pose, t: f64) -> Pose {
        let position = self.position.lerp(&other.position, t);
        let orientation = self
            .orientation
            .try_slerp(&other.orientation, t, 1e-12)
            .unwrap_or(other.orientation);
        Pose::new(position, orientation)
    }
}

impl From<Pose> for [f64; 7] {
    fn from(p: Pose) -> Self {
        p.to_array()
    }
}

impl TryFrom<[f64; 7]> for Pose {
    type Error = String;

    fn try_from(a: [f64; 7]) -> Result<Self, Self::Error> {
        Pose::from_array(&a).ok_or_else(|| "pose must be finite with a nonzero quaternion".to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_sign_is_enforced() {
        let q = UnitQuaternion::from_quaternion(Quaternion::new(-0.5, 0.5, 0.5, 0.5));
        let p = Pose::new(Vector3::zeros(), q);
        assert!(p.orientation().w >= 0.0);
        assert!((p.orientation().quaternion().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_quaternion_rejected() {
        assert!(Pose::from_array(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_none());
        assert!(Pose::from_array(&[f64::NAN, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]).is_none());
    }

    #[test]
    fn array_round_trip_normalizes() {
        let p = Pose::from_array(&[0.1, 0.2, 0.3, 2.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.to_array(), [0.1, 0.2, 0.3, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn delta_composes_in_world_frame() {
        let start = Pose::new(Vector3::zeros(), UnitQuaternion::from_euler_angles(0.3, 0.0, 0.0));
        let dr = UnitQuaternion::from_euler_angles(0.0, 0.0, 0.5);
        let out = start.compose_delta(&Vector3::new(0.0, 0.0, 0.1), &dr);
        let expected = dr * UnitQuaternion::from_euler_angles(0.3, 0.0, 0.0);
        assert!(out.orientation().angle_to(&expected) < 1e-12);
        assert!((out.position.z - 0.1).abs() < 1e-15);
    }
}
