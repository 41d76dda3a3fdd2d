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

//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the library's kinematics; the chain documents are
//! re-parsed as plain JSON and composed with hand-rolled matrices.

#![allow(dead_code)]

use erspace::chain::{JointConfig, KinematicChain};
use nalgebra::{DMatrix, Matrix3, Matrix4, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SRS7_JSON: &str = include_str!("../../assets/srs7.json");
pub const SRS8PLUS_JSON: &str = include_str!("../../assets/srs8plus.json");

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct RawJoint {
    pub axis: Vector3<f64>,
    pub xyz: Vector3<f64>,
    pub rpy: Vector3<f64>,
    pub lo: f64,
    pub hi: f64,
}

pub struct RawChain {
    pub joints: Vec<RawJoint>,
    pub ee_xyz: Vector3<f64>,
    pub ee_rpy: Vector3<f64>,
}

fn vec3(v: &serde_json::Value) -> Vector3<f64> {
    let a = v.as_array().expect("3-array");
    Vector3::new(a[0].as_f64().unwrap(), a[1].as_f64().unwrap(), a[2].as_f64().unwrap())
}

fn origin(v: Option<&serde_json::Value>) -> (Vector3<f64>, Vector3<f64>) {
    let zero = Vector3::zeros();
    match v {
        None => (zero, zero),
        Some(o) => (
            o.get("xyz").map(vec3).unwrap_or(zero),
            o.get("rpy").map(vec3).unwrap_or(zero),
        ),
    }
}

pub fn raw_chain(doc: &str) -> RawChain {
    let v: serde_json::Value = serde_json::from_str(doc).unwrap();
    let joints = v["joints"]
        .as_array()
        .unwrap()
        .iter()
        .map(|j| {
            let (xyz, rpy) = origin(j.get("origin"));
            let l = j["limits"].as_array().unwrap();
            RawJoint {
                axis: vec3(&j["axis"]),
                xyz,
                rpy,
                lo: l[0].as_f64().unwrap(),
                hi: l[1].as_f64().unwrap(),
            }
        })
        .collect();
    let (ee_xyz, ee_rpy) = origin(v.get("ee_offset"));
    RawChain { joints, ee_xyz, ee_rpy }
}

/// `I + sin θ K + (1 − cos θ) K²`.
pub fn rodrigues(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let k = axis.normalize();
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Matrix3::identity() + kx * angle.sin() + kx * kx * (1.0 - angle.cos())
}

/// Fixed-axis roll, pitch, yaw: `Rz(y) Ry(p) Rx(r)`.
pub fn rpy(r: &Vector3<f64>) -> Matrix3<f64> {
    rodrigues(&Vector3::z(), r.z) * rodrigues(&Vector3::y(), r.y) * rodrigues(&Vector3::x(), r.x)
}

pub fn homogeneous(rot: &Matrix3<f64>, t: &Vector3<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(rot);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(t);
    m
}

/// Base frame followed by the frame after every joint, multiplied out one
/// joint at a time.
pub fn oracle_frames(raw: &RawChain, q: &[f64]) -> Vec<Matrix4<f64>> {
    let mut t = Matrix4::identity();
    let mut out = vec![t];
    for (j, &angle) in raw.joints.iter().zip(q) {
        t = t * homogeneous(&rpy(&j.rpy), &j.xyz) * homogeneous(&rodrigues(&j.axis, angle), &Vector3::zeros());
        out.push(t);
    }
    out
}

pub fn oracle_fk(raw: &RawChain, q: &[f64]) -> Matrix4<f64> {
    let frames = oracle_frames(raw, q);
    frames.last().unwrap() * homogeneous(&rpy(&raw.ee_rpy), &raw.ee_xyz)
}

pub fn translation(m: &Matrix4<f64>) -> Vector3<f64> {
    m.fixed_view::<3, 1>(0, 3).into_owned()
}

pub fn rotation(m: &Matrix4<f64>) -> Matrix3<f64> {
    m.fixed_view::<3, 3>(0, 0).into_owned()
}

/// Rotation vector of a rotation matrix, with the angle from `atan2` so
/// that tiny rotations keep full relative precision. Not valid near π.
pub fn log_so3(r: &Matrix3<f64>) -> Vector3<f64> {
    let v = 0.5 * Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let s = v.norm();
    let c = 0.5 * (r.trace() - 1.0);
    let angle = s.atan2(c);
    if s < 1e-300 {
        return Vector3::zeros();
    }
    v * (angle / s)
}

/// Central-difference end-effector Jacobian of the oracle FK.
pub fn fd_jacobian(raw: &RawChain, q: &[f64], h: f64) -> DMatrix<f64> {
    let n = q.len();
    let mut j = DMatrix::zeros(6, n);
    for i in 0..n {
        let mut qp = q.to_vec();
        let mut qm = q.to_vec();
        qp[i] += h;
        qm[i] -= h;
        let tp = oracle_fk(raw, &qp);
        let tm = oracle_fk(raw, &qm);
        let lin = (translation(&tp) - translation(&tm)) / (2.0 * h);
        let ang = log_so3(&(rotation(&tp) * rotation(&tm).transpose())) / (2.0 * h);
        for r in 0..3 {
            j[(r, i)] = lin[r];
            j[(r + 3, i)] = ang[r];
        }
    }
    j
}

pub fn random_config(chain: &KinematicChain, rng: &mut ChaCha8Rng, margin: f64) -> JointConfig {
    let v: Vec<f64> = chain
        .limits()
        .map(|l| {
            let pad = margin * l.span();
            rng.random_range(l.lo + pad..=l.hi - pad)
        })
        .collect();
    JointConfig::from(v)
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

// ---- elbow circle by plain geometry ----

/// Distance along the shoulder-wrist axis to the circle plane, found by
/// bisection on equal sphere-radius residuals.
pub fn bisect_along(d: f64, upper: f64, fore: f64) -> f64 {
    let f = |a: f64| (upper * upper - a * a) - (fore * fore - (d - a) * (d - a));
    let (mut lo, mut hi) = (-upper - fore - d, upper + fore + d);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub struct OracleCircle {
    pub center: Vector3<f64>,
    pub radius: f64,
    pub axis: Vector3<f64>,
    /// Unit vector from the centre to the circle's highest point.
    pub up: Vector3<f64>,
}

pub fn oracle_circle(shoulder: &Vector3<f64>, wrist: &Vector3<f64>, upper: f64, fore: f64) -> OracleCircle {
    let sw = wrist - shoulder;
    let d = sw.norm();
    let axis = sw / d;
    let a = bisect_along(d, upper, fore);
    let radius = (upper * upper - a * a).max(0.0).sqrt();
    let z = Vector3::z();
    let up = (z - axis * axis.dot(&z)).normalize();
    OracleCircle { center: shoulder + axis * a, radius, axis, up }
}

impl OracleCircle {
    /// Point at angle `phi` from the highest point, turning right-handed about the axis.
    pub fn point(&self, phi: f64) -> Vector3<f64> {
        let side = self.axis.cross(&self.up);
        self.center + self.radius * (self.up * phi.cos() + side * phi.sin())
    }

    pub fn angle_of(&self, p: &Vector3<f64>) -> f64 {
        let v = p - self.center;
        let side = self.axis.cross(&self.up);
        v.dot(&side).atan2(v.dot(&self.up))
    }
}

// ---- least-squares circle fit ----

pub struct FittedCircle {
    pub center: Vector3<f64>,
    pub radius: f64,
    pub normal: Vector3<f64>,
    /// Largest distance of an input point from the fitted plane.
    pub plane_residual: f64,
}

/// Plane from the eigenvectors of the 3×3 scatter matrix, then an algebraic
/// (Kåsa) fit in that plane through its 3×3 normal equations.
pub fn fit_circle(points: &[Vector3<f64>]) -> FittedCircle {
    let n = points.len() as f64;
    let mean = points.iter().fold(Vector3::zeros(), |a, p| a + p) / n;
    let scatter = points.iter().fold(Matrix3::zeros(), |s, p| s + (p - mean) * (p - mean).transpose());
    let eig = nalgebra::SymmetricEigen::new(scatter);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let e1: Vector3<f64> = eig.eigenvectors.column(idx[0]).into();
    let e2: Vector3<f64> = eig.eigenvectors.column(idx[1]).into();
    let normal: Vector3<f64> = eig.eigenvectors.column(idx[2]).into();
    let plane_residual = points.iter().map(|p| (p - mean).dot(&normal).abs()).fold(0.0, f64::max);
    // x² + y² = 2 a x + 2 b y + c
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for p in points {
        let v = p - mean;
        let (x, y) = (v.dot(&e1), v.dot(&e2));
        let row = Vector3::new(2.0 * x, 2.0 * y, 1.0);
        ata += row * row.transpose();
        atb += row * (x * x + y * y);
    }
    let sol = ata.lu().solve(&atb).unwrap();
    let center = mean + e1 * sol[0] + e2 * sol[1];
    let radius = (sol[2] + sol[0] * sol[0] + sol[1] * sol[1]).sqrt();
    FittedCircle { center, radius, normal, plane_residual }
}

// ---- closed-form inverse kinematics for the shipped 7-DoF arm ----

pub const SRS7_SHOULDER: Vector3<f64> = Vector3::new(0.0, 0.0, 0.333);
pub const SRS7_UPPER: f64 = 0.316;
pub const SRS7_FORE: f64 = 0.384;
pub const SRS7_HAND: f64 = 0.207;

fn rz(a: f64) -> Matrix3<f64> {
    rodrigues(&Vector3::z(), a)
}

fn ry(a: f64) -> Matrix3<f64> {
    rodrigues(&Vector3::y(), a)
}

fn wrap(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * std::f64::consts::PI);
    if w > std::f64::consts::PI {
        w - 2.0 * std::f64::consts::PI
    } else {
        w
    }
}

pub fn srs7_wrist(position: &Vector3<f64>, rot: &Matrix3<f64>) -> Vector3<f64> {
    position - rot * Vector3::new(0.0, 0.0, SRS7_HAND)
}

/// Every joint solution (up to four branches) that puts the hand at
/// (`position`, `rot`) with the elbow at `elbow`. Limits are not applied.
pub fn srs7_analytic(position: &Vector3<f64>, rot: &Matrix3<f64>, elbow: &Vector3<f64>) -> Vec<[f64; 7]> {
    let w = srs7_wrist(position, rot);
    let u = (elbow - SRS7_SHOULDER) / SRS7_UPPER;
    let f = (w - elbow) / SRS7_FORE;
    let q3 = -u.dot(&f).clamp(-1.0, 1.0).acos();
    let base = u.y.atan2(u.x);
    let tilt = u.z.clamp(-1.0, 1.0).acos();
    let mut out = Vec::new();
    for (q0, q1) in [(base, tilt), (wrap(base + std::f64::consts::PI), -tilt)] {
        let fp = (rz(q0) * ry(q1)).transpose() * f;
        let q2 = fp.y.atan2(fp.x);
        let r04 = rz(q0) * ry(q1) * rz(q2) * ry(-q3);
        let m = r04.transpose() * rot;
        for sign in [1.0, -1.0] {
            let b = sign * m[(2, 2)].clamp(-1.0, 1.0).acos();
            let sb = b.sin();
            if sb.abs() < 1e-9 {
                continue;
            }
            let a = (m[(1, 2)] / sb).atan2(m[(0, 2)] / sb);
            let c = (m[(2, 1)] / sb).atan2(-m[(2, 0)] / sb);
            out.push([q0, q1, q2, q3, a, -b, c]);
        }
    }
    out
}

pub fn within(raw: &RawChain, q: &[f64]) -> bool {
    raw.joints.iter().zip(q).all(|(j, &v)| v >= j.lo && v <= j.hi)
}

/// The analytic angles are principal values; shift each by ±2π where that
/// brings it inside the joint's limits.
pub fn shift_into_limits(raw: &RawChain, q: &[f64; 7]) -> Option<[f64; 7]> {
    let tau = 2.0 * std::f64::consts::PI;
    let mut out = *q;
    for (v, j) in out.iter_mut().zip(&raw.joints) {
        *v = [*v, *v + tau, *v - tau].into_iter().find(|x| *x >= j.lo && *x <= j.hi)?;
    }
    Some(out)
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
}

// ---- segment to primitive distances by dense search ----

pub fn point_box_distance(p: &Vector3<f64>, h: &Vector3<f64>) -> f64 {
    Vector3::new(
        (p.x.abs() - h.x).max(0.0),
        (p.y.abs() - h.y).max(0.0),
        (p.z.abs() - h.z).max(0.0),
    )
    .norm()
}

/// Minimum of a convex function of the segment parameter: dense scan, then
/// ternary refinement around the best sample.
pub fn segment_min(a: &Vector3<f64>, b: &Vector3<f64>, dist: impl Fn(&Vector3<f64>) -> f64) -> f64 {
    let samples = 2000;
    let at = |t: f64| dist(&(a + (b - a) * t));
    let mut best_t = 0.0;
    let mut best = f64::INFINITY;
    for k in 0..=samples {
        let t = k as f64 / samples as f64;
        let d = at(t);
        if d < best {
            best = d;
            best_t = t;
        }
    }
    let (mut lo, mut hi) = ((best_t - 1.0 / samples as f64).max(0.0), (best_t + 1.0 / samples as f64).min(1.0));
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if at(m1) <= at(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best.min(at(0.5 * (lo + hi)))
}
