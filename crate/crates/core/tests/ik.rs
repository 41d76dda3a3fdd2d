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

mod common;

use common::*;
use erspace::chain::{srs7, srs8plus, JointConfig, KinematicChain};
use erspace::ik::{pose_error, solve_constrained, solve_dls, solve_pinv, solve_subchain, IkStatus};
use erspace::redundancy::null_space_flow;
use erspace::{IkRequest, Pose, SolverParams};
use nalgebra::{DVector, UnitQuaternion, Vector3};
use proptest::prelude::*;
use rand::Rng;

fn generic_q() -> JointConfig {
    JointConfig::from_slice(&[0.3, 0.5, -0.4, -1.6, 0.7, 1.4, -0.2])
}

fn tight() -> SolverParams {
    SolverParams::default().with_tolerance(1e-7)
}

fn perturb(q: &JointConfig, rng: &mut rand_chacha::ChaCha8Rng, radius: f64) -> JointConfig {
    let dir = DVector::from_fn(q.len(), |_, _| rng.random_range(-1.0..1.0));
    let scale = rng.random_range(0.0..radius) / dir.norm();
    JointConfig(&q.0 + dir * scale)
}

#[test]
fn pinv_round_trip_rate() {
    let c = srs7();
    let mut r = rng(11);
    let n = 1000;
    let mut ok = 0;
    for _ in 0..n {
        let q = random_config(&c, &mut r, 0.05);
        let target = c.forward_kinematics(&q).unwrap();
        let seed = perturb(&q, &mut r, 0.05);
        let res = solve_pinv(&c, &IkRequest::new(target, seed), &tight()).unwrap();
        if res.converged && res.position_residual <= 1e-6 && res.orientation_residual <= 1e-6 {
            let reached = c.forward_kinematics(&res.q).unwrap();
            assert!(reached.approx_eq(&target, 1e-6, 1e-6));
            ok += 1;
        }
    }
    assert!(ok as f64 >= 0.99 * n as f64, "{ok}/{n}");
}

#[test]
fn dls_default_damping_round_trip() {
    let c = srs7();
    let params = SolverParams::default();
    let mut r = rng(12);
    let mut ok = 0;
    for _ in 0..200 {
        let q = random_config(&c, &mut r, 0.05);
        let target = c.forward_kinematics(&q).unwrap();
        let res = solve_dls(&c, &IkRequest::new(target, perturb(&q, &mut r, 0.05)), &params).unwrap();
        if res.converged {
            assert!(res.position_residual <= params.position_tolerance);
            assert!(res.orientation_residual <= params.orientation_tolerance);
            ok += 1;
        }
    }
    assert!(ok >= 196, "{ok}/200");
}

#[test]
fn undamped_dls_agrees_with_pinv() {
    let c = srs7();
    let params = SolverParams { damping_lambda: 0.0, ..tight() };
    let mut r = rng(13);
    for _ in 0..100 {
        let q = random_config(&c, &mut r, 0.1);
        let target = c.forward_kinematics(&q).unwrap();
        let req = IkRequest::new(target, perturb(&q, &mut r, 0.05));
        let a = solve_pinv(&c, &req, &params).unwrap();
        let b = solve_dls(&c, &req, &params).unwrap();
        assert_eq!(a.converged, b.converged);
        let pa = c.forward_kinematics(&a.q).unwrap();
        let pb = c.forward_kinematics(&b.q).unwrap();
        assert!(pa.approx_eq(&pb, 1e-6, 1e-6));
    }
}

#[test]
fn far_target_exhausts_budget() {
    let c = srs7();
    let target = Pose::new(Vector3::new(10.0, 0.0, 0.5), UnitQuaternion::identity());
    let params = SolverParams::default();
    let res = solve_pinv(&c, &IkRequest::new(target, generic_q()), &params).unwrap();
    assert!(!res.converged);
    assert_ne!(res.status, IkStatus::Converged);
    assert!(res.position_residual > 9.0);
    assert!(res.iterations == params.max_iterations || res.status == IkStatus::LimitBlocked);
}

#[test]
fn singular_targets_never_produce_nan() {
    let c = srs7();
    let params = SolverParams { respect_limits: false, ..SolverParams::default() };
    let singular = [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.4, 0.3, -0.2, -1.2, 0.5, 0.0, 0.1],
        [0.0, 0.0, 0.0, -1.5, 0.0, 0.0, 0.0],
    ];
    for s in singular {
        let q = JointConfig::from_slice(&s);
        let target = c.forward_kinematics(&q).unwrap();
        for (offset, seed_shift) in [(0.0, 0.1), (0.02, 0.0), (0.3, 0.2)] {
            let t = Pose::new(target.position + Vector3::new(offset, 0.0, 0.0), target.orientation());
            let seed = JointConfig(q.0.add_scalar(seed_shift));
            for res in [
                solve_pinv(&c, &IkRequest::new(t, seed.clone()), &params).unwrap(),
                solve_dls(&c, &IkRequest::new(t, seed.clone()), &params).unwrap(),
            ] {
                assert!(res.q.is_finite());
                assert!(res.max_step <= params.step_clamp * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn elbow_pose_pair_from_known_config_is_recovered() {
    let c = srs7();
    let params = SolverParams::default();
    let mut r = rng(14);
    let mut ok = 0;
    for _ in 0..200 {
        let q = random_config(&c, &mut r, 0.05);
        let frames = c.link_frames(&q).unwrap();
        let target = c.forward_kinematics(&q).unwrap();
        let elbow = frames[c.elbow_link_index].translation.vector;
        let req = IkRequest::new(target, perturb(&q, &mut r, 0.05)).with_point(c.elbow_link_index, elbow);
        let res = solve_constrained(&c, &req, &params).unwrap();
        if res.converged {
            let reached = c.forward_kinematics(&res.q).unwrap();
            assert!(reached.approx_eq(&target, 1e-4, 1e-3));
            assert!((c.elbow_position(&res.q).unwrap() - elbow).norm() <= 1e-5);
            ok += 1;
        }
    }
    assert!(ok >= 196, "{ok}/200");
}

#[test]
fn elbow_off_the_circle_is_rejected() {
    let c = srs7();
    let q = generic_q();
    let target = c.forward_kinematics(&q).unwrap();
    let elbow = c.elbow_position(&q).unwrap();
    // trace the self-motion of this pose and move away from every traced elbow
    let mut traced = Vec::new();
    for sign in [1.0, -1.0] {
        let flow = null_space_flow(&c, &q, sign * 0.01, 700).unwrap();
        traced.extend(flow.configs.iter().map(|cfg| c.elbow_position(cfg).unwrap()));
    }
    let fit = fit_circle(&traced);
    let radial = (elbow - fit.center).normalize();
    let off = elbow + radial * 0.2;
    let nearest = traced.iter().map(|p| (p - off).norm()).fold(f64::INFINITY, f64::min);
    assert!(nearest > 0.19, "{nearest}");
    let req = IkRequest::new(target, q.clone()).with_point(c.elbow_link_index, off);
    let res = solve_constrained(&c, &req, &SolverParams::default()).unwrap();
    assert!(!res.converged);
    assert!(res.q.is_finite());
}

/// First configuration along the self-motion of `q` whose joint `j` has moved by `delta`.
fn flow_until(c: &KinematicChain, q: &JointConfig, j: usize, delta: f64) -> Option<JointConfig> {
    for sign in [1.0, -1.0] {
        let flow = null_space_flow(c, q, sign * 1e-3, 4000).unwrap();
        for w in flow.configs.windows(2) {
            let (a, b) = (w[0][j] - q[j], w[1][j] - q[j]);
            if (a - delta) * (b - delta) <= 0.0 {
                return Some(b_or_a(&w[0], &w[1], a, b, delta));
            }
        }
    }
    None
}

fn b_or_a(a: &JointConfig, b: &JointConfig, da: f64, db: f64, delta: f64) -> JointConfig {
    if (da - delta).abs() < (db - delta).abs() { a.clone() } else { b.clone() }
}

#[test]
fn base_joint_offset_is_compensated_by_the_elbow() {
    let c = srs7();
    let q = generic_q();
    let target = c.forward_kinematics(&q).unwrap();
    assert!(flow_until(&c, &q, 0, 0.2).is_some(), "pose admits q0 + 0.2");
    let value = q[0] + 0.2;
    let req = IkRequest::new(target, q.clone()).with_fixed(0, value);
    let res = solve_subchain(&c, &req, &tight()).unwrap();
    assert!(res.converged);
    assert_eq!(res.q[0].to_bits(), value.to_bits());
    assert!(res.position_residual <= 1e-6);
    let moved = (c.elbow_position(&res.q).unwrap() - c.elbow_position(&q).unwrap()).norm();
    assert!(moved > 0.01, "{moved}");
}

#[test]
fn eight_dof_square_subproblem() {
    let c = srs8plus();
    let mut r = rng(15);
    let mut ok = 0;
    for _ in 0..200 {
        let q = random_config(&c, &mut r, 0.05);
        let target = c.forward_kinematics(&q).unwrap();
        let req = IkRequest::new(target, perturb(&q, &mut r, 0.05)).with_fixed(0, q[0]).with_fixed(1, q[1]);
        let res = solve_subchain(&c, &req, &SolverParams::default()).unwrap();
        assert_eq!((res.q[0], res.q[1]), (q[0], q[1]));
        if res.converged {
            ok += 1;
        }
    }
    assert!(ok >= 190, "{ok}/200");
}

#[test]
fn subchain_rejects_overconstrained_requests() {
    let c = srs7();
    let target = c.forward_kinematics(&generic_q()).unwrap();
    let req = IkRequest::new(target, generic_q()).with_fixed(0, 0.0).with_fixed(2, 0.0);
    assert!(solve_subchain(&c, &req, &SolverParams::default()).is_err());
}

#[test]
fn solver_is_pure() {
    let c = srs7();
    let mut r = rng(16);
    for _ in 0..20 {
        let q = random_config(&c, &mut r, 0.05);
        let target = c.forward_kinematics(&random_config(&c, &mut r, 0.05)).unwrap();
        let req = IkRequest::new(target, q.clone());
        let mut a = solve_dls(&c, &req, &SolverParams::default()).unwrap();
        let mut b = solve_dls(&c, &req, &SolverParams::default()).unwrap();
        a.wall_time = 0.0;
        b.wall_time = 0.0;
        assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steps_never_exceed_clamp(
        q in prop::collection::vec(-1.5f64..1.5, 7),
        goal in prop::collection::vec(-1.5f64..1.5, 7),
        clamp in 0.01f64..0.5,
    ) {
        let c = srs7();
        let mut q = JointConfig::from_slice(&q);
        c.clamp_to_limits(&mut q);
        let target = c.forward_kinematics(&JointConfig::from_slice(&goal)).unwrap();
        let params = SolverParams { step_clamp: clamp, max_iterations: 30, ..SolverParams::default() };
        for res in [
            solve_pinv(&c, &IkRequest::new(target, q.clone()), &params).unwrap(),
            solve_dls(&c, &IkRequest::new(target, q.clone()), &params).unwrap(),
        ] {
            prop_assert!(res.max_step <= clamp * (1.0 + 1e-12));
            prop_assert!(res.q.is_finite());
        }
    }

    #[test]
    fn fixed_joints_are_bit_exact(
        goal in prop::collection::vec(-1.0f64..1.0, 7),
        joint in 0usize..7,
        frac in 0.0f64..1.0,
    ) {
        let c = srs7();
        let mut g = JointConfig::from_slice(&goal);
        c.clamp_to_limits(&mut g);
        let target = c.forward_kinematics(&g).unwrap();
        let l = c.joints[joint].limits;
        let value = l.lo + frac * l.span();
        let req = IkRequest::new(target, generic_q()).with_fixed(joint, value);
        let res = solve_subchain(&c, &req, &SolverParams::default()).unwrap();
        prop_assert_eq!(res.q[joint].to_bits(), value.to_bits());
    }

    #[test]
    fn pose_error_antisymmetric_for_small_rotations(
        p in prop::array::uniform3(-1.0f64..1.0),
        r1 in prop::array::uniform3(-0.2f64..0.2),
        r2 in prop::array::uniform3(-0.2f64..0.2),
    ) {
        let a = Pose::new(Vector3::from(p), UnitQuaternion::from_scaled_axis(Vector3::from(r1)));
        let b = Pose::new(Vector3::zeros(), UnitQuaternion::from_scaled_axis(Vector3::from(r2)));
        prop_assert!((pose_error(&a, &b) + pose_error(&b, &a)).norm() <= 1e-9);
    }
}
