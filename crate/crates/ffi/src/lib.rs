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

//! C ABI over the erspace kinematics and action-space translators.
//!
//! Chains are opaque handles. Every fallible call returns an [`ErStatus`];
//! on failure [`er_last_error_message`] describes the error for the calling
//! thread. Poses are 7 doubles `[x, y, z, qw, qx, qy, qz]`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use erspace::action::{self, Action, ActionMode, Failure, RedundancySelection, Space};
use erspace::chain::{self, JointConfig, KinematicChain};
use erspace::ik::SolverParams;
use erspace::pose::Pose;
use erspace::redundancy;

/// Opaque kinematic chain.
pub struct ErChain {
    inner: KinematicChain,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    DimensionMismatch = 4,
    NotSrs = 5,
    Unreachable = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErSpace {
    Joint = 0,
    Task = 1,
    Era = 2,
    Erj = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErMode {
    Absolute = 0,
    Delta = 1,
}

/// Why a translation produced no joint target.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErFailure {
    None = 0,
    Malformed = 1,
    IkNoSolution = 2,
    LimitViolation = 3,
    Unreachable = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErElbowCircle {
    pub center: [f64; 3],
    pub radius: f64,
    pub tangent: [f64; 3],
    pub bitangent: [f64; 3],
    pub axis: [f64; 3],
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: ErStatus, msg: impl Into<String>) -> ErStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> ErStatus) -> ErStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(ErStatus::Panic, "internal panic"),
    }
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn er_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn er_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, ErStatus> {
    if s.is_null() {
        return Err(fail(ErStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(ErStatus::InvalidArgument, "string is not UTF-8"))
}

unsafe fn read_doubles<'a>(p: *const f64, len: usize) -> Result<&'a [f64], ErStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(ErStatus::NullPointer, "null array"));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn chain_ref<'a>(chain: *const ErChain) -> Result<&'a KinematicChain, ErStatus> {
    chain.as_ref().map(|c| &c.inner).ok_or_else(|| fail(ErStatus::NullPointer, "null chain"))
}

unsafe fn config(chain: &KinematicChain, q: *const f64, n: usize) -> Result<JointConfig, ErStatus> {
    if n != chain.dof() {
        return Err(fail(ErStatus::DimensionMismatch, format!("expected {} joint values, got {n}", chain.dof())));
    }
    let v = read_doubles(q, n)?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(fail(ErStatus::InvalidArgument, "non-finite joint value"));
    }
    Ok(JointConfig::from_slice(v))
}

unsafe fn pose_in(p: *const f64) -> Result<Pose, ErStatus> {
    let v = read_doubles(p, 7)?;
    let a: [f64; 7] = v.try_into().expect("length checked");
    Pose::from_array(&a).ok_or_else(|| fail(ErStatus::InvalidArgument, "pose is not finite or has a zero quaternion"))
}

fn store_chain(c: KinematicChain, out: *mut *mut ErChain) -> ErStatus {
    if out.is_null() {
        return fail(ErStatus::NullPointer, "null output handle");
    }
    unsafe { *out = Box::into_raw(Box::new(ErChain { inner: c })) };
    ErStatus::Ok
}

/// Parse a chain description (JSON). Free the handle with `er_chain_free`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn er_chain_from_json(json: *const c_char, out: *mut *mut ErChain) -> ErStatus {
    guard(|| {
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match chain::load_chain(text) {
            Ok(c) => store_chain(c, out),
            Err(e) => fail(ErStatus::ParseError, e.to_string()),
        }
    })
}

/// Shipped chain by name (`srs7`, `srs8plus`) or chain file path.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn er_chain_load(name: *const c_char, out: *mut *mut ErChain) -> ErStatus {
    guard(|| {
        let name = match read_str(name) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match chain::resolve_chain(name) {
            Ok(c) => store_chain(c, out),
            Err(e) => fail(ErStatus::ParseError, e.to_string()),
        }
    })
}

/// # Safety
/// `chain` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn er_chain_free(chain: *mut ErChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Number of joints, or 0 for a null handle.
///
/// # Safety
/// `chain` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn er_chain_dof(chain: *const ErChain) -> usize {
    chain.as_ref().map_or(0, |c| c.inner.dof())
}

/// End-effector pose for `q` into `out_pose[7]`.
///
/// # Safety
/// `q` holds `n` doubles; `out_pose` has room for 7.
#[no_mangle]
pub unsafe extern "C" fn er_forward_kinematics(
    chain: *const ErChain,
    q: *const f64,
    n: usize,
    out_pose: *mut f64,
) -> ErStatus {
    guard(|| {
        let run = || -> Result<(), ErStatus> {
            let c = chain_ref(chain)?;
            let q = config(c, q, n)?;
            if out_pose.is_null() {
                return Err(fail(ErStatus::NullPointer, "null output"));
            }
            let pose = c.forward_kinematics(&q).map_err(|e| fail(ErStatus::InvalidArgument, e.to_string()))?;
            slice::from_raw_parts_mut(out_pose, 7).copy_from_slice(&pose.to_array());
            Ok(())
        };
        run().err().unwrap_or(ErStatus::Ok)
    })
}

/// End-effector geometric Jacobian, row-major 6 x n (linear rows first).
///
/// # Safety
/// `q` holds `n` doubles; `out` has room for `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn er_jacobian(
    chain: *const ErChain,
    q: *const f64,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> ErStatus {
    guard(|| {
        let run = || -> Result<(), ErStatus> {
            let c = chain_ref(chain)?;
            let q = config(c, q, n)?;
            if out_len < 6 * n {
                return Err(fail(ErStatus::BufferTooSmall, format!("need {} doubles", 6 * n)));
            }
            if out.is_null() {
                return Err(fail(ErStatus::NullPointer, "null output"));
            }
            let j = c.ee_jacobian(&q).map_err(|e| fail(ErStatus::InvalidArgument, e.to_string()))?;
            let dst = slice::from_raw_parts_mut(out, 6 * n);
            for r in 0..6 {
                for k in 0..n {
                    dst[r * n + k] = j.matrix[(r, k)];
                }
            }
            Ok(())
        };
        run().err().unwrap_or(ErStatus::Ok)
    })
}

fn geometry_status(e: &erspace::error::GeometryError) -> ErStatus {
    use erspace::error::GeometryError as G;
    match e {
        G::NotSrs(_) => ErStatus::NotSrs,
        G::Unreachable { .. } | G::NoArmAngle(_) => ErStatus::Unreachable,
        G::Kinematics(_) => ErStatus::InvalidArgument,
    }
}

/// Elbow self-motion circle for an end-effector pose (S-R-S chains only).
///
/// # Safety
/// `pose` holds 7 doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn er_elbow_circle(chain: *const ErChain, pose: *const f64, out: *mut ErElbowCircle) -> ErStatus {
    guard(|| {
        let run = || -> Result<(), ErStatus> {
            let c = chain_ref(chain)?;
            let pose = pose_in(pose)?;
            let out = out.as_mut().ok_or_else(|| fail(ErStatus::NullPointer, "null output"))?;
            let circle = redundancy::elbow_circle(c, &pose).map_err(|e| fail(geometry_status(&e), e.to_string()))?;
            *out = ErElbowCircle {
                center: circle.center.into(),
                radius: circle.radius,
                tangent: circle.tangent.into(),
                bitangent: circle.bitangent.into(),
                axis: circle.axis.into(),
            };
            Ok(())
        };
        run().err().unwrap_or(ErStatus::Ok)
    })
}

/// Arm angle of configuration `q` in (-pi, pi].
///
/// # Safety
/// `q` holds `n` doubles; `out_phi` must be writable.
#[no_mangle]
pub unsafe extern "C" fn er_arm_angle(chain: *const ErChain, q: *const f64, n: usize, out_phi: *mut f64) -> ErStatus {
    guard(|| {
        let run = || -> Result<(), ErStatus> {
            let c = chain_ref(chain)?;
            let q = config(c, q, n)?;
            let out = out_phi.as_mut().ok_or_else(|| fail(ErStatus::NullPointer, "null output"))?;
            let phi = redundancy::arm_angle_from_config(c, &q).map_err(|e| fail(geometry_status(&e), e.to_string()))?;
            *out = phi.radians();
            Ok(())
        };
        run().err().unwrap_or(ErStatus::Ok)
    })
}

fn failure_code(f: Failure) -> ErFailure {
    match f {
        Failure::None => ErFailure::None,
        Failure::Malformed => ErFailure::Malformed,
        Failure::IkNoSolution => ErFailure::IkNoSolution,
        Failure::LimitViolation => ErFailure::LimitViolation,
        Failure::Unreachable => ErFailure::Unreachable,
    }
}

/// Translate one action into a joint target with default solver parameters.
///
/// `values` carries the joint values (joint space), the arm angles (ERA) or
/// the selected joint values (ERJ); `pose` is ignored in joint space. A null
/// `selection` with `selection_len == 0` selects the default base joints.
/// Returns `Ok` whenever the inputs were well formed; `out_failure` then says
/// whether `out_q` (n doubles) was written.
///
/// # Safety
/// Every pointer must be valid for its stated length.
#[no_mangle]
pub unsafe extern "C" fn er_translate(
    chain: *const ErChain,
    space: ErSpace,
    mode: ErMode,
    pose: *const f64,
    values: *const f64,
    values_len: usize,
    current_q: *const f64,
    n: usize,
    selection: *const usize,
    selection_len: usize,
    out_q: *mut f64,
    out_failure: *mut ErFailure,
) -> ErStatus {
    guard(|| {
        let run = || -> Result<(), ErStatus> {
            let c = chain_ref(chain)?;
            let q = config(c, current_q, n)?;
            if out_q.is_null() || out_failure.is_null() {
                return Err(fail(ErStatus::NullPointer, "null output"));
            }
            let values = read_doubles(values, values_len)?.to_vec();
            let mode = match mode {
                ErMode::Absolute => ActionMode::Absolute,
                ErMode::Delta => ActionMode::Delta,
            };
            let read_pose = || -> Result<[f64; 7], ErStatus> {
                Ok(read_doubles(pose, 7)?.try_into().expect("length checked"))
            };
            let (space, action) = match space {
                ErSpace::Joint => (Space::Joint, Action::joint(mode, values)),
                ErSpace::Task => (Space::Task, Action::task(mode, read_pose()?)),
                ErSpace::Era => (Space::Era, Action::era(mode, read_pose()?, values)),
                ErSpace::Erj => (Space::Erj, Action::erj(mode, read_pose()?, values)),
            };
            let selection = if selection_len == 0 {
                RedundancySelection::default_for(c)
            } else {
                if selection.is_null() {
                    return Err(fail(ErStatus::NullPointer, "null selection"));
                }
                RedundancySelection::new(slice::from_raw_parts(selection, selection_len).to_vec())
            };
            let outcome = action::translate(space, &action, &q, c, &selection, &SolverParams::default());
            *out_failure = failure_code(outcome.failure);
            if let Some(target) = outcome.q_target {
                slice::from_raw_parts_mut(out_q, n).copy_from_slice(target.as_slice());
            }
            Ok(())
        };
        run().err().unwrap_or(ErStatus::Ok)
    })
}
