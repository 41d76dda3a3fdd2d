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

//! Redundancy-aware action spaces for overactuated robot arms.
//!
//! The crate turns agent actions expressed in one of four spaces (joint, task,
//! end-effector + arm angle, end-effector + selected joints) into validated
//! joint targets, and ships a small kinematic environment and benchmark
//! harness for comparing them.

pub mod action;
pub mod bench;
pub mod chain;
pub mod collision;
pub mod env;
pub mod error;
pub mod ik;
pub mod pose;
pub mod redundancy;

pub use action::{Action, ActionMode, ActionOutcome, ActionPayload, Failure, RedundancySelection, Space};
pub use chain::{JointConfig, JointKind, KinematicChain};
pub use ik::{IkRequest, IkResult, SolverParams};
pub use pose::Pose;
pub use redundancy::{ArmAngle, ElbowCircle};
