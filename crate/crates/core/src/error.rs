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

use thiserror::Error;

/// Problems found while loading or validating a chain description.
#[derive(Debug, Error)]
pub enum ChainError {
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("`{path}`: axis norm is {norm}, expected a unit vector")]
    NonUnitAxis { path: String, norm: f64 },
    #[error("`{path}`: limits [{lo}, {hi}] are inverted or not finite")]
    InvalidLimits { path: String, lo: f64, hi: f64 },
    #[error("`{path}`: {message}")]
    Invalid { path: String, message: String },
    #[error("unknown builtin chain `{0}`")]
    UnknownBuiltin(String),
    #[error("failed to read chain file: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("joint vector has {got} entries, chain has {expected} joints")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("joint vector contains a non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("link index {index} out of range (chain has {links} links)")]
    LinkOutOfRange { index: usize, links: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IkError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("fixed joint {joint} commanded to {value}, outside [{lo}, {hi}]")]
    FixedJointOutOfLimits { joint: usize, value: f64, lo: f64, hi: f64 },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("chain `{0}` is not a single-redundancy spherical-shoulder/spherical-wrist arm")]
    NotSrs(String),
    #[error("wrist at distance {distance} from shoulder, reachable band is [{min}, {max}]")]
    Unreachable { distance: f64, min: f64, max: f64 },
    #[error("elbow circle is degenerate (radius {0}); arm angle undefined")]
    NoArmAngle(f64),
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("initial configuration is in collision ({0} contacts)")]
    InitialCollision(usize),
    #[error("episode already finished")]
    EpisodeDone,
    #[error("failed to parse task document: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("report schema violation: {0}")]
    Schema(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}
