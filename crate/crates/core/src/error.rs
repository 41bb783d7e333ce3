// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use thiserror::Error;

/// One failed check found while validating an instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    UnknownComponent { flow: usize, id: String },
    NegativeBandwidth { flow: usize, bandwidth: f64 },
    NoFeasibleLayer { component: String },
    MalformedTable(String),
    DuplicateComponent(String),
    SelfLoop { flow: usize, id: String },
    InvalidLayers(String),
    InvalidTech(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownComponent { flow, id } => {
                write!(f, "flow #{flow} references unknown component `{id}`")
            }
            Violation::NegativeBandwidth { flow, bandwidth } => {
                write!(f, "flow #{flow} has non-positive bandwidth {bandwidth}")
            }
            Violation::NoFeasibleLayer { component } => {
                write!(f, "component `{component}` is infeasible in every layer")
            }
            Violation::MalformedTable(msg) => write!(f, "malformed PPA table: {msg}"),
            Violation::DuplicateComponent(id) => write!(f, "duplicate component id `{id}`"),
            Violation::SelfLoop { flow, id } => {
                write!(f, "flow #{flow} has identical endpoints `{id}`")
            }
            Violation::InvalidLayers(msg) => write!(f, "invalid layer stack: {msg}"),
            Violation::InvalidTech(msg) => write!(f, "invalid technology parameters: {msg}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("instance validation failed:\n{}", join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("component `{0}` has no feasible layer")]
    NoFeasibleLayer(String),

    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    #[error("LP solver failure: {0}")]
    SolverFailure(String),

    #[error("too many TSV arrays: {requested} requested but only {available} grid cells")]
    TooManyArrays { requested: usize, available: usize },

    #[error("no vertical-link candidates on boundary {boundary}: {hint}")]
    NoCandidates { boundary: usize, hint: String },

    #[error("boundary {boundary} needs {needed} vertical links but only {available} can be placed")]
    InsufficientCandidates {
        boundary: usize,
        needed: usize,
        available: usize,
    },

    #[error("flow {src} -> {dst} is unreachable in the network (missing vertical connectivity?)")]
    Unreachable { src: String, dst: String },

    #[error("incomplete solution: {0}")]
    IncompleteSolution(String),

    #[error("step {step}: {source}")]
    Step {
        step: u8,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("  - {x}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub fn at_step(self, step: u8) -> Error {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }

    /// Process exit code: 2 validation, 3 infeasible, 4 limits exceeded, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Step { source, .. } => source.exit_code(),
            Error::Validation(_) | Error::Json { .. } | Error::InvalidParams(_) | Error::Config(_) => 2,
            Error::NoFeasibleLayer(_)
            | Error::NoCandidates { .. }
            | Error::InsufficientCandidates { .. }
            | Error::Unreachable { .. }
            | Error::TooManyArrays { .. }
            | Error::SolverFailure(_) => 3,
            Error::InstanceTooLarge(_) => 4,
            Error::IncompleteSolution(_) | Error::Io { .. } => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
