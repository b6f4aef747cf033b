use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is disconnected: no path between vertex {0} and vertex {1}")]
    Disconnected(usize, usize),

    #[error("malformed instance: {0}")]
    Malformed(String),

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("instance failed validation: {0}")]
    Invalid(String),

    #[error("walk is not rooted at the depot: {0}")]
    NotRooted(String),

    #[error(
        "no common period within {multiple}x the longest walk period; \
         use integer-scaled distances and hold times"
    )]
    Incommensurable { multiple: u32 },

    #[error("orienteering infeasible: start-to-end distance {distance} exceeds budget {budget}")]
    OrienteeringInfeasible { distance: f64, budget: f64 },

    #[error("vertex {vertex} cannot be reached and returned from the depot within {budget}")]
    Unreachable { vertex: usize, budget: f64 },

    #[error("robot count must be at least 1")]
    NoRobots,

    #[error("this planner needs {0}")]
    WrongMode(&'static str),

    #[error("no robot count up to {max} reaches stretch {target}; best stretch found {best}")]
    StretchUnreachable { max: usize, target: f64, best: f64 },

    #[error("oracle input rejected: {0}")]
    OracleInput(String),

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
}

pub type Result<T> = std::result::Result<T, Error>;
