use std::fmt;

use thiserror::Error;

/// A single violated invariant found while validating a calibration set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Where the problem is, e.g. `measurements[3].t_comp_s`.
    pub locus: String,
    pub message: String,
}

impl Violation {
    pub fn new(locus: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            locus: locus.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.locus, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// A model precondition was violated (out-of-range cores, sd < 1, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A named workload, host, CSD, CPU, or measurement does not exist.
    #[error("lookup error: {0}")]
    Lookup(String),

    /// The calibration text could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// The calibration parsed but violates one or more invariants.
    #[error("calibration is invalid ({} problem(s)):\n{}", .0.len(), format_violations(.0))]
    Validation(Vec<Violation>),

    /// Closed form and brute-force oracle disagree. Always a bug.
    #[error("internal consistency error: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn lookup(msg: impl Into<String>) -> Error {
    Error::Lookup(msg.into())
}
