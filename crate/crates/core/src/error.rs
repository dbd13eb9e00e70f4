use alloc::string::String;
use core::fmt;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A node index was outside `[0, p)`.
    NodeOutOfRange { node: usize, p: usize },
    /// An operation needed two distinct nodes.
    SameNode(usize),
    /// Malformed graph input (self-loop, duplicate edge, ...).
    InvalidGraph(String),
    /// The model is not a member of the declared parameter set.
    InvalidModel(ValidationReport),
    /// A spin value other than -1 or +1.
    InvalidSpin(i64),
    /// Configuration length does not match the model.
    ConfigLength { expected: usize, found: usize },
    /// Horizon must be finite and positive.
    InvalidHorizon(f64),
    /// Query time outside `[0, horizon]`.
    TimeOutOfRange { t: f64, horizon: f64 },
    /// Window index outside `[1, k_max]`.
    WindowOutOfRange { k: u64, k_max: u64 },
    /// The trace is shorter than a single learning window.
    NoCompleteWindow { horizon: f64, window: f64 },
    /// The operation is only defined for continuous-time traces.
    NotContinuous,
    /// A derived learner parameter underflowed.
    ParamUnderflow(&'static str),
    /// A derived learner parameter overflowed.
    ParamOverflow(&'static str),
    /// Exhaustive enumeration requested above the size guard.
    TooLarge { nodes: usize, max: usize },
    /// A conditioning assignment did not cover exactly the required nodes.
    InvalidAssignment(String),
    /// The pair is required to be an edge of the model.
    NotAnEdge { i: usize, j: usize },
    /// The two models do not differ by the removal of a single edge.
    NotSingleEdgeVariant,
    /// Generic precondition violation.
    Precondition(String),
    /// A graph specification that cannot be realized.
    Infeasible(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NodeOutOfRange { node, p } => {
                write!(f, "node {node} out of range for p = {p}")
            }
            Error::SameNode(i) => write!(f, "expected two distinct nodes, got {i} twice"),
            Error::InvalidGraph(msg) => write!(f, "invalid graph: {msg}"),
            Error::InvalidModel(report) => write!(f, "invalid model: {report}"),
            Error::InvalidSpin(s) => write!(f, "invalid spin value {s}, expected -1 or +1"),
            Error::ConfigLength { expected, found } => {
                write!(f, "configuration has {found} spins, expected {expected}")
            }
            Error::InvalidHorizon(t) => write!(f, "horizon must be finite and positive, got {t}"),
            Error::TimeOutOfRange { t, horizon } => {
                write!(f, "time {t} outside [0, {horizon}]")
            }
            Error::WindowOutOfRange { k, k_max } => {
                write!(f, "window {k} outside [1, {k_max}]")
            }
            Error::NoCompleteWindow { horizon, window } => write!(
                f,
                "trace horizon {horizon} is shorter than one window of length {window}"
            ),
            Error::NotContinuous => write!(f, "operation requires a continuous-time trace"),
            Error::ParamUnderflow(what) => write!(f, "parameter underflow: {what}"),
            Error::ParamOverflow(what) => write!(f, "parameter overflow: {what}"),
            Error::TooLarge { nodes, max } => {
                write!(
                    f,
                    "enumeration over {nodes} nodes exceeds the limit of {max}"
                )
            }
            Error::InvalidAssignment(msg) => write!(f, "invalid assignment: {msg}"),
            Error::NotAnEdge { i, j } => write!(f, "pair {{{i}, {j}}} is not an edge"),
            Error::NotSingleEdgeVariant => {
                write!(f, "models do not differ by exactly one removed edge")
            }
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::Infeasible(msg) => write!(f, "infeasible: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
