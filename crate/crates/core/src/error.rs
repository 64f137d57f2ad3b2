use thiserror::Error;

/// Errors produced by the graph, contest and equilibrium routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph must have at least one node")]
    EmptyGraph,

    #[error("node index {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("duplicate edge {{{u}, {v}}}")]
    DuplicateEdge { u: usize, v: usize },

    #[error("node {0} has no neighbours (add a self-loop or an edge)")]
    IsolatedNode(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("entry {index} is {value}, expected a finite nonnegative number")]
    InvalidEntry { index: usize, value: f64 },

    #[error("opponent spends zero on contest {index}; the best-response formula needs interior opponent spend")]
    FormulaDomain { index: usize },

    #[error("valuations are not proportional (worst relative deviation {deviation:.3e}); use the general solver")]
    NotProportional { deviation: f64 },

    #[error("no sign change on [{a}, {b}]: f(a) = {fa}, f(b) = {fb}")]
    NoSignChange { a: f64, fa: f64, b: f64, fb: f64 },

    #[error("root finder did not converge after {iterations} iterations")]
    RootNotConverged { iterations: usize },

    #[error("follower response infeasible: {0}")]
    InfeasibleFollower(String),

    #[error("grid oracle supports at most {max_n} contests and {max_steps} steps (got n = {n}, steps = {steps})")]
    OracleTooLarge {
        n: usize,
        steps: usize,
        max_n: usize,
        max_steps: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
