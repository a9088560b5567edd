use crate::mesh::{ElemId, NodeId, SurfaceId};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed mesh: {0}")]
    MalformedMesh(String),

    #[error("inconsistent classification at node {node}: {reason}")]
    Identification { node: NodeId, reason: String },

    #[error("surface {0} has no elements")]
    EmptySurface(SurfaceId),

    #[error("line {0} is degenerate: a spline needs at least two nodes")]
    DegenerateLine(usize),

    #[error("junction node {node} has {lines} incident lines, at least 3 required")]
    JunctionDegree { node: NodeId, lines: usize },

    #[error("hardening increment too large: K2 * strain increment = {0} >= 1")]
    StepTooLarge(f64),

    #[error("critical density iteration did not converge after {iterations} iterations (last iterate {last})")]
    NoConvergence { iterations: usize, last: f64 },

    #[error("apparent strain rate is undefined before any deformation")]
    UndefinedRate,

    #[error("critical density {rho_c} does not exceed the initial density {rho0}")]
    SubcriticalNucleus { rho_c: f64, rho0: f64 },

    #[error("nucleation at node {node} rejected: {reason}")]
    NucleationRejected { node: NodeId, reason: String },

    #[error("operation on element {elem} rejected: {reason}")]
    Rejected { elem: ElemId, reason: String },

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("oracle evaluated outside its range of validity: {0}")]
    OracleRange(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
