use thiserror::Error;

use crate::model::{MemberId, NodeId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coordinate is not finite: ({x}, {y})")]
    NonFinite { x: f64, y: f64 },

    #[error("tolerance {0} outside (0, 1e-3)")]
    InvalidTolerance(f64),

    #[error("points {0:?} are collinear or coincident")]
    DegeneratePosition([usize; 3]),

    #[error("cell shares {shared} node(s) with a non-empty structure; at least 2 are required unless mechanisms are allowed")]
    InsufficientSharing { shared: usize },

    #[error("unknown node {0}")]
    UnknownNodeId(NodeId),

    #[error("unknown member {0}")]
    UnknownMemberId(MemberId),

    #[error("no member joins nodes {0} and {1}")]
    UnknownPair(NodeId, NodeId),

    #[error("member {0} is already removed")]
    AlreadyRemoved(MemberId),

    #[error("member {0} is not removed")]
    NotRemoved(MemberId),

    #[error("an active member already joins the endpoints of member {0}")]
    PairOccupied(MemberId),

    #[error("snapshot token belongs to a different structure")]
    InvalidToken,

    #[error("{removals} removals require at least 3 shared nodes, cell shares {shared}")]
    TooManyRemovals { removals: usize, shared: usize },

    #[error("fusion requires at least one member removal")]
    NoRemovals,

    #[error("fusion placement has no solution: {0}")]
    NoSolution(&'static str),

    #[error("placed node is collinear with two shared nodes")]
    DegenerateResult,

    #[error("wheel around node {center} has a zero area determinant at rim position {position}")]
    DegenerateWheel { center: NodeId, position: usize },

    #[error("wheel around node {center} does not close: residual {residual:e}")]
    ClosureFailure { center: NodeId, residual: f64 },

    #[error("wheel around node {0} needs at least 3 peripheral nodes")]
    WheelTooSmall(NodeId),

    #[error("virtual cell search exhausted after {candidates} candidates, found {found} of {needed}")]
    SearchExhausted {
        candidates: usize,
        found: usize,
        needed: usize,
    },

    #[error("basis incomplete: {achieved} of {target} states")]
    IncompleteBasis { achieved: usize, target: usize },

    #[error("basis certification failed: {0}")]
    CertificationFailed(String),

    #[error("transform matrix is singular or not square")]
    SingularT,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mesh budget too small: {0}")]
    BudgetTooSmall(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("unsupported mesh request: {0}")]
    UnsupportedMesh(String),

    #[error("mesh is not connected through shared edges")]
    DisconnectedMesh,

    #[error("generation failed at step {step}: {source}")]
    GenerationFailed { step: usize, source: Box<Error> },

    #[error("member removals leave {mechanisms} mechanism(s)")]
    RemovalBreaksRigidity { mechanisms: usize },
}

impl Error {
    /// Variant name, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFinite { .. } => "NonFinite",
            Error::InvalidTolerance(_) => "InvalidTolerance",
            Error::DegeneratePosition(_) => "DegeneratePosition",
            Error::InsufficientSharing { .. } => "InsufficientSharing",
            Error::UnknownNodeId(_) => "UnknownNodeId",
            Error::UnknownMemberId(_) => "UnknownMemberId",
            Error::UnknownPair(..) => "UnknownPair",
            Error::AlreadyRemoved(_) => "AlreadyRemoved",
            Error::NotRemoved(_) => "NotRemoved",
            Error::PairOccupied(_) => "PairOccupied",
            Error::InvalidToken => "InvalidToken",
            Error::TooManyRemovals { .. } => "TooManyRemovals",
            Error::NoRemovals => "NoRemovals",
            Error::NoSolution(_) => "NoSolution",
            Error::DegenerateResult => "DegenerateResult",
            Error::DegenerateWheel { .. } => "DegenerateWheel",
            Error::ClosureFailure { .. } => "ClosureFailure",
            Error::WheelTooSmall(_) => "WheelTooSmall",
            Error::SearchExhausted { .. } => "SearchExhausted",
            Error::IncompleteBasis { .. } => "IncompleteBasis",
            Error::CertificationFailed(_) => "CertificationFailed",
            Error::SingularT => "SingularT",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::BudgetTooSmall(_) => "BudgetTooSmall",
            Error::InvalidProfile(_) => "InvalidProfile",
            Error::UnsupportedMesh(_) => "UnsupportedMesh",
            Error::DisconnectedMesh => "DisconnectedMesh",
            Error::GenerationFailed { .. } => "GenerationFailed",
            Error::RemovalBreaksRigidity { .. } => "RemovalBreaksRigidity",
        }
    }

    /// Failures of the analysis itself rather than of its input.
    pub fn is_internal(&self) -> bool {
        match self {
            Error::ClosureFailure { .. }
            | Error::SearchExhausted { .. }
            | Error::IncompleteBasis { .. }
            | Error::CertificationFailed(_) => true,
            Error::GenerationFailed { source, .. } => source.is_internal(),
            _ => false,
        }
    }
}
