use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{op} requires a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("matrix is singular")]
    Singular,

    /// A leading principal minor vanished, so the matrix has no LDU factorization.
    #[error("leading principal minor {index} vanishes: matrix is outside the big cell")]
    NotInBigCell { index: usize },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("division by zero at expression node {node}")]
    DivisionByZero { node: usize },

    #[error("square root argument {re:+e}{im:+e}i lies on the branch cut (node {node})")]
    BranchCut { node: usize, re: f64, im: f64 },

    #[error("point is not a member of {space}: defect {defect:e}")]
    MembershipViolation { space: String, defect: f64 },

    #[error("point lies outside the domain of {label}")]
    OutsideDomain { label: String },

    #[error("finite-difference stencil left the domain: {0}")]
    DomainExit(String),

    #[error("sampling failed after {attempts} attempts: {what}")]
    SamplingFailure { attempts: usize, what: String },

    #[error("operation not supported for space {space}: {what}")]
    UnsupportedSpace { space: String, what: String },

    #[error("family members live on different spaces: {0} vs {1}")]
    MixedSpaces(String, String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}
