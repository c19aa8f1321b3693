//! Error types shared across the crate.

use thiserror::Error;

/// Broad failure class, used by callers (e.g. the CLI) to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input: files, expressions, argument combinations.
    Input,
    /// A numerical method failed or produced inconsistent results.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("duplicate parameter `{0}`")]
    DuplicateParam(String),

    #[error("unknown key `{key}` in section [{section}]")]
    UnknownKey { section: String, key: String },

    #[error("hamiltonian shape mismatch: dim = {dim} requires {expected} entries, found {found}")]
    ShapeMismatch { dim: usize, expected: usize, found: usize },

    #[error("unknown parameter `{0}` referenced in expression")]
    UnknownParam(String),

    #[error("not a trigonometric polynomial: {0}")]
    NonTrigPolynomial(String),

    #[error("division by a k-dependent expression")]
    DivisionByK,

    #[error("no built-in model named `{0}`")]
    UnknownBuiltin(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("characteristic polynomial is identically zero at this (omega, k)")]
    DegenerateCharSplit,

    #[error("singular contour point: |dF/domega| = {0:.3e} below threshold")]
    SingularContour(f64),

    #[error("impurity direction must be a nonzero coprime integer pair, got ({0}, {1})")]
    BadDirection(i64, i64),

    #[error("boundary polynomial is identically zero (k_perp-independent band at E0)")]
    DegenerateBoundaryPoly,

    #[error("root within {dist:.3e} of |z| = 1 at eta = {eta:.3e}: on-circle ambiguity")]
    OnCircleAmbiguity { dist: f64, eta: f64 },

    #[error("near-multiple root of the boundary polynomial (separation {0:.3e}); perturb eta")]
    MultipleRoot(f64),

    #[error("winding number disagreement: root count gives {root_count}, arg principle gives {arg_principle}")]
    WindingDisagreement { root_count: i64, arg_principle: i64 },

    #[error("incident-pole contract violated: {0}")]
    ContractViolation(String),

    #[error("grazing incidence: group velocity has no component across the impurity line")]
    GrazingIncidence,

    #[error("impurity strength tuned to a bound state: |1 - lambda*G0| = {0:.3e}")]
    BoundStateResonance(f64),

    #[error("state norm underflow at t = {0}: evolution fully absorbed")]
    NormUnderflow(f64),

    #[error("non-finite amplitudes at t = {0}: time step too large?")]
    NanDetected(f64),

    #[error("time step {dt} exceeds the stability bound {bound:.6} = 0.4/||H||_1")]
    UnstableTimeStep { dt: f64, bound: f64 },

    #[error("operator dimension {n} exceeds the dense-solver cap {cap}")]
    DenseCap { n: usize, cap: usize },

    #[error("no eigenvalue with |Re E - {omega}| < {delta}; nearest Re E = {nearest}")]
    EmptyWindow { omega: f64, delta: f64, nearest: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Parse { .. }
            | DuplicateParam(_)
            | UnknownKey { .. }
            | ShapeMismatch { .. }
            | UnknownParam(_)
            | NonTrigPolynomial(_)
            | DivisionByK
            | UnknownBuiltin(_)
            | BadDirection(..)
            | InvalidArgument(_)
            | DenseCap { .. }
            | EmptyWindow { .. }
            | Io(_) => ErrorClass::Input,
            _ => ErrorClass::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
