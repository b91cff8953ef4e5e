use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the library. Variants carry 0-based indices; messages
/// print them 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension {0} is not supported (expected 1..=64)")]
    Dimension(usize),

    #[error("index {} out of range for dimension {n}", .index + 1)]
    IndexOutOfRange { index: usize, n: usize },

    #[error("index set contains {} more than once", .0 + 1)]
    DuplicateIndex(usize),

    #[error("cannot delete every index of [1,{0}]")]
    DeleteAll(usize),

    #[error("exhaustive scan supports at most {limit} (got {got})")]
    TooLarge { got: usize, limit: usize },

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not supported in the quasi-order (entry ({},{}))", .row + 1, .col + 1)]
    NotInAlgebra { row: usize, col: usize },

    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),

    #[error("matrix has rank greater than one (second singular value {0:e})")]
    RankTooHigh(f64),

    #[error("matrix is singular or badly conditioned (condition number {0:e})")]
    Singular(f64),

    #[error("family members {0} and {1} do not commute")]
    NotCommuting(usize, usize),

    #[error("family member {0} is not diagonalizable")]
    NotDiagonalizable(usize),

    #[error("in-algebra diagonalization failed after {0} attempts")]
    DiagonalizationFailed(usize),

    #[error("pair ({},{}) is not in the quasi-order", .0 + 1, .1 + 1)]
    PairNotInOrder(usize, usize),

    #[error("transitive map is missing a value for pair ({},{})", .0 + 1, .1 + 1)]
    MissingValue(usize, usize),

    #[error("transitive map value on ({},{}) is zero or not finite", .0 + 1, .1 + 1)]
    InvalidValue(usize, usize),

    #[error("map is not transitive: g({a},{b})g({b},{c}) != g({a},{c})", a = .i + 1, b = .j + 1, c = .k + 1)]
    NotTransitive { i: usize, j: usize, k: usize },

    #[error("idempotent is not central: it does not commute with E({},{})", .0 + 1, .1 + 1)]
    NotCentral(usize, usize),

    #[error("quasi-order has {0} components; enumeration supports at most 20")]
    TooManyClasses(usize),

    #[error("condition (i) holds; no counterexample exists")]
    ConditionHolds,

    #[error("condition (i) fails at ({},{})", .0 + 1, .1 + 1)]
    ConditionFails(usize, usize),

    #[error("spectrum of the image of diag(1..n) is not {{1,...,n}} (deviation {0:e})")]
    SpectrumMismatch(f64),

    #[error("image of E({a},{b}) is parallel to neither E({a},{b}) nor E({b},{a})", a = .0 + 1, b = .1 + 1)]
    AmbiguousUnit(usize, usize),

    #[error("unit classification is not a quasi-order")]
    NotQuasiOrder,

    #[error("recovered form disagrees with the map (max relative error {0:e})")]
    RecoveryMismatch(f64),

    #[error("map kind `{kind}` does not apply: {reason}")]
    Inapplicable { kind: String, reason: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("malformed input: {0}")]
    Input(String),
}
