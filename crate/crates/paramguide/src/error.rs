//! Error types shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical parameter is outside its allowed range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The configuration document is malformed or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// TE and TM group velocities coincide, so the group-mismatch bandwidth diverges.
    #[error("degenerate group velocities: v_TE = v_TM makes the SPDC bandwidth infinite")]
    DegenerateGroupVelocities,

    /// Division by zero in a derived quantity.
    #[error("division by zero: {0}")]
    DivisionByZero(String),

    /// The requested computation is outside the regime covered by the closed form.
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    /// A numerical-accuracy target could not be met.
    #[error("accuracy failure: {0}")]
    Accuracy(String),

    /// A value lies outside the covered range (e.g. integration window off the grid).
    #[error("range error: {0}")]
    Range(String),

    /// A documented precondition of an operation was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Fock-space truncation leaked more probability than allowed.
    #[error("truncation leak {leak:.3e} exceeds tolerance {tolerance:.1e}; retry with n_max >= {suggested_n_max}")]
    Truncation {
        leak: f64,
        tolerance: f64,
        suggested_n_max: usize,
    },

    /// The correlation parameter is undefined (vanishing fluctuation product).
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    /// The trajectory is not in the regime the operation expects.
    #[error("regime error: {0}")]
    WrongRegime(String),

    /// A Schmidt cut was requested inside an entangled pair.
    #[error("invalid cut: {0}")]
    InvalidCut(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
