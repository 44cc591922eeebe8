use thiserror::Error;

/// Errors raised by the model library, the simulators and the experiment harnesses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("model failed class validation: {0}")]
    Validation(String),

    #[error("adaptive quadrature did not converge on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64 },

    #[error("unnormalized density does not decay before the domain cap ({0})")]
    NonIntegrable(f64),

    #[error("numerical blow-up at t = {time}: |X| = {value}")]
    NumericalBlowup { time: f64, value: f64 },

    #[error("kernel order {0} exceeds the supported maximum of 20")]
    OrderTooLarge(usize),

    #[error("degenerate regression: all abscissae coincide")]
    DegenerateFit,

    #[error("need at least {needed} usable rows, found {found}")]
    InsufficientRows { needed: usize, found: usize },

    #[error("calibration constraint violated: {0}")]
    CalibrationViolation(String),

    #[error("densities are not given on the same grid")]
    GridMismatch,

    #[error("density integrates to {0}, expected 1")]
    NotNormalized(f64),

    #[error("regression window around x = {x} holds {count} points (minimum 20)")]
    InsufficientSupport { x: f64, count: usize },

    #[error("singular configuration: {0}")]
    SingularConfiguration(String),

    #[error("configuration error for key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
