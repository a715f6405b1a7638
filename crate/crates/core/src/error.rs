use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its physical or contractual domain.
    #[error("invalid parameter `{name}`: {reason}")]
    Domain { name: &'static str, reason: String },

    /// A caller-owned precondition (such as the balanced splitter) does not hold.
    #[error("precondition violated: {0}")]
    Contract(String),

    /// The splitter sends every photon to the reference arm (T = 0).
    #[error("transmissivity is zero: an all-reference topology cannot sense the medium")]
    ZeroTransmissivity,

    /// The susceptibility denominator vanished.
    #[error("singular susceptibility at {context}")]
    Singular { context: String },

    /// A dense linear solve failed or was numerically singular.
    #[error("linear solve failed for {system} (condition number {condition:e})")]
    Solver {
        system: &'static str,
        condition: f64,
    },

    /// Finite-difference evaluations coincide to machine precision.
    #[error(
        "finite-difference step underflow at E = {field:e} V/m (step {step:e}); increase the step"
    )]
    StepUnderflow { field: f64, step: f64 },

    #[error("{0}")]
    Numerical(String),
}

pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Domain {
        name,
        reason: reason.into(),
    }
}
