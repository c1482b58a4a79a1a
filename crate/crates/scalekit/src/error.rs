use thiserror::Error;

/// Library-wide error type. The CLI maps variants onto exit codes, so keep
/// the split between model validation, argument misuse, inadmissible step
/// sizes and range failures intact.
#[derive(Debug, Error)]
pub enum Error {
    /// Construction-time validation failure (bad masses, overlapping pieces,
    /// non-integrable measure, nonpositive adjusted drift, ...).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// An operation precondition was broken by the caller (off-grid point,
    /// depth shortfall, empty candidate list, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested step size h yields a negative jump rate or a negative
    /// drift gap; refine h instead.
    #[error("inadmissible step h = {h}: {reason}")]
    InadmissibleStep { h: f64, reason: String },

    /// A mass was requested on an interval touching 0 while the measure has
    /// infinite activity there.
    #[error("infinite mass: {0}")]
    InfiniteMass(String),

    /// Values left the representable range (scale values past 1e300, failed
    /// root bracketing, divergent integrals).
    #[error("numerical range: {0}")]
    NumericalRange(String),

    /// Adaptive quadrature exhausted its panel budget before reaching the
    /// requested tolerance.
    #[error("quadrature did not converge: {0}")]
    QuadratureBudget(String),
}

pub type Result<T> = std::result::Result<T, Error>;
