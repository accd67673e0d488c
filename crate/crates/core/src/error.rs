use thiserror::Error;

/// Errors raised by the simulation and reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A point coincides with a kernel singularity.
    #[error("singular input: {0}")]
    Singular(String),

    /// Points violate the geometric preconditions of a quadrature.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A source is non-zero where it must vanish.
    #[error("source support violation: {0}")]
    Support(String),

    /// The time stepper blew up.
    #[error("instability at step {step}: field max grew from {before:e} to {after:e}")]
    Instability { step: usize, before: f64, after: f64 },

    /// The anti-dissipative branch would amplify beyond the allowed factor.
    #[error("growth guard violated: rho = {rho} exceeds the admissible cutoff {rho_max:.6}")]
    GrowthGuard { rho: f64, rho_max: f64 },

    /// Input data carries the wrong attenuation state for the operation.
    #[error("data state error: {0}")]
    DataState(String),

    /// Requested feature is reserved by the interface but not implemented.
    #[error("not implemented: {0}")]
    NotImplemented(String),

    /// Arrays or grids disagree in shape.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Truth image carries no signal.
    #[error("degenerate truth: {0}")]
    DegenerateTruth(String),

    /// Configuration failed validation; `field` is the dotted path of the offending key.
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    /// Malformed binary or text artifact.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by configuration rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
