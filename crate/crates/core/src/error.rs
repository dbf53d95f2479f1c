use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("initial envelope reaches the lattice edge: tail {tail:.3e} of peak exceeds 1e-6")]
    EdgeContamination { tail: f64 },

    #[error("non-finite amplitude at z = {z}")]
    NonFinite { z: f64 },

    #[error("eigendecomposition did not converge")]
    Singular,

    #[error("quadrature unresolved: doubling nodes changed {quantity} by {change:.3e} (relative)")]
    QuadratureUnresolved { quantity: &'static str, change: f64 },

    #[error("small-gain expansion invalid: radicand {radicand} is not positive")]
    ExpansionInvalid { radicand: f64 },

    #[error("field has zero total intensity")]
    ZeroField,

    #[error("no spectral peak: peak {peak:.3e} below 3x median floor {floor:.3e}")]
    NoPeak { peak: f64, floor: f64 },

    #[error("series too short: {periods:.2} oscillation periods sampled, need 8")]
    TooShort { periods: f64 },

    #[error("grid too coarse: boundary defined on {coverage:.0}% of columns")]
    TooCoarse { coverage: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_config(&self) -> bool {
        matches!(self, Error::InvalidConfig(_) | Error::EdgeContamination { .. })
    }
}
