use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice constant must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("drive frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("amplitude list has {amps} entries but phase list has {phases}")]
    MismatchedLengths { amps: usize, phases: usize },
    #[error("a drive family needs at least one harmonic")]
    EmptyFamily,
    #[error("the first harmonic phase is fixed to 0, got {0}")]
    NonzeroFirstPhase(f64),
    #[error("invalid harmonic: {0}")]
    InvalidHarmonic(String),
    #[error("bond index must be 1, 2 or 3, got {0}")]
    InvalidBond(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("truncation order {n_max} leaves spectral weight {tail:e} (relative) outside the retained band")]
    TruncationTooSmall { n_max: usize, tail: f64 },
    #[error("Fourier arrays span different orders ({left} vs {right})")]
    ExtentMismatch { left: usize, right: usize },
    #[error("band gap {gap:e} is below the closure threshold {threshold:e}")]
    GapClosed { gap: f64, threshold: f64 },
    #[error("plaquette flux {max_flux:.4} rad is too close to the branch cut")]
    AmbiguousPlaquette { max_flux: f64 },
    #[error("propagator not converged: doubling the step count moved an entry by {change:e}")]
    NotConverged { change: f64 },
    #[error("malformed drive description: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Failures of the numerics itself, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::TruncationTooSmall { .. }
                | Error::GapClosed { .. }
                | Error::AmbiguousPlaquette { .. }
                | Error::NotConverged { .. }
        )
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonPositiveLength(_) => "non_positive_length",
            Error::NonPositiveFrequency(_) => "non_positive_frequency",
            Error::MismatchedLengths { .. } => "mismatched_lengths",
            Error::EmptyFamily => "empty_family",
            Error::NonzeroFirstPhase(_) => "nonzero_first_phase",
            Error::InvalidHarmonic(_) => "invalid_harmonic",
            Error::InvalidBond(_) => "invalid_bond",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::TruncationTooSmall { .. } => "truncation_too_small",
            Error::ExtentMismatch { .. } => "extent_mismatch",
            Error::GapClosed { .. } => "gap_closed",
            Error::AmbiguousPlaquette { .. } => "ambiguous_plaquette",
            Error::NotConverged { .. } => "not_converged",
            Error::Json(_) => "malformed_json",
        }
    }
}
