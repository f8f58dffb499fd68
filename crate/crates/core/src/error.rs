use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("size {size} is not divisible by {factor}")]
    IndivisibleSize { size: usize, factor: usize },
    #[error("spectrum is not Hermitian (imaginary residue {residue:e})")]
    NonHermitianSpectrum { residue: f64 },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("displacement needs a margin of {needed} px but only {available} px are available")]
    MarginExceeded { needed: usize, available: usize },
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
