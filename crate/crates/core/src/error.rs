use alloc::string::String;

/// Errors raised by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("letter {letter} is outside the alphabet 1..={alphabet}")]
    LetterOutOfRange { letter: usize, alphabet: usize },

    #[error("alphabet mismatch: expected {expected}, found {found}")]
    AlphabetMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is singular to working precision (condition number {condition:e})")]
    Singular { condition: f64 },

    #[error("spectral precondition failed: theta = {theta} is not below 1")]
    InconclusiveTail { theta: f64 },

    #[error("Gram matrix over S_{n} is singular at N = {dim} (need N >= n)")]
    GramSingular { n: usize, dim: usize },

    #[error("multiplicity {n} exceeds the supported maximum {max}")]
    UnsupportedMultiplicity { n: usize, max: usize },

    #[error("index {index} is outside 1..={dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid product structure: {0}")]
    Structure(String),
}

pub type Result<T> = core::result::Result<T, Error>;
