use thiserror::Error;

/// Errors raised by the batched eigensolver and its helpers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix {batch_index} is not symmetric (max asymmetry {max_asymmetry:e})")]
    NonSymmetric {
        batch_index: usize,
        max_asymmetry: f64,
    },

    #[error("matrix {batch_index} has a non-finite entry at {position:?}")]
    NonFinite {
        batch_index: usize,
        position: (usize, usize),
    },

    #[error("bad magic bytes {found:?}, expected \"BED1\"")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported BED1 version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated payload: expected {expected} reals, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("WY block size {block} exceeds the {max} available reflectors")]
    BlockTooLarge { block: usize, max: usize },

    #[error(
        "QR iteration did not converge for matrices {batch_indices:?} \
         (largest trailing off-diagonal {residual_offdiag_max:e} relative to the matrix norm)"
    )]
    NoConvergence {
        batch_indices: Vec<usize>,
        residual_offdiag_max: f64,
    },

    #[error("matrix {batch_index} has a non-positive eigenvalue {min_eigenvalue:e}")]
    NonPositiveSpectrum {
        batch_index: usize,
        min_eigenvalue: f64,
    },

    #[error("eigenvectors were not computed")]
    MissingEigenvectors,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
