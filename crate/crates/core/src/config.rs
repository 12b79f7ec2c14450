use crate::error::{Error, Result};
use crate::tensor::DEFAULT_SYMMETRY_TOL;

/// Order of the eigenvalues (and matching eigenvector columns) in a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SortOrder {
    #[default]
    Descending,
    Ascending,
    /// Deflation order, as produced by the QR loop.
    None,
}

/// How the Householder transform is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WyBlock {
    /// Naive accumulation below dimension 16, blocks of 4 from there on.
    #[default]
    Auto,
    Disabled,
    Block(usize),
}

impl WyBlock {
    pub const AUTO_MIN_DIM: usize = 16;
    pub const AUTO_BLOCK: usize = 4;

    pub fn resolve(self, dim: usize) -> Option<usize> {
        match self {
            WyBlock::Auto if dim >= Self::AUTO_MIN_DIM => Some(Self::AUTO_BLOCK),
            WyBlock::Auto | WyBlock::Disabled => None,
            WyBlock::Block(m) => Some(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Shrink the active block once every matrix's trailing off-diagonal is
    /// below this fraction of its `‖T‖_F`. Loose settings such as `1e−5` are
    /// faster but leave residuals of that relative size in `VΛVᵀ`.
    pub deflation_tol: f64,
    /// Cap on double-shift steps; `None` means `2 · dim`.
    pub max_double_steps: Option<usize>,
    pub compute_vectors: bool,
    pub sort: SortOrder,
    pub wy_block: WyBlock,
    pub symmetry_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            deflation_tol: Self::DEFAULT_DEFLATION_TOL,
            max_double_steps: None,
            compute_vectors: true,
            sort: SortOrder::Descending,
            wy_block: WyBlock::Auto,
            symmetry_tol: DEFAULT_SYMMETRY_TOL,
        }
    }
}

impl SolverConfig {
    pub const DEFAULT_DEFLATION_TOL: f64 = 1e-13;

    pub fn values_only() -> Self {
        Self {
            compute_vectors: false,
            ..Self::default()
        }
    }

    pub fn max_double_steps_for(&self, dim: usize) -> usize {
        self.max_double_steps.unwrap_or(2 * dim).max(1)
    }

    /// Checks the invariants that depend on the problem dimension.
    pub fn check(&self, dim: usize) -> Result<()> {
        if !(self.deflation_tol >= 0.0) || !self.deflation_tol.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "deflation_tol must be finite and nonnegative, got {}",
                self.deflation_tol
            )));
        }
        if self.max_double_steps == Some(0) {
            return Err(Error::InvalidConfig("max_double_steps must be at least 1".into()));
        }
        if !(self.symmetry_tol >= 0.0) {
            return Err(Error::InvalidConfig("symmetry_tol must be nonnegative".into()));
        }
        if let WyBlock::Block(m) = self.wy_block {
            if m == 0 {
                return Err(Error::InvalidConfig("wy_block must be positive".into()));
            }
            if m > dim.saturating_sub(2) {
                return Err(Error::BlockTooLarge {
                    block: m,
                    max: dim.saturating_sub(2),
                });
            }
        }
        Ok(())
    }
}
