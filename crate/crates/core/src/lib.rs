//! Batched eigendecomposition of small and medium symmetric matrices.
//!
//! The pipeline has two stages, both expressed as uniform per-matrix work
//! over the batch:
//!
//! 1. [`householder`]: `n − 2` Householder reflections reduce each matrix to
//!    tridiagonal form `T = PᵀAP`, optionally accumulating `P` in WY blocks.
//! 2. [`qr`]: explicit QR sweeps built from Givens rotations, shifted by both
//!    eigenvalues of the trailing `2 × 2` block, shrink the active block as
//!    the batch converges from the bottom up.
//!
//! [`solver::batched_eig`] composes the two and returns eigenvalues and the
//! eigenvectors `V = P·Q_0…Q_k`. The [`oracle`] module holds an independent
//! Jacobi solver used by the verification tooling.
//!
//! ```
//! use batched_eig::{batched_eig, BatchedSymmetric, SolverConfig};
//!
//! let a = BatchedSymmetric::new(1, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
//! let e = batched_eig(&a, &SolverConfig::default()).unwrap();
//! assert!((e.values(0)[0] - 3.0).abs() < 1e-14);
//! ```

mod batch;
pub mod config;
pub mod dense;
pub mod error;
pub mod format;
pub mod householder;
pub mod oracle;
pub mod qr;
pub mod random;
pub mod solver;
pub mod tensor;

pub use config::{SolverConfig, SortOrder, WyBlock};
pub use error::{Error, Result};
pub use householder::{tridiagonalize, ReflectorSet, TridiagonalBatch, WyFactors};
pub use qr::{diagonalize, Diagnostics, GivensCoeffs, ShiftPair, SweepState};
pub use random::gen_spd;
pub use solver::{batched_eig, matrix_power, zca_whiten, EigenResult};
pub use tensor::{validate, BatchedMatrix, BatchedSymmetric};
