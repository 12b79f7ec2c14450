//! Verification, benchmarking and file front-end for `batched-eig`.

pub mod app;
pub mod bench;
pub mod error;
pub mod files;
pub mod spec;
pub mod verify;

pub use bench::{BenchRow, CSV_HEADER};
pub use error::CliError;
pub use spec::{parse_sizes, BenchSpec, Mode};
pub use verify::{run_verify, VerifyOptions, VerifyReport, VerifyTolerances};
