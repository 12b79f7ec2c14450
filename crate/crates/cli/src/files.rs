//! File-level commands: `bed solve` and `bed gen`.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use batched_eig::format::{read_batch, write_batch, write_matrix};
use batched_eig::{batched_eig, gen_spd, BatchedMatrix, Diagnostics, SolverConfig};

use crate::error::CliError;

/// Paths written by a solve with output prefix `out`.
pub fn output_paths(out: &Path) -> (PathBuf, PathBuf) {
    let with = |suffix: &str| {
        let mut s = out.as_os_str().to_owned();
        s.push(suffix);
        PathBuf::from(s)
    };
    (with(".values.bed"), with(".vectors.bed"))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Solves a BED1 symmetric batch. Eigenvalues go to `<out>.values.bed` as a
/// `batch × dim × 1` batch and eigenvectors, unless disabled, to
/// `<out>.vectors.bed`.
pub fn solve_file(input: &Path, out: &Path, cfg: &SolverConfig) -> Result<Diagnostics, CliError> {
    let a = read_batch(open(input)?)?;
    let e = batched_eig(&a, cfg)?;
    let (values_path, vectors_path) = output_paths(out);
    let values = BatchedMatrix::new(e.batch, e.dim, 1, e.eigenvalues)?;
    write_matrix(&values, create(&values_path)?)?;
    if let Some(v) = &e.eigenvectors {
        write_matrix(v, create(&vectors_path)?)?;
    }
    Ok(e.diagnostics)
}

/// Writes a seeded random SPD batch.
pub fn gen_file(out: &Path, batch: usize, dim: usize, seed: u64, decades: f64) -> Result<(), CliError> {
    write_batch(&gen_spd(batch, dim, seed, decades), create(out)?)?;
    Ok(())
}

pub fn diagnostics_line(d: &Diagnostics) -> String {
    format!(
        "k = {}  r = {:.3}  reductions = {}  rotations = {}",
        d.double_steps, d.mean_reductions, d.reductions, d.rotation_count
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes_are_appended() {
        let (v, w) = output_paths(Path::new("/tmp/run.1"));
        assert_eq!(v, PathBuf::from("/tmp/run.1.values.bed"));
        assert_eq!(w, PathBuf::from("/tmp/run.1.vectors.bed"));
    }
}
