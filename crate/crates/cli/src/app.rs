//! Command-line surface of `bed`.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use batched_eig::SolverConfig;
use clap::{Args, Parser, Subcommand};

use crate::bench::{run_bench, self_check_summary, to_csv};
use crate::error::CliError;
use crate::files::{diagnostics_line, gen_file, solve_file};
use crate::spec::{parse_sizes, BenchSpec};
use crate::verify::{run_verify, VerifyOptions, VerifyReport};

#[derive(Debug, Parser)]
#[command(name = "bed", version, about = "Batched symmetric eigendecomposition tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check solves against the Jacobi oracle and the decomposition invariants.
    Verify(GridArgs),
    /// Time the solver over a grid and print CSV.
    Bench(GridArgs),
    /// Solve a BED1 batch file.
    Solve(SolveArgs),
    /// Write a random SPD batch as a BED1 file.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Matrix dimensions: `4,8,16`, `4..32` or `4..32:4`.
    #[arg(long, default_value = "4,8,16,24,32")]
    pub dims: String,
    /// Batch sizes, same syntax as `--dims`.
    #[arg(long, default_value = "1,64,512")]
    pub batches: String,
    /// Repetitions per cell.
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// `values` or `full`. Verify always computes vectors.
    #[arg(long, default_value = "full")]
    pub mode: String,
    /// Verify: eigenvalue tolerance relative to the largest eigenvalue.
    /// Bench: deflation tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also write the table as CSV to this path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Spread of generated spectra in decades.
    #[arg(long, default_value_t = 3.0)]
    pub decades: f64,
    #[arg(long, hide = true)]
    pub corrupt: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Input BED1 symmetric batch.
    pub input: PathBuf,
    /// Output prefix; writes `<out>.values.bed` and `<out>.vectors.bed`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub no_vectors: bool,
    /// Deflation tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Matrix dimension.
    #[arg(long, default_value = "8")]
    pub dims: String,
    /// Number of matrices.
    #[arg(long, default_value = "16")]
    pub batches: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 3.0)]
    pub decades: f64,
}

impl GridArgs {
    pub fn spec(&self) -> Result<BenchSpec, CliError> {
        let spec = BenchSpec {
            dims: parse_sizes(&self.dims)?,
            batches: parse_sizes(&self.batches)?,
            reps: self.reps,
            seed: self.seed,
            mode: self.mode.parse()?,
            condition_decades: self.decades,
        };
        spec.check()?;
        Ok(spec)
    }
}

fn single(list: &str, what: &str) -> Result<usize, CliError> {
    match parse_sizes(list)?.as_slice() {
        [x] => Ok(*x),
        _ => Err(CliError::Usage(format!("gen takes a single {what}, got `{list}`"))),
    }
}

fn solver_with_tol(tol: Option<f64>) -> SolverConfig {
    let mut cfg = SolverConfig::default();
    if let Some(t) = tol {
        cfg.deflation_tol = t;
    }
    cfg
}

/// Caps the rayon pool from `BED_THREADS`; unset or `0` keeps the default.
pub fn configure_threads(value: Option<&str>) -> Result<(), CliError> {
    let Some(raw) = value else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("BED_THREADS must be a nonnegative integer, got `{raw}`")))?;
    if n > 0 {
        // A pool that already exists keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn verify_csv(report: &VerifyReport) -> String {
    let mut out = String::from("dim,batch,matrices,max_eig_err,max_recon,max_orth,max_batch_vs_single,median_r,mean_k,failures\n");
    for c in &report.cells {
        out.push_str(&format!(
            "{},{},{},{:.3e},{:.3e},{:.3e},{:.3e},{:.4},{:.4},{}\n",
            c.dim,
            c.batch,
            c.matrices,
            c.max_eig_err,
            c.max_reconstruction,
            c.max_orthogonality,
            c.max_batch_vs_single,
            c.median_r(),
            c.mean_k(),
            c.failures.len()
        ));
    }
    out
}

fn write_text(path: &PathBuf, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn cmd_verify(args: &GridArgs, out: &mut impl Write) -> Result<(), CliError> {
    let spec = args.spec()?;
    let mut opts = VerifyOptions::new(spec);
    if let Some(t) = args.tol {
        if !(t > 0.0) {
            return Err(CliError::Usage(format!("--tol must be positive, got {t}")));
        }
        opts.tolerances.eigenvalue = t;
    }
    opts.corrupt = args.corrupt;
    let report = run_verify(&opts);
    write!(out, "{}", report.table())?;
    if let Some(path) = &args.csv {
        write_text(path, &verify_csv(&report))?;
    }
    let failures = report.failures();
    if failures.is_empty() {
        writeln!(out, "all cells pass")?;
        return Ok(());
    }
    writeln!(out, "failing (dim, batch, matrix):")?;
    for (dim, batch, index, reason) in &failures {
        writeln!(out, "  ({dim}, {batch}, {index}): {reason}")?;
    }
    Err(CliError::Verification(format!("{} failing matrices", failures.len())))
}

pub fn cmd_bench(args: &GridArgs, out: &mut impl Write, err: &mut impl Write) -> Result<(), CliError> {
    let spec = args.spec()?;
    let rows = run_bench(&spec, &solver_with_tol(args.tol))?;
    let csv = to_csv(&rows);
    write!(out, "{csv}")?;
    if let Some(path) = &args.csv {
        write_text(path, &csv)?;
    }
    let (summary, ok) = self_check_summary(&rows);
    write!(err, "{summary}")?;
    if ok {
        Ok(())
    } else {
        Err(CliError::Verification("scaling self-check failed".into()))
    }
}

pub fn cmd_solve(args: &SolveArgs, err: &mut impl Write) -> Result<(), CliError> {
    let mut cfg = solver_with_tol(args.tol);
    cfg.compute_vectors = !args.no_vectors;
    let d = solve_file(&args.input, &args.out, &cfg)?;
    writeln!(err, "{}", diagnostics_line(&d))?;
    Ok(())
}

pub fn cmd_gen(args: &GenArgs) -> Result<(), CliError> {
    let dim = single(&args.dims, "dimension")?;
    let batch = single(&args.batches, "batch size")?;
    if dim == 0 || batch == 0 {
        return Err(CliError::Usage("dimension and batch size must be positive".into()));
    }
    if !(args.decades >= 0.0 && args.decades.is_finite()) {
        return Err(CliError::Usage(format!("--decades must be finite and nonnegative, got {}", args.decades)));
    }
    gen_file(&args.out, batch, dim, args.seed, args.decades)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    match &cli.command {
        Command::Verify(a) => cmd_verify(a, &mut stdout.lock()),
        Command::Bench(a) => cmd_bench(a, &mut stdout.lock(), &mut stderr.lock()),
        Command::Solve(a) => cmd_solve(a, &mut stderr.lock()),
        Command::Gen(a) => cmd_gen(a),
    }
}
