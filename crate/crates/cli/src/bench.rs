//! Timing grid behind `bed bench`.

use std::fmt::Write as _;
use std::time::Instant;

use batched_eig::oracle::{eigenvalue_error, jacobi_eig, DEFAULT_JACOBI_TOL};
use batched_eig::{batched_eig, gen_spd, Diagnostics, SolverConfig};
use rayon::prelude::*;

use crate::error::CliError;
use crate::spec::{BenchSpec, Mode};
use crate::verify::median;

pub const CSV_HEADER: &str = "dim,batch,mode,median_wall_s,per_matrix_s,mean_r,mean_k,rotations,max_eig_err";

/// Dimensions of the scaling self-check.
pub const SLOPE_DIMS: [usize; 3] = [8, 16, 32];
/// Batch the scaling self-check prefers when the grid has it.
pub const SLOPE_BATCH: usize = 256;
/// Accepted log-log slope of per-matrix time against `n`.
pub const SLOPE_WINDOW: (f64, f64) = (2.0, 3.8);
/// Allowed rise of per-matrix time between adjacent batch sizes.
pub const AMORTIZATION_SLACK: f64 = 0.10;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub dim: usize,
    pub batch: usize,
    pub mode: Mode,
    pub median_wall_s: f64,
    pub per_matrix_s: f64,
    pub mean_r: f64,
    pub mean_k: f64,
    pub rotations: usize,
    pub max_eig_err: f64,
}

impl BenchRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{:.6e},{:.6e},{:.6},{:.6},{},{:.3e}",
            self.dim,
            self.batch,
            self.mode,
            self.median_wall_s,
            self.per_matrix_s,
            self.mean_r,
            self.mean_k,
            self.rotations,
            self.max_eig_err
        )
    }
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv());
        out.push('\n');
    }
    out
}

/// Largest eigenvalue error of a solve against the Jacobi oracle, scaled by
/// the largest `|λ|` of each matrix.
fn max_scaled_error(a: &batched_eig::BatchedSymmetric, values: &[f64]) -> Result<f64, CliError> {
    let n = a.dim();
    let errs: Vec<batched_eig::Result<f64>> = (0..a.batch())
        .into_par_iter()
        .map(|k| {
            let (reference, _) = jacobi_eig(a.matrix(k), n, DEFAULT_JACOBI_TOL)?;
            let lambda_max = reference.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            Ok(eigenvalue_error(&values[k * n..(k + 1) * n], &reference) / lambda_max.max(f64::MIN_POSITIVE))
        })
        .collect();
    let mut worst = 0.0f64;
    for e in errs {
        worst = worst.max(e?);
    }
    Ok(worst)
}

/// Times one cell. The batch is generated once from the cell seed; one
/// warm-up solve is discarded and the median of `spec.reps` timed solves is
/// reported. Counters and the oracle error come from the same batch, so they
/// do not depend on `reps`.
pub fn bench_cell(spec: &BenchSpec, dim: usize, batch: usize, solver: &SolverConfig) -> Result<BenchRow, CliError> {
    let cfg = SolverConfig {
        compute_vectors: spec.mode.computes_vectors(),
        ..solver.clone()
    };
    let a = gen_spd(batch, dim, spec.cell_seed(dim, batch, 0), spec.condition_decades);
    let warm = batched_eig(&a, &cfg)?;
    let mut times = Vec::with_capacity(spec.reps);
    let mut diagnostics: Diagnostics = warm.diagnostics;
    for _ in 0..spec.reps {
        let start = Instant::now();
        let e = batched_eig(&a, &cfg)?;
        times.push(start.elapsed().as_secs_f64());
        diagnostics = e.diagnostics;
    }
    let median_wall_s = median(times).max(f64::MIN_POSITIVE);
    Ok(BenchRow {
        dim,
        batch,
        mode: spec.mode,
        median_wall_s,
        per_matrix_s: median_wall_s / batch as f64,
        mean_r: diagnostics.mean_reductions,
        mean_k: diagnostics.double_steps as f64,
        rotations: diagnostics.rotation_count,
        max_eig_err: max_scaled_error(&a, &warm.eigenvalues)?,
    })
}

/// Measures every cell of the grid, one at a time.
pub fn run_bench(spec: &BenchSpec, solver: &SolverConfig) -> Result<Vec<BenchRow>, CliError> {
    spec.check()?;
    let mut rows = Vec::new();
    for &dim in &spec.dims {
        for &batch in &spec.batches {
            rows.push(bench_cell(spec, dim, batch, solver)?);
        }
    }
    Ok(rows)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeCheck {
    pub batch: usize,
    pub slope: f64,
    pub pass: bool,
}

/// Values-mode slope over [`SLOPE_DIMS`], at [`SLOPE_BATCH`] if measured and
/// otherwise at the largest batch that has all three dimensions. `None` when
/// the rows cannot support the check.
pub fn slope_check(rows: &[BenchRow]) -> Option<SlopeCheck> {
    let per_matrix = |dim: usize, batch: usize| {
        rows.iter()
            .find(|r| r.mode == Mode::Values && r.dim == dim && r.batch == batch)
            .map(|r| r.per_matrix_s)
    };
    let mut candidates: Vec<usize> = rows
        .iter()
        .map(|r| r.batch)
        .filter(|&b| SLOPE_DIMS.iter().all(|&d| per_matrix(d, b).is_some()))
        .collect();
    candidates.sort_unstable();
    candidates.dedup();
    let batch = if candidates.contains(&SLOPE_BATCH) {
        SLOPE_BATCH
    } else {
        *candidates.last()?
    };
    let points: Vec<(f64, f64)> = SLOPE_DIMS
        .iter()
        .map(|&d| (d as f64, per_matrix(d, batch).unwrap_or(f64::NAN)))
        .collect();
    let slope = log_log_slope(&points);
    Some(SlopeCheck {
        batch,
        slope,
        pass: (SLOPE_WINDOW.0..=SLOPE_WINDOW.1).contains(&slope),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmortizationCheck {
    /// `(batch, per_matrix_s)` in increasing batch order.
    pub points: Vec<(usize, f64)>,
    /// Last point no slower than the first.
    pub endpoints: bool,
    /// No adjacent step rises by more than [`AMORTIZATION_SLACK`].
    pub envelope: bool,
}

impl AmortizationCheck {
    pub fn pass(&self) -> bool {
        self.endpoints && self.envelope
    }
}

/// Per-matrix time against batch size at one dimension. `None` with fewer
/// than two batch sizes.
pub fn amortization_check(rows: &[BenchRow], dim: usize, mode: Mode) -> Option<AmortizationCheck> {
    let mut points: Vec<(usize, f64)> = rows
        .iter()
        .filter(|r| r.dim == dim && r.mode == mode)
        .map(|r| (r.batch, r.per_matrix_s))
        .collect();
    points.sort_by_key(|p| p.0);
    if points.len() < 2 {
        return None;
    }
    let endpoints = points.last()?.1 <= points[0].1;
    let envelope = points.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + AMORTIZATION_SLACK));
    Some(AmortizationCheck {
        points,
        endpoints,
        envelope,
    })
}

/// Human-readable summary of the self-checks for standard error.
pub fn self_check_summary(rows: &[BenchRow]) -> (String, bool) {
    let mut out = String::new();
    let mut ok = true;
    if let Some(s) = slope_check(rows) {
        ok &= s.pass;
        let _ = writeln!(
            out,
            "slope of values-mode per-matrix time over n = 8, 16, 32 at batch {}: {:.2} (window [{}, {}]) {}",
            s.batch,
            s.slope,
            SLOPE_WINDOW.0,
            SLOPE_WINDOW.1,
            if s.pass { "ok" } else { "FAIL" }
        );
    }
    for &dim in dims_of(rows).iter() {
        for mode in [Mode::Values, Mode::Full] {
            if let Some(a) = amortization_check(rows, dim, mode) {
                let _ = writeln!(
                    out,
                    "per-matrix time vs batch at n = {dim}, {mode}: endpoints {}, envelope {}",
                    if a.endpoints { "ok" } else { "rising" },
                    if a.envelope { "ok" } else { "rising" },
                );
            }
        }
    }
    (out, ok)
}

fn dims_of(rows: &[BenchRow]) -> Vec<usize> {
    let mut dims: Vec<usize> = rows.iter().map(|r| r.dim).collect();
    dims.sort_unstable();
    dims.dedup();
    dims
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(dim: usize, batch: usize, per_matrix_s: f64) -> BenchRow {
        BenchRow {
            dim,
            batch,
            mode: Mode::Values,
            median_wall_s: per_matrix_s * batch as f64,
            per_matrix_s,
            mean_r: 0.0,
            mean_k: 0.0,
            rotations: 0,
            max_eig_err: 0.0,
        }
    }

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(f64, f64)> = [8.0, 16.0, 32.0].iter().map(|&n: &f64| (n, 3.0 * n.powi(3))).collect();
        assert!((log_log_slope(&pts) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn slope_check_prefers_batch_256() {
        let mut rows: Vec<BenchRow> = SLOPE_DIMS.iter().map(|&d| row(d, 256, (d as f64).powi(3))).collect();
        rows.extend(SLOPE_DIMS.iter().map(|&d| row(d, 512, d as f64)));
        let s = slope_check(&rows).unwrap();
        assert_eq!(s.batch, 256);
        assert!(s.pass);
        assert!(slope_check(&rows[..2]).is_none());
    }

    #[test]
    fn amortization_allows_small_noise() {
        let rows = vec![row(4, 1, 1.0), row(4, 4, 0.5), row(4, 16, 0.54), row(4, 64, 0.3)];
        let a = amortization_check(&rows, 4, Mode::Values).unwrap();
        assert!(a.pass());
        let rows = vec![row(4, 1, 1.0), row(4, 4, 0.5), row(4, 16, 0.9)];
        assert!(!amortization_check(&rows, 4, Mode::Values).unwrap().envelope);
    }

    #[test]
    fn counters_do_not_depend_on_reps() {
        let few = BenchSpec {
            reps: 1,
            mode: Mode::Values,
            ..BenchSpec::default()
        };
        let many = BenchSpec { reps: 4, ..few.clone() };
        let cfg = SolverConfig::default();
        let a = bench_cell(&few, 8, 4, &cfg).unwrap();
        let b = bench_cell(&many, 8, 4, &cfg).unwrap();
        assert_eq!((a.mean_r, a.mean_k, a.rotations), (b.mean_r, b.mean_k, b.rotations));
        assert_eq!(a.max_eig_err, b.max_eig_err);
        assert!(a.max_eig_err <= 1e-8);
        assert!(a.median_wall_s > 0.0 && a.mean_r <= 7.0);
    }

    #[test]
    fn csv_layout() {
        let csv = to_csv(&[row(4, 2, 1.5)]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next().unwrap().split(',').count(), 9);
    }
}
