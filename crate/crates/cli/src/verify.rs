//! The invariant suite behind `bed verify`.

use std::fmt::Write as _;

use batched_eig::dense::{frobenius, max_abs_diff, orthogonality_defect, reconstruct};
use batched_eig::oracle::{eigenvalue_error, jacobi_eig, DEFAULT_JACOBI_TOL};
use batched_eig::{batched_eig, gen_spd, BatchedSymmetric, EigenResult, Error, SolverConfig};
use rayon::prelude::*;

use crate::spec::BenchSpec;

/// Per-matrix pass thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyTolerances {
    /// Eigenvalue error divided by the largest `|λ|`.
    pub eigenvalue: f64,
    /// `‖A − VΛVᵀ‖_F / ‖A‖_F`.
    pub reconstruction: f64,
    /// `‖VᵀV − I‖_F / n`.
    pub orthogonality: f64,
    /// Absolute eigenvalue difference between batched and single solves.
    pub batch_vs_single: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self {
            eigenvalue: 1e-8,
            reconstruction: 1e-10,
            orthogonality: 1e-10,
            batch_vs_single: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub spec: BenchSpec,
    pub tolerances: VerifyTolerances,
    pub solver: SolverConfig,
    /// Flips the sign of one eigenvector entry after solving, to show the
    /// harness notices.
    pub corrupt: bool,
}

impl VerifyOptions {
    pub fn new(spec: BenchSpec) -> Self {
        Self {
            spec,
            tolerances: VerifyTolerances::default(),
            solver: SolverConfig::default(),
            corrupt: false,
        }
    }
}

/// Iteration counters of one batched solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub mean_reductions: f64,
    pub double_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    /// Position of the matrix across all repetitions of the cell.
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub dim: usize,
    pub batch: usize,
    pub matrices: usize,
    pub max_eig_err: f64,
    pub max_reconstruction: f64,
    pub max_orthogonality: f64,
    pub max_batch_vs_single: f64,
    pub solves: Vec<SolveStats>,
    pub failures: Vec<Failure>,
    /// Solves that ended in `NoConvergence`.
    pub no_convergence: usize,
    /// Solves that needed more than `2·dim` double steps.
    pub over_budget: usize,
}

impl CellReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn median_r(&self) -> f64 {
        median(self.solves.iter().map(|s| s.mean_reductions).collect())
    }

    pub fn mean_k(&self) -> f64 {
        if self.solves.is_empty() {
            return 0.0;
        }
        self.solves.iter().map(|s| s.double_steps as f64).sum::<f64>() / self.solves.len() as f64
    }
}

pub(crate) fn median(mut v: Vec<f64>) -> f64 {
    quantile(&mut v, 0.5)
}

/// Linear-interpolated quantile; NaN on empty input.
pub(crate) fn quantile(v: &mut [f64], q: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

struct MatrixCheck {
    eig_err: f64,
    reconstruction: f64,
    orthogonality: f64,
    batch_vs_single: f64,
}

fn check_matrix(a: &BatchedSymmetric, k: usize, e: &EigenResult, solver: &SolverConfig) -> Result<MatrixCheck, Error> {
    let n = a.dim();
    let m = a.matrix(k);
    let (ref_vals, _) = jacobi_eig(m, n, DEFAULT_JACOBI_TOL)?;
    let lambda_max = ref_vals.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let eig_err = eigenvalue_error(e.values(k), &ref_vals) / lambda_max.max(f64::MIN_POSITIVE);
    let v = e.vectors(k).ok_or(Error::MissingEigenvectors)?;
    let rec = reconstruct(v, e.values(k), n);
    let diff: Vec<f64> = rec.iter().zip(m).map(|(x, y)| x - y).collect();
    let norm = frobenius(m);
    let reconstruction = if norm > 0.0 {
        frobenius(&diff) / norm
    } else {
        frobenius(&diff)
    };
    let orthogonality = orthogonality_defect(v, n) / n as f64;
    let single_cfg = SolverConfig {
        compute_vectors: false,
        ..solver.clone()
    };
    let single = batched_eig(&a.slice(k..k + 1), &single_cfg)?;
    let batch_vs_single = max_abs_diff(single.values(0), e.values(k));
    Ok(MatrixCheck {
        eig_err,
        reconstruction,
        orthogonality,
        batch_vs_single,
    })
}

/// Runs `spec.reps` batches of one `(dim, batch)` cell through every check.
pub fn verify_cell(opts: &VerifyOptions, dim: usize, batch: usize) -> CellReport {
    let tol = opts.tolerances;
    let solver = SolverConfig {
        compute_vectors: true,
        ..opts.solver.clone()
    };
    let mut report = CellReport {
        dim,
        batch,
        matrices: 0,
        max_eig_err: 0.0,
        max_reconstruction: 0.0,
        max_orthogonality: 0.0,
        max_batch_vs_single: 0.0,
        solves: Vec::new(),
        failures: Vec::new(),
        no_convergence: 0,
        over_budget: 0,
    };
    for rep in 0..opts.spec.reps {
        let a = gen_spd(batch, dim, opts.spec.cell_seed(dim, batch, rep), opts.spec.condition_decades);
        let base = rep * batch;
        report.matrices += batch;
        let mut e = match batched_eig(&a, &solver) {
            Ok(e) => e,
            Err(err) => {
                if matches!(err, Error::NoConvergence { .. }) {
                    report.no_convergence += 1;
                }
                report.failures.extend((0..batch).map(|k| Failure {
                    index: base + k,
                    reason: err.to_string(),
                }));
                continue;
            }
        };
        if opts.corrupt && rep == 0 {
            if let Some(v) = e.eigenvectors.as_mut() {
                v.matrix_mut(0)[0] *= -1.0;
            }
        }
        let d = e.diagnostics;
        report.solves.push(SolveStats {
            mean_reductions: d.mean_reductions,
            double_steps: d.double_steps,
        });
        if d.double_steps > 2 * dim {
            report.over_budget += 1;
        }
        let checks: Vec<Result<MatrixCheck, Error>> =
            (0..batch).into_par_iter().map(|k| check_matrix(&a, k, &e, &solver)).collect();
        for (k, check) in checks.into_iter().enumerate() {
            let c = match check {
                Ok(c) => c,
                Err(err) => {
                    report.failures.push(Failure {
                        index: base + k,
                        reason: err.to_string(),
                    });
                    continue;
                }
            };
            report.max_eig_err = report.max_eig_err.max(c.eig_err);
            report.max_reconstruction = report.max_reconstruction.max(c.reconstruction);
            report.max_orthogonality = report.max_orthogonality.max(c.orthogonality);
            report.max_batch_vs_single = report.max_batch_vs_single.max(c.batch_vs_single);
            let mut reasons = Vec::new();
            if !(c.eig_err <= tol.eigenvalue) {
                reasons.push(format!("eigenvalue error {:.2e}", c.eig_err));
            }
            if !(c.reconstruction <= tol.reconstruction) {
                reasons.push(format!("reconstruction {:.2e}", c.reconstruction));
            }
            if !(c.orthogonality <= tol.orthogonality) {
                reasons.push(format!("orthogonality {:.2e}", c.orthogonality));
            }
            if !(c.batch_vs_single <= tol.batch_vs_single) {
                reasons.push(format!("batch vs single {:.2e}", c.batch_vs_single));
            }
            if !reasons.is_empty() {
                report.failures.push(Failure {
                    index: base + k,
                    reason: reasons.join(", "),
                });
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub cells: Vec<CellReport>,
}

/// Spread of the per-solve mean reduction count `r` at one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RDistribution {
    pub dim: usize,
    pub solves: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(CellReport::passed)
    }

    /// `r` pooled over every solve of each dimension, in grid order.
    pub fn r_distribution(&self) -> Vec<RDistribution> {
        let mut dims: Vec<usize> = Vec::new();
        for c in &self.cells {
            if !dims.contains(&c.dim) {
                dims.push(c.dim);
            }
        }
        dims.into_iter()
            .map(|dim| {
                let mut r: Vec<f64> = self
                    .cells
                    .iter()
                    .filter(|c| c.dim == dim)
                    .flat_map(|c| c.solves.iter().map(|s| s.mean_reductions))
                    .collect();
                RDistribution {
                    dim,
                    solves: r.len(),
                    min: quantile(&mut r, 0.0),
                    q25: quantile(&mut r, 0.25),
                    median: quantile(&mut r, 0.5),
                    q75: quantile(&mut r, 0.75),
                    max: quantile(&mut r, 1.0),
                }
            })
            .collect()
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>4} {:>6} {:>8} {:>11} {:>10} {:>10} {:>10} {:>8} {:>7} {:>6}",
            "dim", "batch", "matrices", "max_eig_err", "max_recon", "max_orth", "b_vs_1", "median_r", "mean_k", "status"
        );
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{:>4} {:>6} {:>8} {:>11.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>8.2} {:>7.2} {:>6}",
                c.dim,
                c.batch,
                c.matrices,
                c.max_eig_err,
                c.max_reconstruction,
                c.max_orthogonality,
                c.max_batch_vs_single,
                c.median_r(),
                c.mean_k(),
                if c.passed() { "ok" } else { "FAIL" }
            );
        }
        out.push('\n');
        for d in self.r_distribution() {
            let _ = writeln!(
                out,
                "r at n={:<3} over {:>5} solves: min {:.2}  q25 {:.2}  median {:.2}  q75 {:.2}  max {:.2}",
                d.dim, d.solves, d.min, d.q25, d.median, d.q75, d.max
            );
        }
        out
    }

    /// `(dim, batch, matrix index, reason)` for every failing matrix.
    pub fn failures(&self) -> Vec<(usize, usize, usize, &str)> {
        self.cells
            .iter()
            .flat_map(|c| c.failures.iter().map(move |f| (c.dim, c.batch, f.index, f.reason.as_str())))
            .collect()
    }
}

/// Verifies every cell of the grid. Cells run one after another; the work
/// inside a cell is spread over the rayon pool.
pub fn run_verify(opts: &VerifyOptions) -> VerifyReport {
    let mut cells = Vec::new();
    for &dim in &opts.spec.dims {
        for &batch in &opts.spec.batches {
            cells.push(verify_cell(opts, dim, batch));
        }
    }
    VerifyReport { cells }
}
