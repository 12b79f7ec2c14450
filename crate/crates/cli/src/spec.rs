use std::fmt;
use std::str::FromStr;

use crate::error::CliError;

/// What a solve computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Values,
    Full,
}

impl Mode {
    pub fn computes_vectors(self) -> bool {
        self == Mode::Full
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Values => "values",
            Mode::Full => "full",
        })
    }
}

impl FromStr for Mode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "values" => Ok(Mode::Values),
            "full" => Ok(Mode::Full),
            other => Err(CliError::Usage(format!("unknown mode `{other}` (expected values or full)"))),
        }
    }
}

/// The grid a verify or bench run covers.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub dims: Vec<usize>,
    pub batches: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Generated spectra are log-uniform over this many decades.
    pub condition_decades: f64,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            dims: vec![4, 8, 16, 24, 32],
            batches: vec![1, 64, 512],
            reps: 5,
            seed: 42,
            mode: Mode::Full,
            condition_decades: 3.0,
        }
    }
}

impl BenchSpec {
    pub fn check(&self) -> Result<(), CliError> {
        if self.dims.is_empty() || self.batches.is_empty() {
            return Err(CliError::Usage("dims and batches must be non-empty".into()));
        }
        if let Some(d) = self.dims.iter().find(|&&d| d < 2) {
            return Err(CliError::Usage(format!("dims must be at least 2, got {d}")));
        }
        if self.batches.contains(&0) {
            return Err(CliError::Usage("batch sizes must be positive".into()));
        }
        if self.reps == 0 {
            return Err(CliError::Usage("reps must be at least 1".into()));
        }
        if !(self.condition_decades >= 0.0 && self.condition_decades.is_finite()) {
            return Err(CliError::Usage(format!(
                "condition decades must be finite and nonnegative, got {}",
                self.condition_decades
            )));
        }
        Ok(())
    }

    /// Seed of the batch generated for one grid cell and repetition.
    pub fn cell_seed(&self, dim: usize, batch: usize, rep: usize) -> u64 {
        let cell = ((dim as u64) << 40) ^ ((batch as u64) << 16) ^ rep as u64;
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(cell)
    }
}

/// Parses `4,8,16`, `4..32` or `4..32:4` (ranges inclusive) into sizes.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = |what: &str| CliError::Usage(format!("invalid size list `{s}`: {what}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, rest)) = part.split_once("..") {
            let (hi, step) = match rest.split_once(':') {
                Some((hi, step)) => (hi, step),
                None => (rest, "1"),
            };
            let lo: usize = lo.trim().parse().map_err(|_| bad("range start"))?;
            let hi: usize = hi.trim().parse().map_err(|_| bad("range end"))?;
            let step: usize = step.trim().parse().map_err(|_| bad("range step"))?;
            if step == 0 || hi < lo {
                return Err(bad("empty range"));
            }
            out.extend((lo..=hi).step_by(step));
        } else {
            out.push(part.parse().map_err(|_| bad(part))?);
        }
    }
    if out.is_empty() {
        return Err(bad("no sizes"));
    }
    Ok(out)
}
