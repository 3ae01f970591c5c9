//! Monte Carlo harness for the majority estimator.
//!
//! Every replicate draws from its own ChaCha8 stream, seeded from
//! `(master seed, grid index, replicate index)` (see [`seed`]). Replicate
//! outputs are collected in index order before aggregation, so results are
//! identical for any worker count.

mod diagnostics;
mod rmaj;
pub mod seed;
pub mod stats;
mod sweep;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::walk::{BoundaryMode, StoppingConfig};

pub use diagnostics::{
    escape_event_frequency, event_a_frequency, run_diagnostics, supermartingale_diagnostic,
    DiagnosticsRecord, EscapeRecord, EventARecord, MartingaleBin, MartingaleReport,
    MartingaleStatus,
};
pub use rmaj::{estimate_rmaj, estimate_rmaj_point, RmajEstimate};
pub use sweep::{
    diagnostics_csv, q_grid, sweep, sweep_csv, write_diagnostics_csv, write_sweep_csv, SweepRow,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub q_grid: Vec<f64>,
    pub n: u64,
    /// Budget for R_maj estimation.
    pub replicates: u64,
    /// Budget for trajectory-based diagnostics.
    pub diagnostic_replicates: u64,
    pub seed: u64,
    pub gamma: f64,
    /// `None` selects [`StoppingConfig::default_c_tilde`].
    pub c_tilde: Option<f64>,
    pub boundary: BoundaryMode,
    /// Number of log-spaced time bins for the supermartingale check.
    pub bins: usize,
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(params: ModelParams, q_grid: Vec<f64>, n: u64, replicates: u64, seed: u64) -> Self {
        ExperimentConfig {
            params,
            q_grid,
            n,
            replicates,
            diagnostic_replicates: replicates,
            seed,
            gamma: StoppingConfig::DEFAULT_GAMMA,
            c_tilde: None,
            boundary: BoundaryMode::Limit,
            bins: 20,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyTree);
        }
        if self.replicates == 0 || self.diagnostic_replicates == 0 {
            return Err(Error::InvalidArgument(
                "replicates must be at least 1".into(),
            ));
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        if self.bins == 0 {
            return Err(Error::InvalidArgument("bins must be at least 1".into()));
        }
        if let Some(q) = self.q_grid.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(Error::InvalidFlipProbability(*q));
        }
        Ok(())
    }

    pub fn effective_c_tilde(&self) -> f64 {
        self.c_tilde
            .unwrap_or_else(|| StoppingConfig::default_c_tilde(&self.params))
    }
}

/// Runs `f(0..count)` on `workers` threads and returns the results in index order.
pub(crate) fn run_indexed<T, F>(workers: usize, count: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    if workers <= 1 {
        return Ok((0..count).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(f).collect()))
}
