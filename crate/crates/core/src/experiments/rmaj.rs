use serde::{Deserialize, Serialize};

use super::seed::replicate_rng;
use super::stats::{bernoulli_stderr, wilson_interval, Z95};
use super::{run_indexed, ExperimentConfig};
use crate::broadcast::{majority_estimator, Color};
use crate::error::{check_q, Result};
use crate::params::ModelParams;
use crate::walk::{run_walk, WalkOptions};

/// Monte Carlo estimate of `R_maj(N, q)`.
///
/// Ties are resolved by a fair coin inside each replicate, so
/// `errors_observed` counts wrong decisions (including lost coin tosses) and
/// the estimate is a plain Bernoulli frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmajEstimate {
    pub q: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub replicates: u64,
    pub errors_observed: u64,
    pub ties: u64,
    /// Half the tie count: the expected coin-toss contribution.
    pub half_ties: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Copy)]
enum Outcome {
    Correct,
    Wrong,
    TieCorrect,
    TieWrong,
}

/// Estimates `R_maj(N, q)` at one grid point.
pub fn estimate_rmaj_point(
    params: &ModelParams,
    q: f64,
    grid_index: u64,
    n: u64,
    replicates: u64,
    seed: u64,
    workers: usize,
) -> Result<RmajEstimate> {
    check_q(q)?;
    let opts = WalkOptions::default();
    let outcomes = run_indexed(workers, replicates, |i| -> Result<Outcome> {
        let mut rng = replicate_rng(seed, grid_index, i);
        let d1 = run_walk(params, q, n, &mut rng, &opts)?.final_state.d1;
        let wrong = majority_estimator(d1, &mut rng) != Color::Red;
        Ok(match (d1 == 0, wrong) {
            (false, false) => Outcome::Correct,
            (false, true) => Outcome::Wrong,
            (true, false) => Outcome::TieCorrect,
            (true, true) => Outcome::TieWrong,
        })
    })?;
    let (mut errors, mut ties) = (0u64, 0u64);
    for o in outcomes {
        match o? {
            Outcome::Correct => {}
            Outcome::Wrong => errors += 1,
            Outcome::TieCorrect => ties += 1,
            Outcome::TieWrong => {
                ties += 1;
                errors += 1;
            }
        }
    }
    let estimate = errors as f64 / replicates as f64;
    let (ci_low, ci_high) = wilson_interval(errors, replicates, Z95);
    Ok(RmajEstimate {
        q,
        n,
        replicates,
        errors_observed: errors,
        ties,
        half_ties: ties as f64 / 2.0,
        estimate,
        stderr: bernoulli_stderr(estimate, replicates),
        ci_low,
        ci_high,
    })
}

/// One estimate per `q` in the grid.
pub fn estimate_rmaj(config: &ExperimentConfig) -> Result<Vec<RmajEstimate>> {
    config.validate()?;
    config
        .q_grid
        .iter()
        .enumerate()
        .map(|(k, &q)| {
            estimate_rmaj_point(
                &config.params,
                q,
                k as u64,
                config.n,
                config.replicates,
                config.seed,
                config.workers,
            )
        })
        .collect()
}
