//! Diagnostics for the escape argument behind the `√q` error bound.
//!
//! For each `q` the same replicate trajectories feed three checks: the
//! frequencies of `τ_high ≤ N`, `τ_low ≤ N` and of escaping (`τ_high ≤ N <
//! τ_low`); the binned conditional drift of `Y(n)` while the stopped process
//! is active; and the frequency of the pair-count concentration event `𝒜`
//! among escaped replicates.
//!
//! At `q = 0` the boundary `A = q^(γ−½)` is undefined. Every trajectory is
//! then the deterministic all-red path, which is reported analytically as an
//! escape that never returns.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::seed::replicate_rng;
use super::stats::{bernoulli_stderr, Moments};
use super::{run_indexed, ExperimentConfig};
use crate::broadcast::PairCounts;
use crate::error::{Error, Result};
use crate::params::{Family, ModelParams};
use crate::walk::{
    sample_pair, stopping_bounds, y_value, z_alpha, DeltaState, StoppingConfig, StoppingDetector,
    StoppingTimes,
};

/// Grid-index offset separating diagnostic streams from R_maj streams.
const DIAGNOSTIC_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeRecord {
    pub q: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub replicates: u64,
    pub a: f64,
    pub b: f64,
    pub a_gt_b_gt_1: bool,
    pub p_high_leq_n: f64,
    /// `None` when `B` is undefined for these parameters.
    pub p_low_leq_n: Option<f64>,
    pub p_escape: Option<f64>,
    /// `q^(2γ)`, the upper bound on `P(τ_high > N)`.
    pub tau_high_bound: f64,
    /// Standard error of the `P(τ_high > N)` estimate.
    pub tau_high_stderr: f64,
    /// True when the record is the analytic all-red path (`q = 0`).
    pub analytic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MartingaleStatus {
    Checked,
    /// `2ρ − Z_α ≤ 0`: the drift condition fails, nothing is claimed.
    OutsideRegime,
    /// No step fell between `τ_high` and `τ_low`.
    NoSamples,
    /// `B` is undefined for these parameters.
    BoundaryUndefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleBin {
    /// Bin covers `n_lo ≤ n < n_hi`.
    pub n_lo: u64,
    pub n_hi: u64,
    pub count: u64,
    pub mean: f64,
    pub stderr: f64,
    /// Mean above `+3·stderr`.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub q: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub status: MartingaleStatus,
    pub bins: Vec<MartingaleBin>,
    pub samples: u64,
    /// Steps skipped because `Y(n+1)` was undefined.
    pub undefined_steps: u64,
    pub flagged_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventARecord {
    pub q: f64,
    #[serde(rename = "N")]
    pub n: u64,
    /// Half-width constant `a = B·Z_α(N)/(4|α|)`.
    pub a_width: f64,
    pub escaped: u64,
    pub in_event: u64,
    /// `P(𝒜 | escape)`; `None` without escaped replicates.
    pub frequency: Option<f64>,
    /// Chebyshev level `1 − q/a²`.
    pub chebyshev_bound: f64,
}

/// One CSV/JSON row of the diagnostics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub family: Family,
    pub alpha: f64,
    pub q: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub gamma: f64,
    pub c_tilde: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "p_high_leq_N")]
    pub p_high_leq_n: f64,
    #[serde(rename = "p_low_leq_N")]
    pub p_low_leq_n: Option<f64>,
    pub p_escape: Option<f64>,
    #[serde(rename = "event_A_freq")]
    pub event_a_freq: Option<f64>,
}

struct Trace {
    times: StoppingTimes,
    pairs: PairCounts,
    bins: Vec<Moments>,
    undefined_steps: u64,
}

/// Log-spaced bin edges `1 = e₀ < e₁ < … < e_k = N`.
fn bin_edges(n: u64, bins: usize) -> Vec<u64> {
    let mut edges: Vec<u64> = (0..=bins)
        .map(|b| (n as f64).powf(b as f64 / bins as f64).round() as u64)
        .collect();
    edges[0] = 1;
    *edges.last_mut().unwrap() = n;
    edges.dedup();
    if edges.len() == 1 {
        edges.push(n + 1);
    }
    edges
}

fn bin_index(edges: &[u64], n: u64) -> usize {
    (edges.partition_point(|&e| e <= n) - 1).min(edges.len() - 2)
}

fn trace(
    params: &ModelParams,
    q: f64,
    n: u64,
    cfg: &StoppingConfig,
    edges: Option<&[u64]>,
    rng: &mut impl Rng,
) -> Trace {
    let mut detector = StoppingDetector::new(cfg.clone(), *params);
    let mut state = DeltaState::INITIAL;
    let mut pairs = PairCounts::default();
    let mut bins = vec![Moments::default(); edges.map_or(0, |e| e.len() - 1)];
    let mut undefined_steps = 0;
    detector.observe_state(&state);
    while state.n < n {
        let pair = sample_pair(params, q, &state, rng);
        pairs.record(pair);
        let next = state.advance(pair, params.family());
        if let Some(edges) = edges {
            if detector.active_at(state.n) {
                match (y_value(&state, params), y_value(&next, params)) {
                    (Ok(y0), Ok(y1)) => {
                        bins[bin_index(edges, state.n)].push(y1 - y0);
                    }
                    _ => undefined_steps += 1,
                }
            }
        }
        detector.observe_state(&next);
        state = next;
    }
    Trace {
        times: detector.times(),
        pairs,
        bins,
        undefined_steps,
    }
}

fn traces(
    config: &ExperimentConfig,
    k: usize,
    cfg: &StoppingConfig,
    edges: Option<&[u64]>,
) -> Result<Vec<Trace>> {
    let q = config.q_grid[k];
    run_indexed(config.workers, config.diagnostic_replicates, |i| {
        let mut rng = replicate_rng(config.seed, DIAGNOSTIC_STREAM + k as u64, i);
        trace(&config.params, q, config.n, cfg, edges, &mut rng)
    })
}

/// Stopping configuration for a grid point; `None` at `q = 0`.
fn config_at(config: &ExperimentConfig, q: f64) -> Result<Option<StoppingConfig>> {
    if q == 0.0 {
        return Ok(None);
    }
    let cfg = stopping_bounds(&config.params, q, config.gamma, config.effective_c_tilde())?;
    Ok(Some(cfg.with_boundary(config.boundary)))
}

fn limit_b(config: &ExperimentConfig) -> Result<f64> {
    // B does not depend on q.
    Ok(stopping_bounds(
        &config.params,
        0.5,
        config.gamma,
        config.effective_c_tilde(),
    )?
    .b)
}

fn escape_from_traces(
    config: &ExperimentConfig,
    q: f64,
    cfg: &StoppingConfig,
    traces: &[Trace],
) -> EscapeRecord {
    let n = config.n;
    let reps = traces.len() as u64;
    let freq = |pred: &dyn Fn(&StoppingTimes) -> bool| {
        traces.iter().filter(|t| pred(&t.times)).count() as f64 / reps as f64
    };
    let p_high = freq(&|t| t.tau_high.is_some_and(|h| h <= n));
    let (p_low, p_escape) = if cfg.b_defined {
        (
            Some(freq(&|t| t.tau_low.is_some_and(|l| l <= n))),
            Some(freq(&|t| t.escaped_by(n))),
        )
    } else {
        (None, None)
    };
    EscapeRecord {
        q,
        n,
        replicates: reps,
        a: cfg.a,
        b: cfg.b,
        a_gt_b_gt_1: cfg.a_gt_b_gt_1,
        p_high_leq_n: p_high,
        p_low_leq_n: p_low,
        p_escape,
        tau_high_bound: q.powf(2.0 * config.gamma),
        tau_high_stderr: bernoulli_stderr(1.0 - p_high, reps),
        analytic: false,
    }
}

fn analytic_escape(config: &ExperimentConfig) -> Result<EscapeRecord> {
    let b = limit_b(config)?;
    let defined = b.is_finite();
    Ok(EscapeRecord {
        q: 0.0,
        n: config.n,
        replicates: config.diagnostic_replicates,
        a: f64::INFINITY,
        b,
        a_gt_b_gt_1: defined && b > 1.0,
        p_high_leq_n: 1.0,
        p_low_leq_n: defined.then_some(0.0),
        p_escape: defined.then_some(1.0),
        tau_high_bound: 0.0,
        tau_high_stderr: 0.0,
        analytic: true,
    })
}

/// Frequencies of `τ_high ≤ N`, `τ_low ≤ N` and escape, per `q`.
pub fn escape_event_frequency(config: &ExperimentConfig) -> Result<Vec<EscapeRecord>> {
    config.validate()?;
    (0..config.q_grid.len())
        .map(|k| match config_at(config, config.q_grid[k])? {
            None => analytic_escape(config),
            Some(cfg) => {
                let tr = traces(config, k, &cfg, None)?;
                Ok(escape_from_traces(config, config.q_grid[k], &cfg, &tr))
            }
        })
        .collect()
}

fn finish_bins(edges: &[u64], moments: &[Moments]) -> Vec<MartingaleBin> {
    moments
        .iter()
        .enumerate()
        .filter(|(_, m)| m.count > 0)
        .map(|(b, m)| {
            let (mean, stderr) = (m.mean(), m.stderr());
            MartingaleBin {
                n_lo: edges[b],
                n_hi: edges[b + 1],
                count: m.count,
                mean,
                stderr,
                flagged: m.count >= 2 && mean > 3.0 * stderr,
            }
        })
        .collect()
}

fn report(
    q: f64,
    n: u64,
    status: MartingaleStatus,
    bins: Vec<MartingaleBin>,
    undefined_steps: u64,
) -> MartingaleReport {
    let samples = bins.iter().map(|b| b.count).sum();
    let status = if status == MartingaleStatus::Checked && samples == 0 {
        MartingaleStatus::NoSamples
    } else {
        status
    };
    MartingaleReport {
        q,
        n,
        status,
        flagged_bins: bins.iter().filter(|b| b.flagged).count(),
        bins,
        samples,
        undefined_steps,
    }
}

/// Binned mean of `Y(n+1) − Y(n)` over steps with `τ_high ≤ n < τ_low`.
pub fn supermartingale_diagnostic(config: &ExperimentConfig) -> Result<Vec<MartingaleReport>> {
    config.validate()?;
    let edges = bin_edges(config.n, config.bins);
    let mut out = Vec::with_capacity(config.q_grid.len());
    for (k, &q) in config.q_grid.iter().enumerate() {
        let drift_ok = match config.params.family() {
            Family::Vsi => config.params.alpha() + 1.0 - 2.0 * q,
            Family::Se => {
                let a = config.params.alpha();
                2.0 * a + 1.0 - 2.0 * q * (a + 1.0)
            }
        } * 2.0
            - config.params.z_limit()
            > 0.0;
        if !drift_ok {
            out.push(report(
                q,
                config.n,
                MartingaleStatus::OutsideRegime,
                Vec::new(),
                0,
            ));
            continue;
        }
        match config_at(config, q)? {
            None => {
                // Deterministic all-red path: Y(n) = n/(Z(n)·n)².
                let p = &config.params;
                let mut moments = vec![Moments::default(); edges.len() - 1];
                let mut prev = y_value(&all_red(p, 1), p)?;
                for t in 1..config.n {
                    let next = y_value(&all_red(p, t + 1), p)?;
                    moments[bin_index(&edges, t)].push(next - prev);
                    prev = next;
                }
                let bins = finish_bins(&edges, &moments);
                out.push(report(q, config.n, MartingaleStatus::Checked, bins, 0));
            }
            Some(cfg) if !cfg.b_defined => {
                out.push(report(
                    q,
                    config.n,
                    MartingaleStatus::BoundaryUndefined,
                    Vec::new(),
                    0,
                ));
            }
            Some(cfg) => {
                let tr = traces(config, k, &cfg, Some(&edges))?;
                let mut moments = vec![Moments::default(); edges.len() - 1];
                let mut undefined = 0;
                for t in &tr {
                    for (m, b) in moments.iter_mut().zip(&t.bins) {
                        m.merge(b);
                    }
                    undefined += t.undefined_steps;
                }
                let bins = finish_bins(&edges, &moments);
                out.push(report(
                    q,
                    config.n,
                    MartingaleStatus::Checked,
                    bins,
                    undefined,
                ));
            }
        }
    }
    Ok(out)
}

fn all_red(params: &ModelParams, n: u64) -> DeltaState {
    DeltaState::new(n, n as i64, params.weight_units(n))
}

/// Whether the pair counts fall in `𝒜`.
fn in_event_a(pairs: &PairCounts, n: u64, q: f64, a: f64) -> bool {
    let nf = n as f64;
    let center = (pairs.new_red() as f64 - nf * q) / (1.0 - 2.0 * q);
    let half = a * nf.sqrt() / (1.0 - 2.0 * q);
    (pairs.attached_to_red() as f64 - center).abs() <= half
}

fn event_a_checks(config: &ExperimentConfig) -> Result<f64> {
    let alpha = config.params.alpha();
    if alpha == 0.0 {
        return Err(Error::EventUndefinedForZeroAlpha);
    }
    if let Some(q) = config.q_grid.iter().find(|&&q| q >= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "event A needs q < 1/2, got q = {q}"
        )));
    }
    let b = limit_b(config)?;
    if !b.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "the boundary B is undefined for {}",
            config.params
        )));
    }
    Ok(b * z_alpha(&config.params, config.n) / (4.0 * alpha.abs()))
}

fn event_a_from_traces(
    config: &ExperimentConfig,
    q: f64,
    a: f64,
    traces: &[Trace],
) -> EventARecord {
    let escaped: Vec<&Trace> = traces
        .iter()
        .filter(|t| t.times.escaped_by(config.n))
        .collect();
    let in_event = escaped
        .iter()
        .filter(|t| in_event_a(&t.pairs, config.n, q, a))
        .count() as u64;
    let escaped = escaped.len() as u64;
    EventARecord {
        q,
        n: config.n,
        a_width: a,
        escaped,
        in_event,
        frequency: (escaped > 0).then(|| in_event as f64 / escaped as f64),
        chebyshev_bound: 1.0 - q / (a * a),
    }
}

/// `P(𝒜 | τ_high ≤ N < τ_low)` per `q`. Undefined for α = 0.
pub fn event_a_frequency(config: &ExperimentConfig) -> Result<Vec<EventARecord>> {
    config.validate()?;
    let a = event_a_checks(config)?;
    (0..config.q_grid.len())
        .map(|k| {
            let q = config.q_grid[k];
            match config_at(config, q)? {
                None => Ok(EventARecord {
                    q,
                    n: config.n,
                    a_width: a,
                    escaped: config.diagnostic_replicates,
                    in_event: config.diagnostic_replicates,
                    frequency: Some(1.0),
                    chebyshev_bound: 1.0,
                }),
                Some(cfg) => {
                    let tr = traces(config, k, &cfg, None)?;
                    Ok(event_a_from_traces(config, q, a, &tr))
                }
            }
        })
        .collect()
}

/// Escape frequencies and event-𝒜 frequency from one pass per `q`.
pub fn run_diagnostics(config: &ExperimentConfig) -> Result<Vec<DiagnosticsRecord>> {
    config.validate()?;
    let a_width = event_a_checks(config).ok();
    let c_tilde = config.effective_c_tilde();
    let mut out = Vec::with_capacity(config.q_grid.len());
    for (k, &q) in config.q_grid.iter().enumerate() {
        let (escape, event_a) = match config_at(config, q)? {
            None => (analytic_escape(config)?, a_width.map(|_| 1.0)),
            Some(cfg) => {
                let tr = traces(config, k, &cfg, None)?;
                let esc = escape_from_traces(config, q, &cfg, &tr);
                let ev = a_width
                    .filter(|_| q < 0.5)
                    .and_then(|a| event_a_from_traces(config, q, a, &tr).frequency);
                (esc, ev)
            }
        };
        out.push(DiagnosticsRecord {
            family: config.params.family(),
            alpha: config.params.alpha(),
            q,
            n: config.n,
            gamma: config.gamma,
            c_tilde,
            a: escape.a,
            b: escape.b,
            p_high_leq_n: escape.p_high_leq_n,
            p_low_leq_n: escape.p_low_leq_n,
            p_escape: escape.p_escape,
            event_a_freq: event_a,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::AlphaSpec;

    fn cfg(params: ModelParams, q: Vec<f64>, n: u64, reps: u64) -> ExperimentConfig {
        ExperimentConfig::new(params, q, n, reps, 17)
    }

    #[test]
    fn bin_edges_cover_the_horizon() {
        let e = bin_edges(10_000, 20);
        assert_eq!(e[0], 1);
        assert_eq!(*e.last().unwrap(), 10_000);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(bin_edges(1, 5), vec![1, 2]);
    }

    #[test]
    fn zero_flip_escapes_analytically() {
        let c = cfg(ModelParams::vsi(0.0).unwrap(), vec![0.0], 1000, 10);
        let r = &escape_event_frequency(&c).unwrap()[0];
        assert!(r.analytic);
        assert_eq!((r.p_high_leq_n, r.p_escape), (1.0, Some(1.0)));

        let m = &supermartingale_diagnostic(&c).unwrap()[0];
        assert_eq!(m.status, MartingaleStatus::Checked);
        assert_eq!(m.flagged_bins, 0);
        assert!(m.bins.iter().all(|b| b.mean < 0.0));
        assert_eq!(m.samples, 999);
    }

    #[test]
    fn above_threshold_is_outside_regime() {
        let c = cfg(ModelParams::vsi(0.0).unwrap(), vec![0.45], 1000, 10);
        let m = &supermartingale_diagnostic(&c).unwrap()[0];
        assert_eq!(m.status, MartingaleStatus::OutsideRegime);
        assert!(m.bins.is_empty());
    }

    #[test]
    fn event_a_rejects_uniform_attachment() {
        let c = cfg(ModelParams::vsi(0.0).unwrap(), vec![0.01], 100, 10);
        assert_eq!(
            event_a_frequency(&c),
            Err(Error::EventUndefinedForZeroAlpha)
        );
        // The combined table leaves the column empty instead.
        let rows = run_diagnostics(&c).unwrap();
        assert_eq!(rows[0].event_a_freq, None);
    }

    #[test]
    fn event_a_near_one_for_tiny_q() {
        let c = cfg(ModelParams::vsi(1.0).unwrap(), vec![1e-4], 2000, 200);
        let r = &event_a_frequency(&c).unwrap()[0];
        assert!(r.escaped > 150);
        assert!(r.frequency.unwrap() > 0.99, "{r:?}");
    }

    #[test]
    fn undefined_boundary_is_reported() {
        let p = ModelParams::new(Family::Vsi, AlphaSpec::NegativeReciprocal(2)).unwrap();
        let c = cfg(p, vec![0.01], 200, 20);
        let r = &escape_event_frequency(&c).unwrap()[0];
        assert_eq!(r.p_escape, None);
        assert!(r.p_high_leq_n > 0.0);
        let m = &supermartingale_diagnostic(&c).unwrap()[0];
        assert_eq!(m.status, MartingaleStatus::BoundaryUndefined);
    }

    #[test]
    fn in_event_a_window() {
        let pairs = PairCounts([90, 5, 3, 2]);
        // #(r,_) = 95, #(_,r) = 93; center (93 − 100·0.02)/0.96 = 94.79
        assert!(in_event_a(&pairs, 100, 0.02, 0.1));
        assert!(!in_event_a(&pairs, 100, 0.02, 0.01));
    }

    #[test]
    fn diagnostics_are_worker_independent() {
        let mut c = cfg(ModelParams::se(1.0).unwrap(), vec![0.01, 0.05], 500, 64);
        let one = run_diagnostics(&c).unwrap();
        let m1 = supermartingale_diagnostic(&c).unwrap();
        c.workers = 3;
        assert_eq!(one, run_diagnostics(&c).unwrap());
        assert_eq!(m1, supermartingale_diagnostic(&c).unwrap());
    }
}
