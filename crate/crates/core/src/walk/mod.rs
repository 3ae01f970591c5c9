//! The color difference as a two-dimensional time-inhomogeneous Markov walk.
//!
//! `Δ₁(n)` is the red-minus-blue vertex count and `Δ₂(n)` the red-minus-blue
//! attachment units (outdegree sums for VSI, degree sums for SE). Given
//! `Δ(n)`, the next vertex attaches to a red vertex with probability
//! `½(1 + (Δ₁ + αΔ₂)/(Z_α(n)·n))` and then flips its parent's color with
//! probability `q`. The state is kept in integers; only the attachment
//! probability is evaluated in floating point, from integer tallies, on each
//! step.

mod stopping;

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_q, Error, Result};
use crate::params::{Family, ModelParams};

pub use stopping::{
    detect_stopping_times, stopping_bounds, y_value, BoundaryMode, StoppingConfig,
    StoppingDetector, StoppingTimes,
};

/// `(n, Δ₁(n), Δ₂(n))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeltaState {
    pub n: u64,
    pub d1: i64,
    pub d2: i64,
}

impl Default for DeltaState {
    fn default() -> Self {
        Self::INITIAL
    }
}

impl DeltaState {
    /// A single red root.
    pub const INITIAL: DeltaState = DeltaState { n: 1, d1: 1, d2: 0 };

    pub fn new(n: u64, d1: i64, d2: i64) -> Self {
        DeltaState { n, d1, d2 }
    }

    /// Number of red vertices.
    pub fn red_count(&self) -> i64 {
        (self.n as i64 + self.d1) / 2
    }

    /// Attachment units (outdegree or degree sum) held by red vertices.
    pub fn red_units(&self, params: &ModelParams) -> i64 {
        (params.weight_units(self.n) + self.d2) / 2
    }

    /// `Δ₁ + α·Δ₂`.
    pub fn combined(&self, params: &ModelParams) -> f64 {
        params.combined(self.d1, self.d2)
    }

    /// Checks parity, range and the nonnegativity of both color weights.
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        let n = self.n as i64;
        let units = params.weight_units(self.n);
        let err = |what: &str| {
            Err(Error::Invariant(format!(
                "{what} for state (n={}, d1={}, d2={}) under {params}",
                self.n, self.d1, self.d2
            )))
        };
        if self.n == 0 {
            return err("n must be at least 1");
        }
        if self.d1.abs() > n || (self.d1 - n).rem_euclid(2) != 0 {
            return err("d1 out of range or wrong parity");
        }
        if self.d2.abs() > units || (self.d2 - units).rem_euclid(2) != 0 {
            return err("d2 out of range or wrong parity");
        }
        let (red_n, red_u) = (self.red_count(), self.red_units(params));
        let (blue_n, blue_u) = (n - red_n, units - red_u);
        let nonneg = |c: i64, u: i64| match params.scaled_weight(c, u) {
            Some(w) => w >= 0,
            None => params.weighted(c, u) >= 0.0,
        };
        if !nonneg(red_n, red_u) || !nonneg(blue_n, blue_u) {
            return err("|d1 + alpha*d2| exceeds Z(n)*n");
        }
        Ok(())
    }

    /// The state after one transition of the given kind.
    pub fn advance(self, pair: PairKind, family: Family) -> DeltaState {
        let inc = pair.increment(family);
        DeltaState {
            n: self.n + 1,
            d1: self.d1 + inc.d1,
            d2: self.d2 + inc.d2,
        }
    }
}

/// One step `D(n)` of the walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Increment {
    pub d1: i64,
    pub d2: i64,
}

/// Color of the attached-to vertex and of the new vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairKind {
    RedRed,
    RedBlue,
    BlueRed,
    BlueBlue,
}

impl PairKind {
    pub const ALL: [PairKind; 4] = [
        PairKind::RedRed,
        PairKind::RedBlue,
        PairKind::BlueRed,
        PairKind::BlueBlue,
    ];

    pub fn from_colors(parent_red: bool, child_red: bool) -> Self {
        match (parent_red, child_red) {
            (true, true) => PairKind::RedRed,
            (true, false) => PairKind::RedBlue,
            (false, true) => PairKind::BlueRed,
            (false, false) => PairKind::BlueBlue,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn parent_red(self) -> bool {
        matches!(self, PairKind::RedRed | PairKind::RedBlue)
    }

    pub fn child_red(self) -> bool {
        matches!(self, PairKind::RedRed | PairKind::BlueRed)
    }

    pub fn increment(self, family: Family) -> Increment {
        let (d1, d2) = match (family, self) {
            (Family::Vsi, PairKind::RedRed) => (1, 1),
            (Family::Vsi, PairKind::RedBlue) => (-1, 1),
            (Family::Vsi, PairKind::BlueRed) => (1, -1),
            (Family::Vsi, PairKind::BlueBlue) => (-1, -1),
            (Family::Se, PairKind::RedRed) => (1, 2),
            (Family::Se, PairKind::RedBlue) => (-1, 0),
            (Family::Se, PairKind::BlueRed) => (1, 0),
            (Family::Se, PairKind::BlueBlue) => (-1, -2),
        };
        Increment { d1, d2 }
    }
}

/// `Z_α(n) = α(1 − 1/n) + 1` (VSI) or `2α(1 − 1/n) + 1` (SE).
pub fn z_alpha(params: &ModelParams, n: u64) -> f64 {
    let k = params.family().weight_per_edge() as f64;
    k * params.alpha() * (1.0 - 1.0 / n as f64) + 1.0
}

/// Red-attach probability without invariant checks.
#[inline]
pub(crate) fn red_attach_prob_unchecked(params: &ModelParams, state: &DeltaState) -> f64 {
    params.weight_ratio(
        state.red_count(),
        state.red_units(params),
        state.n as i64,
        params.weight_units(state.n),
    )
}

/// Probability that vertex `n + 1` attaches to a red vertex.
pub fn red_attach_prob(params: &ModelParams, state: &DeltaState) -> Result<f64> {
    state.validate(params)?;
    Ok(red_attach_prob_unchecked(params, state))
}

fn pair_probabilities(p: f64, q: f64) -> [f64; 4] {
    [p * (1.0 - q), p * q, (1.0 - p) * q, (1.0 - p) * (1.0 - q)]
}

/// The four possible increments with their conditional probabilities, in
/// [`PairKind::ALL`] order.
pub fn increment_distribution(
    params: &ModelParams,
    q: f64,
    state: &DeltaState,
) -> Result<[(Increment, f64); 4]> {
    check_q(q)?;
    let p = red_attach_prob(params, state)?;
    let probs = pair_probabilities(p, q);
    Ok(PairKind::ALL.map(|k| (k.increment(params.family()), probs[k.index()])))
}

/// Draws the parent color (first uniform) and then the flip (second uniform).
#[inline]
pub(crate) fn sample_pair(
    params: &ModelParams,
    q: f64,
    state: &DeltaState,
    rng: &mut impl Rng,
) -> PairKind {
    let p = red_attach_prob_unchecked(params, state);
    let parent_red = rng.random::<f64>() < p;
    let flip = rng.random::<f64>() < q;
    PairKind::from_colors(parent_red, parent_red != flip)
}

/// One transition `Δ(n) → Δ(n+1)`.
pub fn walk_step(
    state: DeltaState,
    params: &ModelParams,
    q: f64,
    rng: &mut impl Rng,
) -> DeltaState {
    let next = state.advance(sample_pair(params, q, &state, rng), params.family());
    debug_assert!(
        next.validate(params).is_ok(),
        "walk left the state space: {next:?}"
    );
    next
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkOptions {
    pub record_trajectory: bool,
    /// Keep every `stride`-th state (plus the last one) in the trajectory.
    pub stride: u64,
    pub track_y: bool,
    /// Detect `τ_high`/`τ_low` on every step, independent of `stride`.
    pub stopping: Option<StoppingConfig>,
}

impl Default for WalkOptions {
    fn default() -> Self {
        WalkOptions {
            record_trajectory: false,
            stride: 1,
            track_y: false,
            stopping: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub n: u64,
    pub delta1: i64,
    pub delta2: i64,
    pub combined: f64,
    pub y: Option<f64>,
}

impl TrajectoryPoint {
    pub fn from_state(state: &DeltaState, params: &ModelParams, track_y: bool) -> Self {
        TrajectoryPoint {
            n: state.n,
            delta1: state.d1,
            delta2: state.d2,
            combined: state.combined(params),
            y: if track_y {
                y_value(state, params).ok()
            } else {
                None
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkResult {
    pub final_state: DeltaState,
    pub trajectory: Vec<TrajectoryPoint>,
    pub stopping: Option<StoppingTimes>,
}

/// Runs the walk from the initial state up to time `n`.
pub fn run_walk(
    params: &ModelParams,
    q: f64,
    n: u64,
    rng: &mut impl Rng,
    options: &WalkOptions,
) -> Result<WalkResult> {
    check_q(q)?;
    if n == 0 {
        return Err(Error::EmptyTree);
    }
    if options.stride == 0 {
        return Err(Error::InvalidArgument(
            "trajectory stride must be positive".into(),
        ));
    }
    let mut state = DeltaState::INITIAL;
    let mut trajectory = Vec::new();
    let mut detector = options
        .stopping
        .as_ref()
        .map(|cfg| StoppingDetector::new(cfg.clone(), *params));

    if options.record_trajectory {
        trajectory.push(TrajectoryPoint::from_state(&state, params, options.track_y));
    }
    if let Some(d) = detector.as_mut() {
        d.observe_state(&state);
    }

    if !options.record_trajectory && detector.is_none() {
        // Hot path.
        for _ in 1..n {
            state = walk_step(state, params, q, rng);
        }
    } else {
        while state.n < n {
            state = walk_step(state, params, q, rng);
            if let Some(d) = detector.as_mut() {
                d.observe_state(&state);
            }
            if options.record_trajectory
                && ((state.n - 1).is_multiple_of(options.stride) || state.n == n)
            {
                trajectory.push(TrajectoryPoint::from_state(&state, params, options.track_y));
            }
        }
    }

    Ok(WalkResult {
        final_state: state,
        trajectory,
        stopping: detector.map(|d| d.times()),
    })
}

/// CSV with header `n,delta1,delta2,combined,y`; `y` is blank where undefined.
pub fn write_trajectory_csv<W: Write>(mut out: W, points: &[TrajectoryPoint]) -> Result<()> {
    writeln!(out, "n,delta1,delta2,combined,y")?;
    for p in points {
        let y = p.y.map(|y| y.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            p.n, p.delta1, p.delta2, p.combined, y
        )?;
    }
    Ok(())
}
