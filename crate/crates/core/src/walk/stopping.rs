//! Escape boundaries and the auxiliary process `Y(n) = n/(Δ₁ + αΔ₂)²`.
//!
//! `τ_high(A)` is the first `n` with `Δ₁ + αΔ₂ > A·Z_α(n)·√n`; `τ_low(B)` is
//! the first later `n` with `Δ₁ + αΔ₂ ≤ B·Z_α(n)·√n`.

use serde::{Deserialize, Serialize};

use super::{z_alpha, DeltaState};
use crate::error::{check_q, Error, Result};
use crate::params::{Family, ModelParams};

/// Which `Z_α` enters the lower boundary constant `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// `B` evaluated at `Z_α = lim Z_α(n)`.
    #[default]
    Limit,
    /// `B(n)` evaluated at `Z_α(n)` on every step.
    PerStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingConfig {
    pub q: f64,
    pub gamma: f64,
    pub c_tilde: f64,
    /// `q^(γ − ½)`.
    pub a: f64,
    /// Limit form of `B`; NaN when `2β − Z_α ≤ 0`.
    pub b: f64,
    pub beta: f64,
    pub m2: f64,
    pub rho: f64,
    pub z_limit: f64,
    pub boundary: BoundaryMode,
    /// `2β − Z_α > 0`, so `B` is finite.
    pub b_defined: bool,
    /// `A > B > 1`.
    pub a_gt_b_gt_1: bool,
    /// `2ρ − Z_α > 0`, the drift condition for the supermartingale.
    pub drift_negative: bool,
}

/// `max (D₁ + αD₂)²` over the increment support.
fn m2(params: &ModelParams) -> f64 {
    super::PairKind::ALL
        .iter()
        .map(|k| {
            let inc = k.increment(params.family());
            params.combined(inc.d1, inc.d2).powi(2)
        })
        .fold(0.0, f64::max)
}

fn beta(params: &ModelParams) -> f64 {
    let a = params.alpha();
    match params.family() {
        Family::Vsi => a + 2.0 / 3.0,
        Family::Se => 1.5 * a + 0.75,
    }
}

fn rho(params: &ModelParams, q: f64) -> f64 {
    let a = params.alpha();
    match params.family() {
        Family::Vsi => a + 1.0 - 2.0 * q,
        Family::Se => 2.0 * a + 1.0 - 2.0 * q * (a + 1.0),
    }
}

fn b_at(m2: f64, c_tilde: f64, beta: f64, z: f64) -> f64 {
    let denom = z * (2.0 * beta - z);
    if denom > 0.0 {
        ((3.0 * m2 + c_tilde) / denom).sqrt()
    } else {
        f64::NAN
    }
}

impl StoppingConfig {
    /// Smallest positive `c̃` with `B > 1`, plus a margin of 0.1.
    pub fn default_c_tilde(params: &ModelParams) -> f64 {
        let z = params.z_limit();
        let needed = z * (2.0 * beta(params) - z) - 3.0 * m2(params);
        needed.max(0.0) + 0.1
    }

    pub const DEFAULT_GAMMA: f64 = 0.25;

    /// `B` in force at time `n`.
    pub fn b_at(&self, params: &ModelParams, n: u64) -> f64 {
        match self.boundary {
            BoundaryMode::Limit => self.b,
            BoundaryMode::PerStep => b_at(self.m2, self.c_tilde, self.beta, z_alpha(params, n)),
        }
    }

    pub fn with_boundary(mut self, boundary: BoundaryMode) -> Self {
        self.boundary = boundary;
        self
    }
}

/// Derives `A`, `B`, `β`, `M₂`, `ρ` and the limit `Z_α` for the escape analysis.
pub fn stopping_bounds(
    params: &ModelParams,
    q: f64,
    gamma: f64,
    c_tilde: f64,
) -> Result<StoppingConfig> {
    check_q(q)?;
    if q == 0.0 {
        return Err(Error::ZeroFlipProbability);
    }
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "gamma = {gamma} must lie in (0, 1/2)"
        )));
    }
    if !(c_tilde > 0.0 && c_tilde.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "c_tilde = {c_tilde} must be positive"
        )));
    }
    let m2 = m2(params);
    let beta = beta(params);
    let z_limit = params.z_limit();
    let rho = rho(params, q);
    let a = q.powf(gamma - 0.5);
    let b = b_at(m2, c_tilde, beta, z_limit);
    let b_defined = b.is_finite();
    Ok(StoppingConfig {
        q,
        gamma,
        c_tilde,
        a,
        b,
        beta,
        m2,
        rho,
        z_limit,
        boundary: BoundaryMode::Limit,
        b_defined,
        a_gt_b_gt_1: b_defined && a > b && b > 1.0,
        drift_negative: 2.0 * rho - z_limit > 0.0,
    })
}

/// `n/(Δ₁ + αΔ₂)²`.
pub fn y_value(state: &DeltaState, params: &ModelParams) -> Result<f64> {
    let zero = match params.scaled_weight(state.d1, state.d2) {
        Some(w) => w == 0,
        None => state.combined(params) == 0.0,
    };
    if zero {
        return Err(Error::ZeroCombined(state.n));
    }
    Ok(state.n as f64 / state.combined(params).powi(2))
}

/// First crossing times; `None` means no crossing within the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StoppingTimes {
    pub tau_high: Option<u64>,
    pub tau_low: Option<u64>,
}

impl StoppingTimes {
    /// `τ_high ≤ horizon` and `τ_low > horizon`.
    pub fn escaped_by(&self, horizon: u64) -> bool {
        self.tau_high.is_some_and(|t| t <= horizon) && !self.tau_low.is_some_and(|t| t <= horizon)
    }
}

/// Online detector fed with every state of a trajectory in order.
#[derive(Debug, Clone)]
pub struct StoppingDetector {
    config: StoppingConfig,
    params: ModelParams,
    times: StoppingTimes,
}

impl StoppingDetector {
    pub fn new(config: StoppingConfig, params: ModelParams) -> Self {
        StoppingDetector {
            config,
            params,
            times: StoppingTimes::default(),
        }
    }

    pub fn config(&self) -> &StoppingConfig {
        &self.config
    }

    pub fn observe_state(&mut self, state: &DeltaState) -> StoppingTimes {
        self.observe(state.n, state.combined(&self.params))
    }

    /// Feeds `(n, Δ₁(n) + αΔ₂(n))` and returns the times detected so far.
    pub fn observe(&mut self, n: u64, combined: f64) -> StoppingTimes {
        let scale = z_alpha(&self.params, n) * (n as f64).sqrt();
        match self.times {
            StoppingTimes { tau_high: None, .. } if combined > self.config.a * scale => {
                self.times.tau_high = Some(n);
            }
            StoppingTimes {
                tau_high: Some(h),
                tau_low: None,
            } if n > h && combined <= self.config.b_at(&self.params, n) * scale => {
                self.times.tau_low = Some(n);
            }
            _ => {}
        }
        self.times
    }

    /// `τ_high ≤ n < τ_low`: the stopped process still moves at this step.
    pub fn active_at(&self, n: u64) -> bool {
        self.times.tau_high.is_some_and(|h| h <= n) && self.times.tau_low.is_none_or(|l| n < l)
    }

    pub fn finished(&self) -> bool {
        self.times.tau_low.is_some()
    }

    pub fn times(&self) -> StoppingTimes {
        self.times
    }
}

/// Detects both stopping times on a full `(n, Δ₁ + αΔ₂)` trajectory.
pub fn detect_stopping_times(
    trajectory: impl IntoIterator<Item = (u64, f64)>,
    config: &StoppingConfig,
    params: &ModelParams,
) -> StoppingTimes {
    let mut detector = StoppingDetector::new(config.clone(), *params);
    for (n, c) in trajectory {
        if detector.observe(n, c).tau_low.is_some() {
            break;
        }
    }
    detector.times()
}
