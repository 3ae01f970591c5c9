//! Broadcasting a root bit down a growing tree, and the majority estimator.
//!
//! The root is red (`+1`). Every new vertex copies its parent's color and
//! flips it with probability `q`. Two simulation paths are provided: a fused
//! one that only tracks the integer tallies of [`DeltaState`], and an explicit
//! one that grows a [`TreeState`] and colors it vertex by vertex. Per step,
//! both draw the parent first and the flip second.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_q, Error, Result};
use crate::params::{Family, ModelParams};
use crate::tree::TreeState;
use crate::walk::{sample_pair, DeltaState, PairKind};

/// Vertex color, `+1` (red) or `−1` (blue).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Red,
    Blue,
}

impl Color {
    pub fn sign(self) -> i64 {
        match self {
            Color::Red => 1,
            Color::Blue => -1,
        }
    }

    pub fn flipped(self) -> Color {
        match self {
            Color::Red => Color::Blue,
            Color::Blue => Color::Red,
        }
    }
}

/// Keeps `parent` with probability `1 − q`, flips it otherwise.
pub fn assign_color(parent: Color, q: f64, rng: &mut impl Rng) -> Result<Color> {
    check_q(q)?;
    Ok(if rng.random::<f64>() < q {
        parent.flipped()
    } else {
        parent
    })
}

/// Sign of `Δ₁`, or a fair coin when `Δ₁ = 0`.
pub fn majority_estimator(delta1: i64, rng: &mut impl Rng) -> Color {
    match delta1.signum() {
        1 => Color::Red,
        -1 => Color::Blue,
        _ => {
            if rng.random::<bool>() {
                Color::Red
            } else {
                Color::Blue
            }
        }
    }
}

/// Transition counts `#(r,r), #(r,b), #(b,r), #(b,b)` over times `2..=N`,
/// indexed as (attached-to color, new color).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairCounts(pub [u64; 4]);

impl PairCounts {
    pub fn record(&mut self, pair: PairKind) {
        self.0[pair.index()] += 1;
    }

    pub fn get(&self, pair: PairKind) -> u64 {
        self.0[pair.index()]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// `#(r,_)`: transitions attaching to a red vertex.
    pub fn attached_to_red(&self) -> u64 {
        self.get(PairKind::RedRed) + self.get(PairKind::RedBlue)
    }

    /// `#(_,r)`: transitions creating a red vertex.
    pub fn new_red(&self) -> u64 {
        self.get(PairKind::RedRed) + self.get(PairKind::BlueRed)
    }

    /// The walk state these counts imply, starting from a red root.
    pub fn implied_state(&self, family: Family) -> DeltaState {
        PairKind::ALL.iter().fold(DeltaState::INITIAL, |s, &k| {
            let inc = k.increment(family);
            let c = self.get(k) as i64;
            DeltaState {
                n: s.n + c as u64,
                d1: s.d1 + c * inc.d1,
                d2: s.d2 + c * inc.d2,
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BroadcastResult {
    pub n: u64,
    pub delta_final: DeltaState,
    pub pair_counts: PairCounts,
    pub trajectory: Option<Vec<DeltaState>>,
}

impl BroadcastResult {
    /// `{N, delta1, delta2, pair_counts:[rr,rb,br,bb]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "N": self.n,
            "delta1": self.delta_final.d1,
            "delta2": self.delta_final.d2,
            "pair_counts": self.pair_counts.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BroadcastMode {
    /// Tally-only simulation; O(1) memory.
    #[default]
    Fused,
    /// Grow an explicit tree and color each vertex.
    Explicit,
}

fn validate(q: f64, n: u64) -> Result<()> {
    check_q(q)?;
    if n == 0 {
        return Err(Error::EmptyTree);
    }
    Ok(())
}

pub fn simulate_broadcast(
    params: &ModelParams,
    q: f64,
    n: u64,
    rng: &mut impl Rng,
    mode: BroadcastMode,
    record_trajectory: bool,
) -> Result<BroadcastResult> {
    validate(q, n)?;
    match mode {
        BroadcastMode::Fused => Ok(simulate_fused(params, q, n, rng, record_trajectory)),
        BroadcastMode::Explicit => {
            let (_, colors, result) = simulate_on_tree(params, q, n, rng, record_trajectory)?;
            debug_assert_eq!(colors.len() as u64, n + 1);
            Ok(result)
        }
    }
}

fn simulate_fused(
    params: &ModelParams,
    q: f64,
    n: u64,
    rng: &mut impl Rng,
    record_trajectory: bool,
) -> BroadcastResult {
    let mut state = DeltaState::INITIAL;
    let mut counts = PairCounts::default();
    let mut trajectory = record_trajectory.then(|| vec![state]);
    while state.n < n {
        let pair = sample_pair(params, q, &state, rng);
        counts.record(pair);
        state = state.advance(pair, params.family());
        if let Some(t) = trajectory.as_mut() {
            t.push(state);
        }
    }
    BroadcastResult {
        n,
        delta_final: state,
        pair_counts: counts,
        trajectory,
    }
}

/// Grows and colors an explicit tree. Returns the tree, the colors indexed by
/// vertex id (entry 0 unused, set to red), and the tallies.
pub fn simulate_on_tree(
    params: &ModelParams,
    q: f64,
    n: u64,
    rng: &mut impl Rng,
    record_trajectory: bool,
) -> Result<(TreeState, Vec<Color>, BroadcastResult)> {
    validate(q, n)?;
    let mut tree = TreeState::new(*params);
    let mut colors = vec![Color::Red, Color::Red];
    let mut counts = PairCounts::default();
    let mut state = DeltaState::INITIAL;
    let mut trajectory = record_trajectory.then(|| vec![state]);
    for _ in 1..n {
        let parent = tree.grow_step(rng);
        let parent_color = colors[parent as usize];
        let child = if rng.random::<f64>() < q {
            parent_color.flipped()
        } else {
            parent_color
        };
        colors.push(child);
        let pair = PairKind::from_colors(parent_color == Color::Red, child == Color::Red);
        counts.record(pair);
        state = state.advance(pair, params.family());
        if let Some(t) = trajectory.as_mut() {
            t.push(state);
        }
    }
    let result = BroadcastResult {
        n,
        delta_final: state,
        pair_counts: counts,
        trajectory,
    };
    Ok((tree, colors, result))
}

/// Recomputes `(Δ₁, Δ₂)` directly from a colored tree.
pub fn tally_colored_tree(tree: &TreeState, colors: &[Color]) -> DeltaState {
    let n = tree.len() as u64;
    let (mut d1, mut d2) = (0i64, 0i64);
    for v in 1..=tree.len() as u32 {
        let s = colors[v as usize].sign();
        d1 += s;
        d2 += s * i64::from(tree.weight_degree(v));
    }
    DeltaState { n, d1, d2 }
}
