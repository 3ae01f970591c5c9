//! The four-type Pólya urn with randomized replacement.
//!
//! Types are numbered red weight (1), blue weight (2), red count (3) and blue
//! count (4). Weight types have activity 1, count types activity 0. The urn
//! stores integer vertex counts and unit tallies; the real-valued ball masses
//! `X₁ = α·s_red + n_red` and `X₂ = α·s_blue + n_blue` are derived on demand.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{DMatrix, Matrix4};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_q, Error, Result};
use crate::params::{AlphaSpec, Family, ModelParams};
use crate::walk::DeltaState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrnState {
    pub n: u64,
    pub n_red: u64,
    pub n_blue: u64,
    /// Outdegree (VSI) or degree (SE) sum over red vertices.
    pub s_red: u64,
    pub s_blue: u64,
}

impl UrnState {
    /// `X(0) = (1, 0, 1, 0)`: a red root with no edges.
    pub const INITIAL: UrnState = UrnState {
        n: 1,
        n_red: 1,
        n_blue: 0,
        s_red: 0,
        s_blue: 0,
    };

    /// `(X₁, X₂, X₃, X₄)`.
    pub fn x(&self, params: &ModelParams) -> [f64; 4] {
        [
            params.weighted(self.n_red as i64, self.s_red as i64),
            params.weighted(self.n_blue as i64, self.s_blue as i64),
            self.n_red as f64,
            self.n_blue as f64,
        ]
    }

    /// `(Δ₁, Δ₂) = (n_red − n_blue, s_red − s_blue)`.
    pub fn delta(&self) -> DeltaState {
        DeltaState {
            n: self.n,
            d1: self.n_red as i64 - self.n_blue as i64,
            d2: self.s_red as i64 - self.s_blue as i64,
        }
    }

    /// `(X₁ − X₃) − (X₂ − X₄)`, which equals `α·Δ₂`.
    pub fn weight_type_difference(&self, params: &ModelParams) -> f64 {
        let x = self.x(params);
        (x[0] - x[2]) - (x[1] - x[3])
    }

    pub fn check(&self, params: &ModelParams) -> Result<()> {
        let units = params.weight_units(self.n) as u64;
        if self.n_red + self.n_blue != self.n || self.s_red + self.s_blue != units {
            return Err(Error::Invariant(format!(
                "inconsistent urn tallies {self:?}"
            )));
        }
        self.delta().validate(params)
    }
}

/// Draws `n − 1` balls: the parent color proportional to `X₁ : X₂`, then a
/// flip with probability `q` for the new vertex.
pub fn simulate_urn(params: &ModelParams, q: f64, n: u64, rng: &mut impl Rng) -> Result<UrnState> {
    check_q(q)?;
    if n == 0 {
        return Err(Error::EmptyTree);
    }
    let se = params.family() == Family::Se;
    let mut s = UrnState::INITIAL;
    while s.n < n {
        let units = params.weight_units(s.n);
        let total_mass = params.weighted(s.n as i64, units);
        debug_assert!(total_mass > 0.0, "urn with zero total weight");
        let p_red = params.weight_ratio(s.n_red as i64, s.s_red as i64, s.n as i64, units);
        let red_drawn = rng.random::<f64>() < p_red;
        let new_red = red_drawn != (rng.random::<f64>() < q);
        if red_drawn {
            s.s_red += 1;
        } else {
            s.s_blue += 1;
        }
        if new_red {
            s.n_red += 1;
            s.s_red += u64::from(se);
        } else {
            s.n_blue += 1;
            s.s_blue += u64::from(se);
        }
        s.n += 1;
    }
    Ok(s)
}

/// Expected replacement matrix with the replacement vectors in its columns.
pub fn replacement_matrix(params: &ModelParams, q: f64) -> Result<[[f64; 4]; 4]> {
    check_q(q)?;
    let a = params.alpha();
    let (keep, cross) = match params.family() {
        Family::Vsi => (a + 1.0 - q, q),
        Family::Se => (a + (1.0 - q) * (a + 1.0), q * (a + 1.0)),
    };
    Ok([
        [keep, cross, 0.0, 0.0],
        [cross, keep, 0.0, 0.0],
        [1.0 - q, q, 0.0, 0.0],
        [q, 1.0 - q, 0.0, 0.0],
    ])
}

/// Closed-form `(λ₁, λ₂)`: `(α+1, α+1−2q)` for VSI and
/// `(2α+1, 2α+1−2q(α+1))` for SE.
pub fn leading_eigenvalues(params: &ModelParams, q: f64) -> Result<(f64, f64)> {
    check_q(q)?;
    let a = params.alpha();
    Ok(match params.family() {
        Family::Vsi => (a + 1.0, a + 1.0 - 2.0 * q),
        Family::Se => (2.0 * a + 1.0, 2.0 * a + 1.0 - 2.0 * q * (a + 1.0)),
    })
}

/// `f(α)` as an exact fraction when α = −1/d.
fn critical_fraction(params: &ModelParams) -> Option<(u64, u64)> {
    let d = u64::from(params.neg_d()?);
    Some(match params.family() {
        Family::Vsi => (d - 1, 4 * d),
        Family::Se => (d - 2, 4 * (d - 1)),
    })
}

/// `f(α) = (α+1)/4` (VSI) or `(2α+1)/(4(α+1))` (SE).
pub fn critical_q(params: &ModelParams) -> f64 {
    if let Some((num, den)) = critical_fraction(params) {
        return num as f64 / den as f64;
    }
    let a = params.alpha();
    match params.family() {
        Family::Vsi => (a + 1.0) / 4.0,
        Family::Se => (2.0 * a + 1.0) / (4.0 * (a + 1.0)),
    }
}

/// Whether some `q ∈ [0, 1]` reaches `f(α)`. False for VSI with α > 3.
pub fn critical_q_reachable(params: &ModelParams) -> bool {
    critical_q(params) <= 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `q < f(α)`, `λ₁ < 2λ₂`.
    Superdiffusive,
    /// `q = f(α)`, `λ₁ = 2λ₂`.
    Critical,
    /// `q > f(α)`, `λ₁ > 2λ₂`.
    Diffusive,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::Superdiffusive => "Superdiffusive",
            Regime::Critical => "Critical",
            Regime::Diffusive => "Diffusive",
        };
        f.write_str(s)
    }
}

/// Tolerance for `q = f(α)` when α is not a negative reciprocal.
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

pub fn classify_regime(params: &ModelParams, q: f64) -> Result<Regime> {
    check_q(q)?;
    let f = critical_q(params);
    let ord = match params.alpha_spec() {
        // f is the correctly rounded fraction, so comparing against it
        // orders every other float exactly.
        AlphaSpec::NegativeReciprocal(_) => q.partial_cmp(&f).expect("q is finite"),
        AlphaSpec::NonNegative(_) => {
            if (q - f).abs() <= CRITICAL_TOLERANCE {
                Ordering::Equal
            } else {
                q.partial_cmp(&f).expect("q is finite")
            }
        }
    };
    Ok(match ord {
        Ordering::Less => Regime::Superdiffusive,
        Ordering::Equal => Regime::Critical,
        Ordering::Greater => Regime::Diffusive,
    })
}

fn to_matrix(m: &[[f64; 4]; 4]) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| m[i][j])
}

/// Splits off eigenvalues exposed by a row or column that is zero off the
/// diagonal (the permutation step of standard balancing). Returns those
/// eigenvalues and the indices of the remaining principal submatrix.
fn isolate_eigenvalues(m: &[[f64; 4]; 4]) -> (Vec<f64>, Vec<usize>) {
    let mut active: Vec<usize> = (0..4).collect();
    let mut isolated = Vec::new();
    'search: loop {
        for (pos, &j) in active.iter().enumerate() {
            let column_clear = active.iter().all(|&i| i == j || m[i][j] == 0.0);
            let row_clear = active.iter().all(|&k| k == j || m[j][k] == 0.0);
            if column_clear || row_clear {
                isolated.push(m[j][j]);
                active.remove(pos);
                continue 'search;
            }
        }
        return (isolated, active);
    }
}

/// All four eigenvalues, sorted descending: isolated eigenvalues are split
/// off by permutation and the rest come from a real Schur decomposition.
/// Fails if a complex pair appears.
pub fn numerical_eigenvalues(matrix: &[[f64; 4]; 4]) -> Result<[f64; 4]> {
    let (mut values, active) = isolate_eigenvalues(matrix);
    if !active.is_empty() {
        let sub = DMatrix::from_fn(active.len(), active.len(), |r, c| {
            matrix[active[r]][active[c]]
        });
        let scale = sub.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for z in sub.complex_eigenvalues().iter() {
            if z.im.abs() > 1e-9 * scale {
                return Err(Error::Invariant(format!(
                    "complex eigenvalue {z} in a replacement matrix"
                )));
            }
            values.push(z.re);
        }
    }
    let mut out: [f64; 4] = values.try_into().expect("four eigenvalues");
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// A right eigenvector for `lambda`, normalised so that its third component
/// is 1. When the eigenspace is two-dimensional (q = 0) the returned vector
/// is the member with equal third and fourth components.
pub fn right_eigenvector(matrix: &[[f64; 4]; 4], lambda: f64) -> Result<[f64; 4]> {
    let shifted = to_matrix(matrix) - Matrix4::identity() * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let null: Vec<[f64; 4]> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= 1e-10 * smax.max(1.0))
        .map(|(i, _)| [v_t[(i, 0)], v_t[(i, 1)], v_t[(i, 2)], v_t[(i, 3)]])
        .collect();
    match null.as_slice() {
        [v] => {
            if v[2].abs() < 1e-12 {
                return Err(Error::Invariant(
                    "eigenvector has zero count component".into(),
                ));
            }
            Ok(v.map(|x| x / v[2]))
        }
        [u, w] => {
            // Solve c₁u + c₂w with components 3 and 4 both equal to 1.
            let det = u[2] * w[3] - w[2] * u[3];
            if det.abs() < 1e-12 {
                return Err(Error::Invariant(
                    "degenerate two-dimensional eigenspace".into(),
                ));
            }
            let c1 = (w[3] - w[2]) / det;
            let c2 = (u[2] - u[3]) / det;
            Ok(std::array::from_fn(|i| c1 * u[i] + c2 * w[i]))
        }
        other => Err(Error::Invariant(format!(
            "eigenspace of dimension {} for lambda = {lambda}",
            other.len()
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub family: Family,
    pub alpha: f64,
    pub q: f64,
    pub matrix: [[f64; 4]; 4],
    pub lambda1: f64,
    pub lambda2: f64,
    pub f_alpha: f64,
    pub regime: Regime,
}

pub fn spectrum_report(params: &ModelParams, q: f64) -> Result<SpectrumReport> {
    let (lambda1, lambda2) = leading_eigenvalues(params, q)?;
    Ok(SpectrumReport {
        family: params.family(),
        alpha: params.alpha(),
        q,
        matrix: replacement_matrix(params, q)?,
        lambda1,
        lambda2,
        f_alpha: critical_q(params),
        regime: classify_regime(params, q)?,
    })
}
