//! Tree families and the attachment parameter α.
//!
//! A vertex `v` of a very simple increasing (VSI) tree attracts the next
//! vertex with weight `α·deg⁺(v) + 1`; in a shape exchangeable (SE) tree the
//! weight is `α·deg(v) + 1`. Nonnegative α is stored as a float. Negative α
//! is only meaningful as `−1/d` and is carried as the exact integer `d`, so
//! every weight `α·k + 1` can be evaluated as the integer ratio `(d − k)/d`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Very simple increasing trees: weight depends on the outdegree.
    Vsi,
    /// Shape exchangeable trees: weight depends on the full degree.
    Se,
}

impl Family {
    /// Attachment-weight units contributed per edge: one outdegree (VSI) or
    /// two degrees (SE).
    pub fn weight_per_edge(self) -> i64 {
        match self {
            Family::Vsi => 1,
            Family::Se => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Vsi => "vsi",
            Family::Se => "se",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vsi" => Ok(Family::Vsi),
            "se" => Ok(Family::Se),
            other => Err(Error::Parse(format!(
                "unknown tree family {other:?} (expected vsi or se)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AlphaSpec {
    NonNegative(f64),
    /// α = −1/d.
    NegativeReciprocal(u32),
}

impl AlphaSpec {
    pub fn value(self) -> f64 {
        match self {
            AlphaSpec::NonNegative(a) => a,
            AlphaSpec::NegativeReciprocal(d) => -1.0 / f64::from(d),
        }
    }
}

impl fmt::Display for AlphaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaSpec::NonNegative(a) => write!(f, "{a}"),
            AlphaSpec::NegativeReciprocal(d) => write!(f, "-1/{d}"),
        }
    }
}

/// Validated tree family plus α.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    family: Family,
    alpha: AlphaSpec,
}

impl ModelParams {
    pub fn new(family: Family, alpha: AlphaSpec) -> Result<Self> {
        match alpha {
            AlphaSpec::NonNegative(a) => {
                if !a.is_finite() {
                    return Err(Error::InvalidParams(format!(
                        "alpha must be finite, got {a}"
                    )));
                }
                if a < 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "negative alpha {a} must be given as -1/d via its integer d"
                    )));
                }
            }
            AlphaSpec::NegativeReciprocal(d) => {
                let min_d = match family {
                    Family::Vsi => 2,
                    Family::Se => 3,
                };
                if d < min_d {
                    return Err(Error::InvalidParams(format!(
                        "{family} trees with alpha = -1/d need d >= {min_d}, got d = {d}"
                    )));
                }
            }
        }
        // -0.0 compares equal to 0.0 but prints oddly; normalise it.
        let alpha = match alpha {
            AlphaSpec::NonNegative(a) => AlphaSpec::NonNegative(a + 0.0),
            other => other,
        };
        Ok(ModelParams { family, alpha })
    }

    pub fn vsi(alpha: f64) -> Result<Self> {
        Self::new(Family::Vsi, AlphaSpec::NonNegative(alpha))
    }

    pub fn se(alpha: f64) -> Result<Self> {
        Self::new(Family::Se, AlphaSpec::NonNegative(alpha))
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn alpha_spec(&self) -> AlphaSpec {
        self.alpha
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.value()
    }

    /// The exact `d` when α = −1/d.
    pub fn neg_d(&self) -> Option<u32> {
        match self.alpha {
            AlphaSpec::NegativeReciprocal(d) => Some(d),
            AlphaSpec::NonNegative(_) => None,
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.alpha, AlphaSpec::NonNegative(a) if a == 0.0)
    }

    /// Total weight units (outdegree or degree sum) of an `n`-vertex tree.
    pub fn weight_units(&self, n: u64) -> i64 {
        self.family.weight_per_edge() * (n as i64 - 1)
    }

    /// `count + α·units`, exact up to a single rounding for α = −1/d.
    pub fn weighted(&self, count: i64, units: i64) -> f64 {
        match self.alpha {
            AlphaSpec::NonNegative(a) => count as f64 + a * units as f64,
            AlphaSpec::NegativeReciprocal(d) => {
                let d = i64::from(d);
                (d * count - units) as f64 / d as f64
            }
        }
    }

    /// `d·(count − units/d)` for α = −1/d.
    pub(crate) fn scaled_weight(&self, count: i64, units: i64) -> Option<i64> {
        self.neg_d().map(|d| i64::from(d) * count - units)
    }

    /// `a/b` for two weights; one rounding when α = −1/d.
    pub(crate) fn weight_ratio(
        &self,
        count_a: i64,
        units_a: i64,
        count_b: i64,
        units_b: i64,
    ) -> f64 {
        match self.neg_d() {
            Some(d) => {
                let d = i64::from(d);
                (d * count_a - units_a) as f64 / (d * count_b - units_b) as f64
            }
            None => self.weighted(count_a, units_a) / self.weighted(count_b, units_b),
        }
    }

    /// Single-vertex attachment weight `α·k + 1` where `k` is the
    /// family-relevant degree.
    pub fn vertex_weight(&self, degree: u64) -> f64 {
        self.weighted(1, degree as i64)
    }

    /// Total attachment weight `Z_α(n)·n` of an `n`-vertex tree.
    pub fn total_weight(&self, n: u64) -> f64 {
        self.weighted(n as i64, self.weight_units(n))
    }

    /// Combined process `Δ₁ + α·Δ₂`.
    pub fn combined(&self, d1: i64, d2: i64) -> f64 {
        self.weighted(d1, d2)
    }

    /// Limit of `Z_α(n)` as `n → ∞`: α+1 (VSI) or 2α+1 (SE).
    pub fn z_limit(&self) -> f64 {
        self.family.weight_per_edge() as f64 * self.alpha() + 1.0
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} alpha={}", self.family, self.alpha)
    }
}
