//! Exact laws of `Δ(N)` at desk scale.
//!
//! [`exact_delta_distribution`] runs a forward recursion over the Markov
//! state. The state `(Δ₁, Δ₂)` at time `n` is stored at grid cell
//! `(n_red, s_red) = ((n + Δ₁)/2, (units(n) + Δ₂)/2)`, which removes the
//! parity gaps. [`enumerate_trees`] sums over every attachment and flip
//! sequence of an explicit tree, independently of the walk reduction.
//!
//! The recursion carries double-double masses and rounds once at the end, so
//! closed-form values such as `R_maj(3, q) = q/2` come out correctly rounded.

use std::collections::BTreeMap;
use std::io::Write;

use crate::ddouble::Dd;

use crate::error::{check_q, Error, Result};
use crate::params::{Family, ModelParams};
use crate::walk::DeltaState;

/// Default largest horizon for the `O(N³)` recursion.
pub const DEFAULT_CAP: u64 = 2000;

/// Largest tree size accepted by [`enumerate_trees`].
pub const ENUMERATION_LIMIT: u64 = 6;

const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    pub n: u64,
    /// `((Δ₁, Δ₂), probability)` sorted by key; zero-mass states are absent.
    pub entries: Vec<((i64, i64), f64)>,
    rmaj: f64,
}

fn rmaj_weight(d1: i64) -> f64 {
    match d1.signum() {
        -1 => 1.0,
        0 => 0.5,
        _ => 0.0,
    }
}

impl ExactDistribution {
    fn from_map(n: u64, map: BTreeMap<(i64, i64), f64>) -> Self {
        let entries: Vec<_> = map.into_iter().filter(|(_, p)| *p > 0.0).collect();
        let rmaj = entries.iter().fold(Dd::ZERO, |acc, ((d1, _), p)| {
            acc + Dd::prod(rmaj_weight(*d1), *p)
        });
        ExactDistribution {
            n,
            entries,
            rmaj: rmaj.to_f64(),
        }
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn prob(&self, d1: i64, d2: i64) -> f64 {
        self.entries
            .binary_search_by(|(k, _)| k.cmp(&(d1, d2)))
            .map_or(0.0, |i| self.entries[i].1)
    }

    /// Law of `Δ₁(N)`.
    pub fn d1_marginal(&self) -> BTreeMap<i64, f64> {
        let mut m = BTreeMap::new();
        for ((d1, _), p) in &self.entries {
            *m.entry(*d1).or_insert(0.0) += p;
        }
        m
    }

    /// `P(Δ₁ < 0) + ½·P(Δ₁ = 0)`.
    pub fn rmaj(&self) -> f64 {
        self.rmaj
    }

    /// Largest per-state absolute difference over the union of supports.
    pub fn max_abs_diff(&self, other: &ExactDistribution) -> f64 {
        let keys = self.entries.iter().chain(&other.entries).map(|(k, _)| *k);
        keys.map(|(a, b)| (self.prob(a, b) - other.prob(a, b)).abs())
            .fold(0.0, f64::max)
    }

    /// CSV `d1,d2,prob` after a `#` metadata line.
    pub fn write_csv<W: Write>(&self, mut out: W, params: &ModelParams, q: f64) -> Result<()> {
        writeln!(
            out,
            "# family={} alpha={} q={} N={}",
            params.family(),
            params.alpha_spec(),
            q,
            self.n
        )?;
        writeln!(out, "d1,d2,prob")?;
        for ((d1, d2), p) in &self.entries {
            writeln!(out, "{d1},{d2},{p:e}")?;
        }
        Ok(())
    }
}

/// Weight `count + α·units` in double-double precision, scaled by `d` when
/// α = −1/d so that it stays an exact integer.
fn weight_dd(params: &ModelParams, count: i64, units: i64) -> Dd {
    match params.neg_d() {
        Some(d) => Dd::from_f64((i64::from(d) * count - units) as f64),
        None => Dd::prod(params.alpha(), units as f64) + Dd::from_f64(count as f64),
    }
}

pub fn exact_delta_distribution(params: &ModelParams, q: f64, n: u64) -> Result<ExactDistribution> {
    exact_delta_distribution_with_cap(params, q, n, DEFAULT_CAP)
}

pub fn exact_delta_distribution_with_cap(
    params: &ModelParams,
    q: f64,
    n: u64,
    cap: u64,
) -> Result<ExactDistribution> {
    check_q(q)?;
    if n == 0 {
        return Err(Error::EmptyTree);
    }
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    let k = params.family().weight_per_edge() as usize;
    let se = usize::from(params.family() == Family::Se);
    let final_units = k * (n as usize - 1);
    let width = final_units + 1;
    // cur[i * width + j]: mass at n_red = i, s_red = j.
    let zero = Dd::ZERO;
    let (keep, flip) = (Dd::diff(1.0, q), Dd::from_f64(q));
    let mut cur = vec![zero; (n as usize + 1) * width];
    let mut next = cur.clone();
    cur[width] = Dd::ONE; // n_red = 1, s_red = 0

    for t in 1..n as usize {
        let units = k * (t - 1);
        let inv_total = Dd::recip(weight_dd(params, t as i64, units as i64));
        for cell in next[..(t + 2) * width].iter_mut() {
            *cell = zero;
        }
        for i in 0..=t {
            let row = i * width;
            for j in 0..=units {
                let mass = cur[row + j];
                if mass.is_zero() {
                    continue;
                }
                let red_w = weight_dd(params, i as i64, j as i64);
                let blue_w = weight_dd(params, (t - i) as i64, (units - j) as i64);
                let (red, blue) = if blue_w.is_zero() {
                    (mass, zero)
                } else if red_w.is_zero() {
                    (zero, mass)
                } else {
                    (mass * (red_w * inv_total), mass * (blue_w * inv_total))
                };
                // parent red: s_red + 1
                next[(i + 1) * width + j + 1 + se] += red * keep;
                next[i * width + j + 1] += red * flip;
                // parent blue
                next[(i + 1) * width + j + se] += blue * flip;
                next[i * width + j] += blue * keep;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }

    let n_i = n as i64;
    let mut entries = Vec::new();
    let mut rmaj = zero;
    for i in 0..=n as usize {
        for j in 0..=final_units {
            let p = cur[i * width + j];
            if !p.is_zero() {
                let d1 = 2 * i as i64 - n_i;
                rmaj += p * rmaj_weight(d1);
                entries.push(((d1, 2 * j as i64 - final_units as i64), p.to_f64()));
            }
        }
    }
    entries.sort_by_key(|e| e.0);
    let dist = ExactDistribution {
        n,
        entries,
        rmaj: rmaj.to_f64(),
    };
    let total = dist.total();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::Invariant(format!(
            "exact distribution has total mass {total}"
        )));
    }
    Ok(dist)
}

/// Exact `R_maj(N, q)`.
pub fn exact_rmaj(params: &ModelParams, q: f64, n: u64) -> Result<f64> {
    Ok(exact_delta_distribution(params, q, n)?.rmaj())
}

struct Enumerator<'a> {
    params: &'a ModelParams,
    q: f64,
    target: usize,
    outdeg: Vec<i64>,
    red: Vec<bool>,
    out: BTreeMap<(i64, i64), f64>,
}

impl Enumerator<'_> {
    fn weight_degree(&self, v: usize) -> i64 {
        match self.params.family() {
            Family::Vsi => self.outdeg[v],
            Family::Se => self.outdeg[v] + i64::from(v != 0),
        }
    }

    fn visit(&mut self, prob: f64) {
        let n = self.red.len();
        if n == self.target {
            let (mut d1, mut d2) = (0, 0);
            for v in 0..n {
                let s = if self.red[v] { 1 } else { -1 };
                d1 += s;
                d2 += s * self.weight_degree(v);
            }
            *self.out.entry((d1, d2)).or_insert(0.0) += prob;
            return;
        }
        let total_units: i64 = (0..n).map(|v| self.weight_degree(v)).sum();
        for parent in 0..n {
            let w = self
                .params
                .weight_ratio(1, self.weight_degree(parent), n as i64, total_units);
            if w <= 0.0 {
                continue;
            }
            for (flip, pf) in [(false, 1.0 - self.q), (true, self.q)] {
                if pf == 0.0 {
                    continue;
                }
                self.outdeg[parent] += 1;
                self.outdeg.push(0);
                self.red.push(self.red[parent] != flip);
                self.visit(prob * w * pf);
                self.red.pop();
                self.outdeg.pop();
                self.outdeg[parent] -= 1;
            }
        }
    }
}

/// Law of `Δ(N)` by summing over all `(N−1)!·2^(N−1)` attachment/flip
/// sequences of an explicit colored tree.
pub fn enumerate_trees(params: &ModelParams, q: f64, n: u64) -> Result<ExactDistribution> {
    check_q(q)?;
    if n == 0 {
        return Err(Error::EmptyTree);
    }
    if n > ENUMERATION_LIMIT {
        return Err(Error::CapExceeded {
            n,
            cap: ENUMERATION_LIMIT,
        });
    }
    let mut e = Enumerator {
        params,
        q,
        target: n as usize,
        outdeg: vec![0],
        red: vec![true],
        out: BTreeMap::new(),
    };
    e.visit(1.0);
    Ok(ExactDistribution::from_map(n, e.out))
}

/// Exact law of the parent vectors of `N`-vertex trees, keyed by
/// `parent[2..=N]`. Used to check the tree sampler shape by shape.
pub fn enumerate_shapes(params: &ModelParams, n: u64) -> Result<BTreeMap<Vec<u32>, f64>> {
    if n == 0 {
        return Err(Error::EmptyTree);
    }
    if n > ENUMERATION_LIMIT {
        return Err(Error::CapExceeded {
            n,
            cap: ENUMERATION_LIMIT,
        });
    }
    fn go(
        params: &ModelParams,
        target: usize,
        parents: &mut Vec<u32>,
        outdeg: &mut Vec<i64>,
        prob: f64,
        out: &mut BTreeMap<Vec<u32>, f64>,
    ) {
        let n = outdeg.len();
        if n == target {
            out.insert(parents.clone(), prob);
            return;
        }
        let deg = |outdeg: &[i64], v: usize| match params.family() {
            Family::Vsi => outdeg[v],
            Family::Se => outdeg[v] + i64::from(v != 0),
        };
        let total: i64 = (0..n).map(|v| deg(outdeg, v)).sum();
        for v in 0..n {
            let w = params.weight_ratio(1, deg(outdeg, v), n as i64, total);
            if w <= 0.0 {
                continue;
            }
            outdeg[v] += 1;
            outdeg.push(0);
            parents.push(v as u32 + 1);
            go(params, target, parents, outdeg, prob * w, out);
            parents.pop();
            outdeg.pop();
            outdeg[v] -= 1;
        }
    }
    let mut out = BTreeMap::new();
    go(
        params,
        n as usize,
        &mut Vec::new(),
        &mut vec![0],
        1.0,
        &mut out,
    );
    Ok(out)
}

/// Checks that every state in the support satisfies the walk invariants.
pub fn validate_support(dist: &ExactDistribution, params: &ModelParams) -> Result<()> {
    for ((d1, d2), _) in &dist.entries {
        DeltaState::new(dist.n, *d1, *d2).validate(params)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::AlphaSpec;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-14
    }

    #[test]
    fn one_vertex() {
        let d = exact_delta_distribution(&ModelParams::se(2.0).unwrap(), 0.4, 1).unwrap();
        assert_eq!(d.entries, vec![((1, 0), 1.0)]);
    }

    #[test]
    fn two_vertices() {
        let q = 0.3;
        let vsi = exact_delta_distribution(&ModelParams::vsi(5.0).unwrap(), q, 2).unwrap();
        assert!(close(vsi.prob(2, 1), 1.0 - q) && close(vsi.prob(0, 1), q));
        let se = exact_delta_distribution(&ModelParams::se(5.0).unwrap(), q, 2).unwrap();
        assert!(close(se.prob(2, 2), 1.0 - q) && close(se.prob(0, 0), q));
        assert_eq!(se.entries.len(), 2);
    }

    #[test]
    fn three_vertices_uniform() {
        let d = exact_delta_distribution(&ModelParams::vsi(0.0).unwrap(), 0.2, 3).unwrap();
        let m = d.d1_marginal();
        // (1−q)², (1−q)q + q/2, q/2
        assert!(close(m[&3], 0.64));
        assert!(close(m[&1], 0.26));
        assert!(close(m[&-1], 0.10));
        assert_eq!(d.rmaj(), 0.1);
    }

    #[test]
    fn rmaj_of_two_vertices_is_half_q() {
        let cases = [
            ModelParams::vsi(0.0).unwrap(),
            ModelParams::se(3.0).unwrap(),
            ModelParams::new(Family::Se, AlphaSpec::NegativeReciprocal(3)).unwrap(),
        ];
        for p in cases {
            for q in [0.2, 0.3, 0.7, 1.0 / 3.0] {
                assert_eq!(exact_rmaj(&p, q, 2).unwrap(), q / 2.0);
            }
            assert_eq!(exact_rmaj(&p, 0.0, 57).unwrap(), 0.0);
        }
    }

    #[test]
    fn cap_and_domain_errors() {
        let p = ModelParams::vsi(0.0).unwrap();
        assert_eq!(
            exact_delta_distribution_with_cap(&p, 0.1, 11, 10),
            Err(Error::CapExceeded { n: 11, cap: 10 })
        );
        assert!(exact_delta_distribution(&p, 0.1, 0).is_err());
        assert!(exact_delta_distribution(&p, -0.1, 5).is_err());
        assert!(enumerate_trees(&p, 0.1, 7).is_err());
    }

    #[test]
    fn support_satisfies_walk_invariants() {
        for p in [
            ModelParams::vsi(1.0).unwrap(),
            ModelParams::new(Family::Vsi, AlphaSpec::NegativeReciprocal(2)).unwrap(),
            ModelParams::new(Family::Se, AlphaSpec::NegativeReciprocal(3)).unwrap(),
        ] {
            let d = exact_delta_distribution(&p, 0.3, 60).unwrap();
            validate_support(&d, &p).unwrap();
            assert!((d.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn enumeration_is_complete() {
        let d = enumerate_trees(&ModelParams::vsi(1.0).unwrap(), 0.3, 5).unwrap();
        assert!((d.total() - 1.0).abs() < 1e-12);
        let shapes = enumerate_shapes(&ModelParams::vsi(0.0).unwrap(), 5).unwrap();
        assert_eq!(shapes.len(), 24);
        assert!(shapes.values().all(|p| close(*p, 1.0 / 24.0)));
    }

    #[test]
    fn enumeration_agrees_with_recursion_for_binary_trees() {
        let p = ModelParams::new(Family::Se, AlphaSpec::NegativeReciprocal(3)).unwrap();
        let e = enumerate_trees(&p, 0.1, 6).unwrap();
        let r = exact_delta_distribution(&p, 0.1, 6).unwrap();
        assert!(e.max_abs_diff(&r) < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let p = ModelParams::vsi(0.0).unwrap();
        let d = exact_delta_distribution(&p, 0.5, 2).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf, &p, 0.5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# family=vsi alpha=0 q=0.5 N=2");
        assert_eq!(lines[1], "d1,d2,prob");
        assert_eq!(lines[2], "0,1,5e-1");
        assert_eq!(lines.len(), 4);
    }
}
