//! Growing recursive trees with exact attachment laws.
//!
//! Parent sampling runs in expected constant time with one of three
//! auxiliary structures:
//!
//! * α = 0: a uniform vertex;
//! * α > 0: a two-stage mixture between a uniform vertex (total mass `n`) and
//!   a uniform entry of a flat list of edge endpoints (total mass `α·slots`);
//! * α = −1/d: a list holding `d·weight(v)` free slots per vertex, sampled
//!   uniformly and consumed by swap-removal.

use rand::Rng;

use crate::error::{Error, Result};
use crate::params::{Family, ModelParams};

/// Vertex identifier, 1-based. The root is vertex 1.
pub type VertexId = u32;

#[derive(Debug, Clone, PartialEq)]
enum Sampler {
    Uniform,
    /// One entry per unit of weight-carrying degree.
    Endpoints(Vec<VertexId>),
    /// `d − k` entries for a vertex of relevant degree `k`.
    FreeSlots(Vec<VertexId>),
}

#[derive(Debug, Clone, Copy)]
struct Draw {
    vertex: VertexId,
    slot: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeState {
    params: ModelParams,
    /// `parent[v]` for `v ≥ 2`; entries 0 and 1 are unused.
    parent: Vec<VertexId>,
    /// `outdeg[v]` for `v ≥ 1`; entry 0 is unused.
    outdeg: Vec<u32>,
    sampler: Sampler,
}

impl TreeState {
    /// A single root vertex.
    pub fn new(params: ModelParams) -> Self {
        let sampler = match params.neg_d() {
            Some(d) => Sampler::FreeSlots(vec![1; d as usize]),
            None if params.is_uniform() => Sampler::Uniform,
            None => Sampler::Endpoints(Vec::new()),
        };
        TreeState {
            params,
            parent: vec![0, 0],
            outdeg: vec![0, 0],
            sampler,
        }
    }

    /// Rebuilds a tree from `parents[k]` for `k = 2..=n` (entries 0 and 1 ignored).
    pub fn from_parents(params: ModelParams, parents: &[VertexId]) -> Result<Self> {
        let mut tree = TreeState::new(params);
        for (k, &p) in parents.iter().enumerate().skip(2) {
            if p == 0 || p as usize >= k {
                return Err(Error::Parse(format!(
                    "vertex {k} has parent {p}; parents must precede their children"
                )));
            }
            tree.attach(p)?;
        }
        Ok(tree)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.parent.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        (v >= 2 && (v as usize) < self.parent.len()).then(|| self.parent[v as usize])
    }

    /// Parent array indexed by vertex id (entries 0 and 1 are 0).
    pub fn parents(&self) -> &[VertexId] {
        &self.parent
    }

    pub fn outdegree(&self, v: VertexId) -> u32 {
        self.outdeg[v as usize]
    }

    pub fn degree(&self, v: VertexId) -> u32 {
        self.outdeg[v as usize] + u32::from(v != 1)
    }

    /// The degree that enters the attachment weight for this family.
    pub fn weight_degree(&self, v: VertexId) -> u32 {
        match self.params.family() {
            Family::Vsi => self.outdegree(v),
            Family::Se => self.degree(v),
        }
    }

    /// `P(n+1 ∼ v | Tₙ)` for `v = 1..=n`, at index `v − 1`.
    pub fn attachment_distribution(&self) -> Vec<f64> {
        let n = self.len() as u64;
        let units = self.params.weight_units(n);
        (1..=n as VertexId)
            .map(|v| {
                let k = i64::from(self.weight_degree(v));
                self.params.weight_ratio(1, k, n as i64, units)
            })
            .collect()
    }

    fn draw(&self, rng: &mut impl Rng) -> Draw {
        let n = self.len() as VertexId;
        match &self.sampler {
            Sampler::Uniform => Draw {
                vertex: rng.random_range(1..=n),
                slot: None,
            },
            Sampler::Endpoints(slots) => {
                let total = f64::from(n) + self.params.alpha() * slots.len() as f64;
                let u: f64 = rng.random();
                if slots.is_empty() || u * total < f64::from(n) {
                    Draw {
                        vertex: rng.random_range(1..=n),
                        slot: None,
                    }
                } else {
                    Draw {
                        vertex: slots[rng.random_range(0..slots.len())],
                        slot: None,
                    }
                }
            }
            Sampler::FreeSlots(slots) => {
                assert!(!slots.is_empty(), "free-slot list exhausted");
                let i = rng.random_range(0..slots.len());
                Draw {
                    vertex: slots[i],
                    slot: Some(i),
                }
            }
        }
    }

    /// Samples the parent of vertex `n + 1` without modifying the tree.
    pub fn sample_parent(&self, rng: &mut impl Rng) -> VertexId {
        self.draw(rng).vertex
    }

    /// Samples a parent, attaches vertex `n + 1` to it, and returns the parent.
    pub fn grow_step(&mut self, rng: &mut impl Rng) -> VertexId {
        let draw = self.draw(rng);
        self.attach_at(draw.vertex, draw.slot);
        draw.vertex
    }

    /// Attaches vertex `n + 1` to `parent`. Fails if `parent` does not exist
    /// or has zero attachment weight.
    pub fn attach(&mut self, parent: VertexId) -> Result<VertexId> {
        if parent == 0 || parent as usize > self.len() {
            return Err(Error::InvalidArgument(format!(
                "vertex {parent} is not in a tree of {} vertices",
                self.len()
            )));
        }
        let slot = match &self.sampler {
            Sampler::FreeSlots(slots) => {
                Some(slots.iter().rposition(|&v| v == parent).ok_or_else(|| {
                    Error::InvalidArgument(format!("vertex {parent} has no free attachment slot"))
                })?)
            }
            _ => None,
        };
        self.attach_at(parent, slot);
        Ok(self.len() as VertexId)
    }

    fn attach_at(&mut self, parent: VertexId, slot: Option<usize>) {
        let child = self.len() as VertexId + 1;
        self.parent.push(parent);
        self.outdeg.push(0);
        self.outdeg[parent as usize] += 1;
        let family = self.params.family();
        match &mut self.sampler {
            Sampler::Uniform => {}
            Sampler::Endpoints(slots) => {
                slots.push(parent);
                if family == Family::Se {
                    slots.push(child);
                }
            }
            Sampler::FreeSlots(slots) => {
                let d = self.params.neg_d().expect("free slots imply alpha = -1/d");
                slots.swap_remove(slot.expect("free-slot draw carries its index"));
                let fresh = match family {
                    Family::Vsi => d,
                    Family::Se => d - 1,
                };
                slots.extend(std::iter::repeat_n(child, fresh as usize));
            }
        }
    }

    /// Parent-array text: line 1 is the vertex count, line `k ≥ 2` is `parent[k]`.
    pub fn to_parent_text(&self) -> String {
        let mut out = String::with_capacity(self.len() * 8);
        out.push_str(&self.len().to_string());
        out.push('\n');
        for &p in &self.parent[2..] {
            out.push_str(&p.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_parent_text(params: ModelParams, text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("missing vertex count".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("vertex count: {e}")))?;
        if n == 0 {
            return Err(Error::EmptyTree);
        }
        let mut parents = vec![0; 2];
        for line in lines {
            parents.push(
                line.parse()
                    .map_err(|e| Error::Parse(format!("parent entry {line:?}: {e}")))?,
            );
        }
        if parents.len() != n + 1 {
            return Err(Error::Parse(format!(
                "expected {} parent lines, found {}",
                n - 1,
                parents.len() - 2
            )));
        }
        Self::from_parents(params, &parents)
    }

    #[cfg(test)]
    fn free_slot_count(&self) -> Option<usize> {
        match &self.sampler {
            Sampler::FreeSlots(s) => Some(s.len()),
            _ => None,
        }
    }
}

/// Grows a tree of `n` vertices.
pub fn grow(params: ModelParams, n: usize, rng: &mut impl Rng) -> Result<TreeState> {
    if n == 0 {
        return Err(Error::EmptyTree);
    }
    let mut tree = TreeState::new(params);
    tree.parent.reserve(n);
    tree.outdeg.reserve(n);
    for _ in 1..n {
        tree.grow_step(rng);
    }
    Ok(tree)
}
