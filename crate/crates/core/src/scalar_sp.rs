//! Single-criterion label setting from the source.
//!
//! One pass per lead criterion: Dijkstra on the lead weights, then a second
//! sweep in settled order that minimizes the other criterion over the
//! in-neighbors realizing the lead optimum (within a relative tolerance).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::costs::WeightedGraph;
use crate::error::{Error, Result};
use crate::roadmap::{EdgeId, NodeId, Roadmap};

/// Relative tolerance for membership in the lead argmin set.
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lead {
    Primary,
    Secondary,
}

/// Result of one lead pass: the optimal lead value, the best other-criterion
/// value among lead-optimal paths, and the predecessor edge realizing both.
#[derive(Debug, Clone)]
pub struct HalfLabels {
    pub lead: Vec<f64>,
    pub other: Vec<f64>,
    pub pred: Vec<Option<EdgeId>>,
    /// Nodes whose argmin set grew because of the tolerance.
    pub tolerance_ties: usize,
}

impl HalfLabels {
    /// Edge sequence from the source to `j` along the predecessor tree.
    pub fn path_edges(&self, roadmap: &Roadmap, j: NodeId) -> Option<Vec<EdgeId>> {
        if !self.lead.get(j)?.is_finite() {
            return None;
        }
        let mut edges = Vec::new();
        let mut cur = j;
        while let Some(e) = self.pred[cur] {
            edges.push(e);
            cur = roadmap.edge(e).from;
            if edges.len() > self.lead.len() {
                return None;
            }
        }
        edges.reverse();
        Some(edges)
    }
}

#[derive(Debug, Clone, Copy)]
struct HeapKey(f64);

impl PartialEq for HeapKey {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0).is_eq()
    }
}

impl Eq for HeapKey {}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Label-setting pass over explicit weight arrays.
pub fn dijkstra_pair_weights(
    roadmap: &Roadmap,
    lead_w: &[f64],
    other_w: &[f64],
    source: NodeId,
    tie_tol: f64,
) -> HalfLabels {
    let n = roadmap.node_count();
    let mut lead = vec![f64::INFINITY; n];
    let mut order = Vec::with_capacity(n);
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    lead[source] = 0.0;
    heap.push(Reverse((HeapKey(0.0), source)));

    while let Some(Reverse((HeapKey(d), i))) = heap.pop() {
        if done[i] || d > lead[i] {
            continue;
        }
        done[i] = true;
        order.push(i);
        for &e in roadmap.out_edges(i) {
            let j = roadmap.edge(e).to;
            let cand = d + lead_w[e];
            if cand < lead[j] {
                lead[j] = cand;
                heap.push(Reverse((HeapKey(cand), j)));
            }
        }
    }

    let mut rank = vec![usize::MAX; n];
    for (k, &j) in order.iter().enumerate() {
        rank[j] = k;
    }
    let mut other = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut tolerance_ties = 0;
    other[source] = 0.0;
    for &j in order.iter().skip(1) {
        let best = lead[j];
        let limit = best + tie_tol * best.abs();
        let mut exact_members = 0;
        let mut members = 0;
        for &e in roadmap.in_edges(j) {
            let i = roadmap.edge(e).from;
            if rank[i] >= rank[j] {
                continue;
            }
            let via = lead[i] + lead_w[e];
            if via > limit {
                continue;
            }
            members += 1;
            if via == best {
                exact_members += 1;
            }
            let cand = other[i] + other_w[e];
            if cand < other[j] {
                other[j] = cand;
                pred[j] = Some(e);
            }
        }
        if members != exact_members {
            tolerance_ties += 1;
        }
    }

    HalfLabels {
        lead,
        other,
        pred,
        tolerance_ties,
    }
}

/// One lead pass on a weighted graph.
pub fn dijkstra_pair(g: &WeightedGraph, lead: Lead, tie_tol: f64) -> HalfLabels {
    let rm = g.roadmap();
    match lead {
        Lead::Primary => {
            dijkstra_pair_weights(rm, g.primary(), g.secondary(), rm.source(), tie_tol)
        }
        Lead::Secondary => {
            dijkstra_pair_weights(rm, g.secondary(), g.primary(), rm.source(), tie_tol)
        }
    }
}

/// The four per-node values `U, Ṽ, V, Ũ` with their predecessor trees.
#[derive(Debug, Clone)]
pub struct ScalarLabels {
    /// Primary-optimal cost.
    pub u: Vec<f64>,
    /// Secondary cost of the secondary-cheapest primary-optimal path.
    pub v_tilde: Vec<f64>,
    /// Secondary-optimal cost.
    pub v: Vec<f64>,
    /// Primary cost of the primary-cheapest secondary-optimal path.
    pub u_tilde: Vec<f64>,
    pub pred_primary: Vec<Option<EdgeId>>,
    pub pred_secondary: Vec<Option<EdgeId>>,
    pub tolerance_ties: usize,
}

impl ScalarLabels {
    pub fn from_halves(primary: HalfLabels, secondary: HalfLabels) -> Self {
        Self {
            u: primary.lead,
            v_tilde: primary.other,
            pred_primary: primary.pred,
            v: secondary.lead,
            u_tilde: secondary.other,
            pred_secondary: secondary.pred,
            tolerance_ties: primary.tolerance_ties + secondary.tolerance_ties,
        }
    }

    /// Labels for explicit weight arrays; the two passes run concurrently.
    pub fn compute_weights(
        roadmap: &Roadmap,
        primary: &[f64],
        secondary: &[f64],
        tie_tol: f64,
    ) -> Self {
        let s = roadmap.source();
        let (p, q) = rayon::join(
            || dijkstra_pair_weights(roadmap, primary, secondary, s, tie_tol),
            || dijkstra_pair_weights(roadmap, secondary, primary, s, tie_tol),
        );
        Self::from_halves(p, q)
    }

    pub fn compute(g: &WeightedGraph, tie_tol: f64) -> Self {
        Self::compute_weights(g.roadmap(), g.primary(), g.secondary(), tie_tol)
    }

    pub fn is_reachable(&self, j: NodeId) -> bool {
        self.u[j].is_finite()
    }
}

/// Largest finite `Ṽ`, the budget that covers every node's front.
pub fn max_tilde_v(labels: &ScalarLabels) -> Result<f64> {
    labels
        .v_tilde
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .reduce(f64::max)
        .ok_or(Error::NothingReachable)
}
