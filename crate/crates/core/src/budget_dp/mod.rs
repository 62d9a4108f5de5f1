//! Budget-augmented dynamic programming over quantized secondary costs.
//!
//! Secondary edge costs are rounded up to multiples of `delta`, so every
//! budget is an integer level and a transition consumes an integer number of
//! levels. The augmented graph is then acyclic in the level coordinate and a
//! single ascending sweep over levels fills the constrained value table.

mod front;
mod pipeline;
mod sweep;

pub use front::{
    extract_pareto, extract_path, transition_bound, FrontPoint, ParetoFront, PathReplay,
};
pub use pipeline::{
    plan, plan_with_labels, refine_doubling, BudgetPolicy, Plan, PlanOptions, PlanTimings,
    Refinement, RefinementRound,
};
pub use sweep::{sweep, sweep_level, BudgetTable, SweepOptions, DEFAULT_MAX_ENTRIES};

use serde::{Deserialize, Serialize};

use crate::costs::WeightedGraph;
use crate::error::{Error, Result};
use crate::roadmap::EdgeId;

/// Relative guard keeping exact multiples of `delta` from rounding up.
pub const CEIL_GUARD: f64 = 1e-9;

/// Largest per-edge level count accepted by [`quantize`].
pub const MAX_EDGE_LEVELS: f64 = (1u64 << 31) as f64;

/// Budget levels `0, delta, 2 delta, ..., levels * delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetGrid {
    pub delta: f64,
    pub levels: usize,
}

impl BudgetGrid {
    pub fn new(delta: f64, levels: usize) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidBudget(format!("delta {delta}")));
        }
        if levels == 0 {
            return Err(Error::InvalidBudget(
                "at least one budget level required".into(),
            ));
        }
        Ok(Self { delta, levels })
    }

    pub fn max_budget(&self) -> f64 {
        self.budget(self.levels)
    }

    pub fn budget(&self, level: usize) -> f64 {
        level as f64 * self.delta
    }
}

/// `delta = target / m` with `m` levels.
pub fn choose_delta(v_tilde_target: f64, m: usize) -> Result<BudgetGrid> {
    if !v_tilde_target.is_finite() {
        return Err(Error::InvalidBudget("target budget is unreachable".into()));
    }
    if !(v_tilde_target > 0.0) {
        return Err(Error::InvalidBudget(format!(
            "target budget {v_tilde_target} must be positive"
        )));
    }
    BudgetGrid::new(v_tilde_target / m as f64, m)
}

/// Secondary costs rounded up to whole budget levels.
#[derive(Debug, Clone)]
pub struct QuantizedGraph {
    graph: WeightedGraph,
    delta: f64,
    levels: Vec<u32>,
}

impl QuantizedGraph {
    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Level cost of every edge.
    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn level(&self, e: EdgeId) -> usize {
        self.levels[e] as usize
    }

    /// Rounded-up secondary cost `delta * q`.
    pub fn quantized_cost(&self, e: EdgeId) -> f64 {
        self.delta * self.levels[e] as f64
    }

    /// Level costs as floats, for running label setting on the quantized instance.
    pub fn levels_f64(&self) -> Vec<f64> {
        self.levels.iter().map(|&q| q as f64).collect()
    }
}

/// Level count `ceil(c / delta)` with a relative guard so that exact
/// multiples are not inflated by representation error.
pub fn quantize_cost(c: f64, delta: f64) -> f64 {
    let ratio = c / delta;
    (ratio - CEIL_GUARD * ratio).ceil()
}

pub fn quantize(g: &WeightedGraph, delta: f64) -> Result<QuantizedGraph> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidBudget(format!("delta {delta}")));
    }
    let levels = g
        .secondary()
        .iter()
        .enumerate()
        .map(|(edge, &c)| {
            let q = quantize_cost(c, delta).max(1.0);
            if !(q <= MAX_EDGE_LEVELS) {
                return Err(Error::LevelOverflow {
                    edge,
                    cost: c,
                    ratio: c / delta,
                });
            }
            Ok(q as u32)
        })
        .collect::<Result<_>>()?;
    Ok(QuantizedGraph {
        graph: g.clone(),
        delta,
        levels,
    })
}
