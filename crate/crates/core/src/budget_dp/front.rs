use serde::{Deserialize, Serialize};

use super::BudgetTable;
use crate::error::{Error, Result};
use crate::roadmap::{EdgeId, NodeId};
use crate::scalar_sp::ScalarLabels;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub level: usize,
    pub budget: f64,
    pub primary: f64,
    pub slackness: f64,
}

/// Budget levels at which the constrained value strictly drops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub node: NodeId,
    pub delta: f64,
    pub points: Vec<FrontPoint>,
}

impl ParetoFront {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Best primary value reachable with budget level at most `level`.
    pub fn value_at_level(&self, level: usize) -> f64 {
        self.points
            .iter()
            .take_while(|p| p.level <= level)
            .last()
            .map_or(f64::INFINITY, |p| p.primary)
    }
}

/// A table entry's path replayed against the true and quantized costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReplay {
    pub node: NodeId,
    pub level: usize,
    pub budget: f64,
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
    /// Accumulated primary cost.
    pub primary: f64,
    /// Accumulated true secondary cost.
    pub secondary: f64,
    /// Accumulated quantized secondary cost.
    pub quantized_secondary: f64,
    /// Slackness carried by the table for this entry.
    pub slackness: f64,
}

impl PathReplay {
    /// Budget left unused by the true secondary cost.
    pub fn unused_budget(&self) -> f64 {
        self.budget - self.secondary
    }
}

pub fn extract_pareto(table: &BudgetTable, j: NodeId) -> Result<ParetoFront> {
    if j >= table.n {
        return Err(Error::UnknownNode(j));
    }
    if !table.is_reachable(j) {
        return Err(Error::Unreachable(j));
    }
    let mut points = Vec::new();
    let mut current = f64::INFINITY;
    for level in 0..=table.levels() {
        let w = table.w(j, level);
        if w < current {
            current = w;
            points.push(FrontPoint {
                level,
                budget: table.grid.budget(level),
                primary: w,
                slackness: table.slack(j, level),
            });
        }
    }
    Ok(ParetoFront {
        node: j,
        delta: table.grid.delta,
        points,
    })
}

pub fn extract_path(table: &BudgetTable, j: NodeId, level: usize) -> Result<PathReplay> {
    if j >= table.n {
        return Err(Error::UnknownNode(j));
    }
    if level > table.levels() || !table.w(j, level).is_finite() {
        return Err(Error::InfiniteEntry { node: j, level });
    }
    let q = &table.quantized;
    let g = q.graph();
    let mut edges = Vec::new();
    let (mut cur, mut lvl) = (j, level);
    while cur != table.source {
        let e = table.pred(cur, lvl).ok_or(Error::InfiniteEntry {
            node: cur,
            level: lvl,
        })?;
        edges.push(e);
        lvl -= q.level(e);
        cur = g.edge(e).from;
    }
    edges.reverse();
    let mut nodes = vec![table.source];
    nodes.extend(edges.iter().map(|&e| g.edge(e).to));
    let (primary, secondary) = g.path_costs(&edges);
    let quantized_secondary = q.delta() * edges.iter().map(|&e| q.level(e) as f64).sum::<f64>();
    Ok(PathReplay {
        node: j,
        level,
        budget: table.grid.budget(level),
        nodes,
        edges,
        primary,
        secondary,
        quantized_secondary,
        slackness: table.slack(j, level),
    })
}

/// Upper bound `min(Ṽ_j / c_min, Ũ_j / C_min)` on the transition count of
/// Pareto-optimal paths to `j`. Quantization then overstates the secondary
/// cost of such a path by at most `K * delta`.
pub fn transition_bound(
    labels: &ScalarLabels,
    j: NodeId,
    c_min: f64,
    big_c_min: f64,
) -> Result<f64> {
    if !(c_min > 0.0 && big_c_min > 0.0) {
        return Err(Error::InvalidGraph(format!(
            "minimum weights must be positive (c_min {c_min}, C_min {big_c_min})"
        )));
    }
    let (vt, ut) = (
        *labels.v_tilde.get(j).ok_or(Error::UnknownNode(j))?,
        labels.u_tilde[j],
    );
    if !vt.is_finite() {
        return Err(Error::Unreachable(j));
    }
    Ok((vt / c_min).min(ut / big_c_min))
}
