use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    extract_pareto, extract_path, quantize, sweep, transition_bound, BudgetGrid, BudgetTable,
    FrontPoint, ParetoFront, PathReplay, SweepOptions,
};
use crate::costs::WeightedGraph;
use crate::error::{Error, Result};
use crate::roadmap::NodeId;
use crate::scalar_sp::{ScalarLabels, DEFAULT_TIE_TOL};

/// How the budget step and the number of levels are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BudgetPolicy {
    /// `delta = Ṽ_target / m`. The table is extended past `m` levels when
    /// needed so it reaches the quantized saturation level of the target,
    /// which recovers the whole approximate front.
    FullFront { m: usize },
    /// Fixed maximal budget: `delta = budget / m` and exactly `m` levels.
    Budget { m: usize, budget: f64 },
    /// Explicit step; levels run to `budget` when given, otherwise to the
    /// target's quantized saturation level.
    Delta { delta: f64, budget: Option<f64> },
}

#[derive(Debug, Clone)]
pub struct PlanOptions {
    pub policy: BudgetPolicy,
    pub tie_tol: f64,
    pub sweep: SweepOptions,
}

impl PlanOptions {
    pub fn full_front(m: usize) -> Self {
        Self {
            policy: BudgetPolicy::FullFront { m },
            tie_tol: DEFAULT_TIE_TOL,
            sweep: SweepOptions::default(),
        }
    }

    pub fn with_policy(policy: BudgetPolicy) -> Self {
        Self {
            policy,
            ..Self::full_front(1)
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanTimings {
    pub labels_s: f64,
    pub quantize_s: f64,
    pub sweep_s: f64,
    pub extract_s: f64,
}

impl PlanTimings {
    pub fn total_s(&self) -> f64 {
        self.labels_s + self.quantize_s + self.sweep_s + self.extract_s
    }
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub target: NodeId,
    /// Labels on the true weights.
    pub labels: ScalarLabels,
    /// Labels on the quantized instance; `None` for the trivial target.
    pub labels_q: Option<ScalarLabels>,
    pub table: Option<BudgetTable>,
    pub front: ParetoFront,
    /// One replayed path per front point.
    pub paths: Vec<PathReplay>,
    /// Transition bound from the true labels.
    pub k_bound: f64,
    /// Transition bound from the quantized labels; bounds the edge count of
    /// every path the table can return for the target.
    pub k_bound_quantized: f64,
    pub timings: PlanTimings,
}

impl Plan {
    pub fn grid(&self) -> Option<&BudgetGrid> {
        self.table.as_ref().map(|t| t.grid())
    }

    pub fn delta(&self) -> Option<f64> {
        self.grid().map(|g| g.delta)
    }

    /// False when the budget admits no path to the target.
    pub fn feasible(&self) -> bool {
        !self.front.is_empty()
    }
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

pub fn plan(g: &WeightedGraph, target: NodeId, opts: &PlanOptions) -> Result<Plan> {
    let t = Instant::now();
    let labels = ScalarLabels::compute(g, opts.tie_tol);
    let labels_s = secs(t);
    let mut p = plan_with_labels(g, target, labels, opts)?;
    p.timings.labels_s += labels_s;
    Ok(p)
}

/// Runs quantization, sweep and extraction given true-weight labels.
pub fn plan_with_labels(
    g: &WeightedGraph,
    target: NodeId,
    labels: ScalarLabels,
    opts: &PlanOptions,
) -> Result<Plan> {
    let n = g.node_count();
    if target >= n {
        return Err(Error::UnknownNode(target));
    }
    if !labels.is_reachable(target) {
        return Err(Error::Unreachable(target));
    }
    let source = g.roadmap().source();
    if target == source {
        return Ok(Plan {
            target,
            labels,
            labels_q: None,
            table: None,
            front: ParetoFront {
                node: target,
                delta: 0.0,
                points: vec![FrontPoint {
                    level: 0,
                    budget: 0.0,
                    primary: 0.0,
                    slackness: 0.0,
                }],
            },
            paths: vec![PathReplay {
                node: target,
                level: 0,
                budget: 0.0,
                nodes: vec![source],
                edges: vec![],
                primary: 0.0,
                secondary: 0.0,
                quantized_secondary: 0.0,
                slackness: 0.0,
            }],
            k_bound: 0.0,
            k_bound_quantized: 0.0,
            timings: PlanTimings::default(),
        });
    }

    let v_tilde = labels.v_tilde[target];
    let (delta, fixed_levels, budget_cap) = match opts.policy {
        BudgetPolicy::FullFront { m } => (super::choose_delta(v_tilde, m)?.delta, Some(m), None),
        BudgetPolicy::Budget { m, budget } => {
            let grid = super::choose_delta(budget, m)?;
            (grid.delta, Some(m), Some(m))
        }
        BudgetPolicy::Delta { delta, budget } => {
            let cap = match budget {
                Some(b) if !(b >= 0.0) => {
                    return Err(Error::InvalidBudget(format!("budget {b}")));
                }
                Some(b) => Some(super::quantize_cost(b, delta).max(0.0) as usize),
                None => None,
            };
            (delta, None, cap)
        }
    };

    let t = Instant::now();
    let q = quantize(g, delta)?;
    let labels_q =
        ScalarLabels::compute_weights(g.roadmap(), g.primary(), &q.levels_f64(), opts.tie_tol);
    let quantize_s = secs(t);

    let saturation = labels_q.v_tilde[target] as usize;
    let levels = match budget_cap {
        Some(cap) => cap,
        None => fixed_levels.unwrap_or(0).max(saturation),
    };
    let grid = BudgetGrid::new(delta, levels.max(1))?;

    let t = Instant::now();
    let table = sweep(&q, &labels_q, &grid, &opts.sweep)?;
    let sweep_s = secs(t);

    let t = Instant::now();
    let front = extract_pareto(&table, target)?;
    let paths = front
        .points
        .iter()
        .map(|p| extract_path(&table, target, p.level))
        .collect::<Result<Vec<_>>>()?;
    let extract_s = secs(t);

    let (c_min, big_c_min) = (g.min_secondary(), g.min_primary());
    let k_bound = transition_bound(&labels, target, c_min, big_c_min)?;
    // the quantized instance in cost units: Ṽ̂ = delta * levels
    let mut scaled = labels_q.clone();
    scaled.v_tilde.iter_mut().for_each(|v| *v *= delta);
    let k_bound_quantized = transition_bound(&scaled, target, c_min, big_c_min)?;

    Ok(Plan {
        target,
        labels,
        labels_q: Some(labels_q),
        table: Some(table),
        front,
        paths,
        k_bound,
        k_bound_quantized,
        timings: PlanTimings {
            labels_s: 0.0,
            quantize_s,
            sweep_s,
            extract_s,
        },
    })
}

#[derive(Debug, Clone)]
pub struct RefinementRound {
    pub m: usize,
    pub plan: Plan,
}

#[derive(Debug, Clone)]
pub struct Refinement {
    pub rounds: Vec<RefinementRound>,
    /// For each consecutive pair of rounds: whether the finer front is at
    /// least as good at every budget covered by both.
    pub monotone: Vec<bool>,
}

impl Refinement {
    pub fn all_monotone(&self) -> bool {
        self.monotone.iter().all(|&b| b)
    }
}

/// Full-front plans for `m, 2m, 4m, ...` with refinement diagnostics.
pub fn refine_doubling(
    g: &WeightedGraph,
    target: NodeId,
    m_start: usize,
    rounds: usize,
    opts: &PlanOptions,
) -> Result<Refinement> {
    if rounds == 0 {
        return Err(Error::InvalidBudget("at least one refinement round".into()));
    }
    let labels = ScalarLabels::compute(g, opts.tie_tol);
    let mut out = Vec::with_capacity(rounds);
    for k in 0..rounds {
        let m = m_start
            .checked_shl(k as u32)
            .ok_or_else(|| Error::InvalidBudget("level count overflow".into()))?;
        let opts = PlanOptions {
            policy: BudgetPolicy::FullFront { m },
            ..opts.clone()
        };
        out.push(RefinementRound {
            m,
            plan: plan_with_labels(g, target, labels.clone(), &opts)?,
        });
    }
    let monotone = out
        .windows(2)
        .map(|w| finer_dominates(&w[0].plan, &w[1].plan))
        .collect();
    Ok(Refinement {
        rounds: out,
        monotone,
    })
}

/// `coarse` uses step `2 * delta` of `fine`; coarse level `l` is fine level `2l`.
fn finer_dominates(coarse: &Plan, fine: &Plan) -> bool {
    let fine_levels = fine.grid().map_or(0, |g| g.levels);
    coarse
        .front
        .points
        .iter()
        .filter(|p| 2 * p.level <= fine_levels)
        .all(|p| fine.front.value_at_level(2 * p.level) <= p.primary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    #[test]
    fn trivial_target_is_single_zero_point() {
        let g = instances::two_path_graph();
        let p = plan(&g, 0, &PlanOptions::full_front(4)).unwrap();
        assert_eq!(p.front.points.len(), 1);
        assert_eq!(p.front.points[0].primary, 0.0);
        assert_eq!(p.paths[0].nodes, vec![0]);
    }

    #[test]
    fn explicit_budget_below_first_feasible_is_infeasible() {
        let g = instances::two_path_graph();
        let opts = PlanOptions::with_policy(BudgetPolicy::Budget { m: 4, budget: 2.0 });
        let p = plan(&g, 2, &opts).unwrap();
        assert!(!p.feasible());
    }

    #[test]
    fn delta_policy_reaches_saturation() {
        let g = instances::two_path_graph();
        let opts = PlanOptions::with_policy(BudgetPolicy::Delta {
            delta: 0.6,
            budget: None,
        });
        let p = plan(&g, 2, &opts).unwrap();
        assert_eq!(p.grid().unwrap().levels, 6);
        let rows: Vec<(usize, f64)> = p
            .front
            .points
            .iter()
            .map(|q| (q.level, q.primary))
            .collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0], (5, 3.0));
        assert_eq!(rows[1].0, 6);
        assert!((rows[1].1 - 2.8).abs() < 1e-15);
    }
}
