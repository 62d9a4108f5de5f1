//! Invariant checks over planner outputs. Each check reports how many items
//! it looked at and the first counterexample it found.

use std::fmt;

use serde::Serialize;

use crate::budget_dp::{sweep, BudgetTable, Plan, SweepOptions};
use crate::costs::WeightedGraph;
use crate::geometry::OccupancyGrid;
use crate::oracle::{ExactFronts, ExactPoint};
use crate::roadmap::Roadmap;
use crate::scalar_sp::ScalarLabels;

/// Relative tolerance for value equalities that involve float sums taken
/// in different orders.
pub const REL_TOL: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub checked: usize,
    pub violations: usize,
    pub counterexample: Option<String>,
}

impl Check {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            checked: 0,
            violations: 0,
            counterexample: None,
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.counterexample.is_none() {
                self.counterexample = Some(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status} {} ({} checked, {} violations)",
            self.name, self.checked, self.violations
        )?;
        if let Some(c) = &self.counterexample {
            write!(f, "\n     first counterexample: {c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Rows are non-increasing in the budget.
pub fn check_monotone(table: &BudgetTable) -> Check {
    let mut c = Check::new("monotone_rows");
    for j in 0..table.node_count() {
        for l in 0..table.levels() {
            let (a, b) = (table.w(j, l), table.w(j, l + 1));
            c.record(b <= a, || {
                format!("node {j}: W[{l}] = {a} < W[{}] = {b}", l + 1)
            });
        }
    }
    c
}

/// Infinite exactly below `V̂`, `Ũ̂` at the first feasible level and `U`
/// from `Ṽ̂` on. `labels_q` are the labels of the quantized instance.
pub fn check_label_bounds(table: &BudgetTable, labels_q: &ScalarLabels) -> Vec<Check> {
    let mut below = Check::new("infinite_below_first_feasible");
    let mut first = Check::new("first_feasible_value");
    let mut sat = Check::new("saturation_value");
    for j in 0..table.node_count() {
        let v_hat = labels_q.v[j];
        for l in 0..=table.levels() {
            let w = table.w(j, l);
            let lf = l as f64;
            below.record((lf < v_hat) == w.is_infinite(), || {
                format!("node {j} level {l}: W = {w}, first feasible level {v_hat}")
            });
            if lf == v_hat {
                let u = labels_q.u_tilde[j];
                first.record(close(w, u), || {
                    format!("node {j} level {l}: W = {w}, expected {u}")
                });
            }
            if lf >= labels_q.v_tilde[j] {
                let u = labels_q.u[j];
                sat.record(close(w, u), || {
                    format!("node {j} level {l}: W = {w}, expected {u}")
                });
            }
        }
    }
    vec![below, first, sat]
}

/// The table with shortcuts disabled must match `table` entrywise.
pub fn check_shortcut_equivalence(table: &BudgetTable, labels_q: &ScalarLabels) -> Check {
    let mut c = Check::new("shortcut_equivalence");
    let opts = SweepOptions {
        shortcuts: false,
        ..SweepOptions::default()
    };
    match sweep(table.quantized(), labels_q, table.grid(), &opts) {
        Ok(plain) => {
            for j in 0..table.node_count() {
                for l in 0..=table.levels() {
                    let (a, b) = (table.w(j, l), plain.w(j, l));
                    c.record(a == b, || {
                        format!("node {j} level {l}: {a} with shortcuts, {b} without")
                    });
                }
            }
        }
        Err(e) => c.record(false, || format!("shortcut-free sweep failed: {e}")),
    }
    c
}

/// `exact_constrained(j, l delta) <= W(j, l)` everywhere.
pub fn check_conservative(table: &BudgetTable, exact: &ExactFronts) -> Check {
    let mut c = Check::new("conservative");
    let grid = table.grid();
    for j in 0..table.node_count() {
        for l in 0..=table.levels() {
            let w = table.w(j, l);
            let e = exact.constrained(j, grid.budget(l));
            c.record(e <= w || close(e, w), || {
                format!("node {j} level {l}: exact {e} > W {w}")
            });
        }
    }
    c
}

/// Entrywise equality with the exact constrained values; holds when every
/// secondary cost is a multiple of `delta`.
pub fn check_oracle_equality(table: &BudgetTable, exact: &ExactFronts) -> Check {
    let mut c = Check::new("oracle_equality");
    let grid = table.grid();
    for j in 0..table.node_count() {
        for l in 0..=table.levels() {
            let w = table.w(j, l);
            let e = exact.constrained(j, grid.budget(l));
            c.record(close(e, w), || {
                format!("node {j} level {l}: exact {e}, W {w}")
            });
        }
    }
    c
}

/// Every finite entry carries zero slackness.
pub fn check_zero_slack(table: &BudgetTable) -> Check {
    let mut c = Check::new("zero_slackness");
    for j in 0..table.node_count() {
        for l in 0..=table.levels() {
            if table.w(j, l).is_finite() {
                let s = table.slack(j, l);
                c.record(s == 0.0, || format!("node {j} level {l}: S = {s}"));
            }
        }
    }
    c
}

/// Replayed paths: `b - phi = S`, `0 <= S <= K delta`, the quantized cost
/// fits the budget and the primary cost matches the front.
pub fn check_slackness(plan: &Plan) -> Check {
    let mut c = Check::new("slackness_audit");
    let delta = plan.delta().unwrap_or(0.0);
    let bound = plan.k_bound_quantized * delta;
    for (p, f) in plan.paths.iter().zip(&plan.front.points) {
        let gap = p.budget - p.secondary;
        c.record(
            close(gap, p.slackness) || (gap - p.slackness).abs() <= REL_TOL * p.budget,
            || format!("level {}: b - phi = {gap}, S = {}", p.level, p.slackness),
        );
        c.record(
            p.slackness >= -REL_TOL * p.budget.max(1.0) && p.slackness <= bound * (1.0 + REL_TOL),
            || {
                format!(
                    "level {}: S = {} outside [0, {bound}]",
                    p.level, p.slackness
                )
            },
        );
        c.record(p.quantized_secondary <= p.budget * (1.0 + REL_TOL), || {
            format!(
                "level {}: quantized cost {} over budget {}",
                p.level, p.quantized_secondary, p.budget
            )
        });
        c.record(close(p.primary, f.primary), || {
            format!(
                "level {}: replayed primary {} vs front {}",
                p.level, p.primary, f.primary
            )
        });
    }
    c
}

/// Front rows have strictly increasing budgets and strictly decreasing
/// primary cost.
pub fn check_front_shape(plan: &Plan) -> Check {
    let mut c = Check::new("front_shape");
    for w in plan.front.points.windows(2) {
        c.record(
            w[1].budget > w[0].budget && w[1].primary < w[0].primary,
            || {
                format!(
                    "({}, {}) followed by ({}, {})",
                    w[0].budget, w[0].primary, w[1].budget, w[1].primary
                )
            },
        );
    }
    c
}

/// Label values satisfy their own Bellman equations.
pub fn check_fixed_point(g: &WeightedGraph, labels: &ScalarLabels) -> Check {
    let mut c = Check::new("label_fixed_point");
    let rm = g.roadmap();
    for (vals, w, what) in [
        (&labels.u, g.primary(), "U"),
        (&labels.v, g.secondary(), "V"),
    ] {
        for j in 0..g.node_count() {
            let best = if j == rm.source() {
                0.0
            } else {
                rm.in_edges(j)
                    .iter()
                    .map(|&e| vals[rm.edge(e).from] + w[e])
                    .fold(f64::INFINITY, f64::min)
            };
            let have = vals[j];
            c.record(close(have, best), || {
                format!("{what}[{j}] = {have}, relaxation gives {best}")
            });
        }
    }
    c
}

/// Nodes and edges keep `radius` clearance from obstacles.
pub fn check_roadmap(grid: &OccupancyGrid, rm: &Roadmap, radius: f64) -> Check {
    let mut c = Check::new("roadmap_collision_free");
    for (i, &p) in rm.nodes().iter().enumerate() {
        c.record(grid.point_free(p, radius), || {
            format!("node {i} at ({}, {}) in collision", p.x, p.y)
        });
    }
    for (i, e) in rm.edges().iter().enumerate() {
        let (a, b) = (rm.position(e.from), rm.position(e.to));
        c.record(grid.segment_free(a, b, radius), || {
            format!("edge {i} ({} -> {}) in collision", e.from, e.to)
        });
    }
    c
}

/// Approximate front against the exact one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontComparison {
    /// Exact `(primary, secondary)` points, increasing secondary.
    pub exact: Vec<(f64, f64)>,
    /// Same number of breakpoints with equal primary values.
    pub breakpoints_match: bool,
    /// No approximate point beats the exact constrained value at its budget.
    pub conservative: bool,
    /// Largest budget excess over an exact point's secondary cost needed to
    /// reach its primary value.
    pub max_displacement: f64,
    /// `K * delta` with `K` from the true labels.
    pub bound: f64,
    pub within_bound: bool,
}

pub fn compare_fronts(exact: &[ExactPoint], plan: &Plan) -> FrontComparison {
    let points = &plan.front.points;
    let breakpoints_match = exact.len() == points.len()
        && exact
            .iter()
            .zip(points)
            .all(|(e, p)| close(e.primary, p.primary));
    let constrained = |b: f64| {
        exact
            .iter()
            .filter(|e| e.secondary <= b * (1.0 + REL_TOL))
            .map(|e| e.primary)
            .fold(f64::INFINITY, f64::min)
    };
    let conservative = points
        .iter()
        .all(|p| constrained(p.budget) <= p.primary * (1.0 + REL_TOL));
    let bound = plan.k_bound * plan.delta().unwrap_or(0.0);
    let mut max_displacement = 0.0f64;
    let mut reached = true;
    for e in exact {
        match points
            .iter()
            .find(|p| p.primary <= e.primary * (1.0 + REL_TOL))
        {
            Some(p) => max_displacement = max_displacement.max(p.budget - e.secondary),
            None => reached = false,
        }
    }
    if !reached {
        max_displacement = f64::INFINITY;
    }
    FrontComparison {
        exact: exact.iter().map(|e| (e.primary, e.secondary)).collect(),
        breakpoints_match,
        conservative,
        max_displacement,
        bound,
        within_bound: max_displacement <= bound + REL_TOL * bound.max(1.0),
    }
}

/// All table and path checks for one plan; `exact` adds the oracle
/// comparison.
pub fn verify_plan(g: &WeightedGraph, plan: &Plan, exact: Option<&ExactFronts>) -> Report {
    let mut checks = vec![
        check_fixed_point(g, &plan.labels),
        check_front_shape(plan),
        check_slackness(plan),
    ];
    if let (Some(table), Some(lq)) = (&plan.table, &plan.labels_q) {
        checks.push(check_monotone(table));
        checks.extend(check_label_bounds(table, lq));
        checks.push(check_shortcut_equivalence(table, lq));
        if let Some(exact) = exact {
            checks.push(check_conservative(table, exact));
        }
    }
    Report { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget_dp::{plan, BudgetPolicy, PlanOptions};
    use crate::instances;
    use crate::oracle::{exact_fronts, DEFAULT_LABEL_CAP};

    #[test]
    fn two_path_graph_passes() {
        let g = instances::two_path_graph();
        let p = plan(
            &g,
            2,
            &PlanOptions::with_policy(BudgetPolicy::Delta {
                delta: 0.6,
                budget: None,
            }),
        )
        .unwrap();
        let exact = exact_fronts(&g, None, DEFAULT_LABEL_CAP).unwrap();
        let r = verify_plan(&g, &p, Some(&exact));
        assert!(r.passed(), "{r}");
        assert_eq!(r.checks.len(), 9);
    }

    #[test]
    fn corrupted_table_fails_monotonicity() {
        let g = instances::two_path_graph();
        let mut p = plan(
            &g,
            2,
            &PlanOptions::with_policy(BudgetPolicy::Delta {
                delta: 0.6,
                budget: None,
            }),
        )
        .unwrap();
        let t = p.table.as_mut().unwrap();
        t.set_w(2, 6, 4.0);
        let c = check_monotone(t);
        assert!(!c.passed());
        assert!(c.counterexample.unwrap().contains("node 2"));
    }

    #[test]
    fn integer_costs_have_zero_slack() {
        let g =
            instances::from_edge_list(3, &[(0, 1, 1.0, 2.0), (1, 2, 1.0, 1.0), (0, 2, 5.0, 1.0)]);
        let p = plan(
            &g,
            2,
            &PlanOptions::with_policy(BudgetPolicy::Delta {
                delta: 1.0,
                budget: Some(4.0),
            }),
        )
        .unwrap();
        assert!(check_zero_slack(p.table.as_ref().unwrap()).passed());
        let exact = exact_fronts(&g, None, DEFAULT_LABEL_CAP).unwrap();
        assert!(check_oracle_equality(p.table.as_ref().unwrap(), &exact).passed());
    }
}
