//! Ground truth for small instances.
//!
//! `exact_fronts` is a label-correcting search that keeps every mutually
//! non-dominated `(primary, secondary)` label per node. `enumerate_paths`
//! lists simple paths by depth-first search and serves as a check on the
//! label search itself. `scalarize` is the weighted-sum baseline.

use std::collections::VecDeque;

use crate::costs::WeightedGraph;
use crate::error::{Error, Result};
use crate::roadmap::{EdgeId, NodeId};
use crate::scalar_sp::dijkstra_pair_weights;

pub const DEFAULT_LABEL_CAP: usize = 1_000_000;

/// Relative margin below which two accumulated costs count as equal for
/// dominance purposes.
pub const DOMINANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactPoint {
    pub primary: f64,
    pub secondary: f64,
    pub edges: Vec<EdgeId>,
}

/// Strict dominance with near-ties treated as equal.
pub fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    let strictly_less = |x: f64, y: f64| x < y - DOMINANCE_TOL * y.abs();
    a.0 <= b.0 && a.1 <= b.1 && (strictly_less(a.0, b.0) || strictly_less(a.1, b.1))
}

#[derive(Debug, Clone)]
struct Label {
    node: NodeId,
    primary: f64,
    secondary: f64,
    pred: Option<(usize, EdgeId)>,
    alive: bool,
}

/// Non-dominated cost pairs from the source to every node.
#[derive(Debug, Clone)]
pub struct ExactFronts {
    fronts: Vec<Vec<ExactPoint>>,
}

impl ExactFronts {
    /// Front at `j`, sorted by ascending secondary cost.
    pub fn front(&self, j: NodeId) -> &[ExactPoint] {
        &self.fronts[j]
    }

    /// Least primary cost among paths with secondary cost at most `budget`.
    pub fn constrained(&self, j: NodeId, budget: f64) -> f64 {
        self.fronts[j]
            .iter()
            .filter(|p| p.secondary <= budget)
            .map(|p| p.primary)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Label-correcting search from the roadmap source. Labels whose secondary
/// cost exceeds `budget_cap` are discarded.
pub fn exact_fronts(
    g: &WeightedGraph,
    budget_cap: Option<f64>,
    label_cap: usize,
) -> Result<ExactFronts> {
    let rm = g.roadmap();
    let n = rm.node_count();
    let cap = budget_cap.unwrap_or(f64::INFINITY);
    let mut labels = vec![Label {
        node: rm.source(),
        primary: 0.0,
        secondary: 0.0,
        pred: None,
        alive: true,
    }];
    let mut at: Vec<Vec<usize>> = vec![Vec::new(); n];
    at[rm.source()].push(0);
    let mut queue = VecDeque::from([0usize]);

    while let Some(li) = queue.pop_front() {
        if !labels[li].alive {
            continue;
        }
        let (i, p0, s0) = (labels[li].node, labels[li].primary, labels[li].secondary);
        for &e in rm.out_edges(i) {
            let j = rm.edge(e).to;
            let cand = (p0 + g.primary()[e], s0 + g.secondary()[e]);
            if cand.1 > cap {
                continue;
            }
            let rejected = at[j].iter().any(|&k| {
                let other = (labels[k].primary, labels[k].secondary);
                other == cand || dominates(other, cand)
            });
            if rejected {
                continue;
            }
            at[j].retain(|&k| {
                let keep = !dominates(cand, (labels[k].primary, labels[k].secondary));
                if !keep {
                    labels[k].alive = false;
                }
                keep
            });
            if labels.len() >= label_cap {
                return Err(Error::LabelCapExceeded(label_cap));
            }
            labels.push(Label {
                node: j,
                primary: cand.0,
                secondary: cand.1,
                pred: Some((li, e)),
                alive: true,
            });
            let id = labels.len() - 1;
            at[j].push(id);
            queue.push_back(id);
        }
    }

    let fronts = at
        .iter()
        .map(|ids| {
            let mut pts: Vec<ExactPoint> = ids
                .iter()
                .map(|&k| ExactPoint {
                    primary: labels[k].primary,
                    secondary: labels[k].secondary,
                    edges: trace(&labels, k),
                })
                .collect();
            pts.sort_by(|a, b| {
                a.secondary
                    .total_cmp(&b.secondary)
                    .then(a.primary.total_cmp(&b.primary))
            });
            pts
        })
        .collect();
    Ok(ExactFronts { fronts })
}

fn trace(labels: &[Label], mut k: usize) -> Vec<EdgeId> {
    let mut edges = Vec::new();
    while let Some((prev, e)) = labels[k].pred {
        edges.push(e);
        k = prev;
    }
    edges.reverse();
    edges
}

/// Complete Pareto set from the source to `j`.
pub fn exact_pareto(
    g: &WeightedGraph,
    j: NodeId,
    budget_cap: Option<f64>,
    label_cap: usize,
) -> Result<Vec<ExactPoint>> {
    if j >= g.node_count() {
        return Err(Error::UnknownNode(j));
    }
    Ok(exact_fronts(g, budget_cap, label_cap)?
        .fronts
        .swap_remove(j))
}

/// Least primary cost among paths to `j` with secondary cost at most `budget`.
pub fn exact_constrained(
    g: &WeightedGraph,
    j: NodeId,
    budget: f64,
    label_cap: usize,
) -> Result<f64> {
    let front = exact_pareto(g, j, Some(budget), label_cap)?;
    Ok(front
        .iter()
        .map(|p| p.primary)
        .fold(f64::INFINITY, f64::min))
}

/// Every simple path from the source to `j` (depth-first), as
/// `(edges, primary, secondary)`. Fails past `max_paths`.
pub fn enumerate_paths(
    g: &WeightedGraph,
    j: NodeId,
    max_paths: usize,
) -> Result<Vec<(Vec<EdgeId>, f64, f64)>> {
    let rm = g.roadmap();
    let mut out = Vec::new();
    let mut on_path = vec![false; rm.node_count()];
    let mut stack: Vec<EdgeId> = Vec::new();

    fn dfs(
        g: &WeightedGraph,
        node: NodeId,
        target: NodeId,
        on_path: &mut [bool],
        stack: &mut Vec<EdgeId>,
        out: &mut Vec<(Vec<EdgeId>, f64, f64)>,
        max_paths: usize,
    ) -> Result<()> {
        if node == target {
            if out.len() >= max_paths {
                return Err(Error::LabelCapExceeded(max_paths));
            }
            let (p, s) = g.path_costs(stack);
            out.push((stack.clone(), p, s));
            return Ok(());
        }
        on_path[node] = true;
        for &e in g.roadmap().out_edges(node) {
            let next = g.edge(e).to;
            if !on_path[next] {
                stack.push(e);
                dfs(g, next, target, on_path, stack, out, max_paths)?;
                stack.pop();
            }
        }
        on_path[node] = false;
        Ok(())
    }

    dfs(
        g,
        rm.source(),
        j,
        &mut on_path,
        &mut stack,
        &mut out,
        max_paths,
    )?;
    Ok(out)
}

/// Non-dominated subset of `(primary, secondary)` pairs (exact duplicates
/// collapsed), sorted by secondary cost.
pub fn pareto_filter(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&p| !points.iter().any(|&q| dominates(q, p)))
        .collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarizedPath {
    pub edges: Vec<EdgeId>,
    pub primary: f64,
    pub secondary: f64,
}

/// Minimizes `w * primary + (1 - w) * secondary`; ties are broken by the
/// plain sum so that the endpoint weights still return Pareto-optimal paths.
pub fn scalarize(g: &WeightedGraph, w: f64, j: NodeId) -> Result<ScalarizedPath> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidBudget(format!("scalarization weight {w}")));
    }
    let rm = g.roadmap();
    if j >= rm.node_count() {
        return Err(Error::UnknownNode(j));
    }
    let combined: Vec<f64> = g
        .primary()
        .iter()
        .zip(g.secondary())
        .map(|(&c, &s)| w * c + (1.0 - w) * s)
        .collect();
    let tiebreak: Vec<f64> = g
        .primary()
        .iter()
        .zip(g.secondary())
        .map(|(c, s)| c + s)
        .collect();
    let half = dijkstra_pair_weights(rm, &combined, &tiebreak, rm.source(), 0.0);
    let edges = half.path_edges(rm, j).ok_or(Error::Unreachable(j))?;
    let (primary, secondary) = g.path_costs(&edges);
    Ok(ScalarizedPath {
        edges,
        primary,
        secondary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::scalar_sp::ScalarLabels;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_path_graph_front_is_single_point() {
        let g = instances::two_path_graph();
        let f = exact_pareto(&g, 2, None, DEFAULT_LABEL_CAP).unwrap();
        assert_eq!(f.len(), 1);
        assert!((f[0].primary - 2.8).abs() < 1e-15 && (f[0].secondary - 2.8).abs() < 1e-15);
        assert_eq!(f[0].edges, vec![0, 1]);
    }

    #[test]
    fn constrained_examples() {
        let g = instances::two_path_graph();
        assert!(exact_constrained(&g, 2, 2.5, DEFAULT_LABEL_CAP)
            .unwrap()
            .is_infinite());
        let u = ScalarLabels::compute(&g, 0.0).u[2];
        assert_eq!(
            exact_constrained(&g, 2, f64::INFINITY, DEFAULT_LABEL_CAP).unwrap(),
            u
        );
        assert!((exact_constrained(&g, 2, 2.9, DEFAULT_LABEL_CAP).unwrap() - 2.8).abs() < 1e-15);
    }

    #[test]
    fn single_path_graph() {
        let g = instances::from_edge_list(3, &[(0, 1, 2.0, 3.0), (1, 2, 4.0, 5.0)]);
        let f = exact_pareto(&g, 2, None, DEFAULT_LABEL_CAP).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!((f[0].primary, f[0].secondary), (6.0, 8.0));
    }

    #[test]
    fn label_cap_enforced() {
        let g = instances::non_convex_graph();
        assert!(matches!(
            exact_fronts(&g, None, 2),
            Err(Error::LabelCapExceeded(2))
        ));
    }

    #[test]
    fn matches_enumeration_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let g = instances::random_graph(&mut rng, &instances::RandomGraphSpec::real(10, 0.3));
            let j = g.node_count() - 1;
            let paths = enumerate_paths(&g, j, 1_000_000).unwrap();
            let brute = pareto_filter(&paths.iter().map(|p| (p.1, p.2)).collect::<Vec<_>>());
            let exact: Vec<(f64, f64)> = exact_pareto(&g, j, None, DEFAULT_LABEL_CAP)
                .unwrap()
                .iter()
                .map(|p| (p.primary, p.secondary))
                .collect();
            assert_eq!(exact.len(), brute.len());
            for (a, b) in exact.iter().zip(&brute) {
                assert!((a.0 - b.0).abs() <= 1e-9 * b.0 && (a.1 - b.1).abs() <= 1e-9 * b.1);
            }
            // budget-capped variant agrees with the capped enumeration
            if let Some(mid) = brute.get(brute.len() / 2) {
                let cap = mid.1;
                let capped = exact_pareto(&g, j, Some(cap), DEFAULT_LABEL_CAP).unwrap();
                assert!(capped.iter().all(|p| p.secondary <= cap));
                let best = brute
                    .iter()
                    .filter(|p| p.1 <= cap)
                    .map(|p| p.0)
                    .fold(f64::INFINITY, f64::min);
                let got = capped
                    .iter()
                    .map(|p| p.primary)
                    .fold(f64::INFINITY, f64::min);
                assert!((best - got).abs() <= 1e-9 * best);
            }
        }
    }

    #[test]
    fn scalarize_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let g = instances::random_graph(&mut rng, &instances::RandomGraphSpec::real(12, 0.3));
            let j = g.node_count() - 1;
            let labels = ScalarLabels::compute(&g, 0.0);
            if !labels.is_reachable(j) {
                continue;
            }
            let hi = scalarize(&g, 1.0, j).unwrap();
            assert!((hi.primary - labels.u[j]).abs() <= 1e-12 * labels.u[j]);
            let lo = scalarize(&g, 0.0, j).unwrap();
            assert!((lo.secondary - labels.v[j]).abs() <= 1e-12 * labels.v[j]);
        }
    }

    #[test]
    fn scalarization_results_lie_on_the_front() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let g = instances::random_graph(&mut rng, &instances::RandomGraphSpec::real(10, 0.35));
            let j = g.node_count() - 1;
            let Ok(front) = exact_pareto(&g, j, None, DEFAULT_LABEL_CAP) else {
                continue;
            };
            if front.is_empty() {
                continue;
            }
            for k in 0..=20 {
                let s = scalarize(&g, k as f64 / 20.0, j).unwrap();
                assert!(
                    !front
                        .iter()
                        .any(|p| dominates((p.primary, p.secondary), (s.primary, s.secondary))),
                    "w={} returned a dominated pair",
                    k as f64 / 20.0
                );
            }
        }
    }

    #[test]
    fn scalarization_misses_unsupported_point() {
        let g = instances::non_convex_graph();
        let j = g.node_count() - 1;
        let front = exact_pareto(&g, j, None, DEFAULT_LABEL_CAP).unwrap();
        assert_eq!(front.len(), 3);
        let hidden = &front[1];
        let hit = (0..=100).any(|k| {
            let s = scalarize(&g, k as f64 / 100.0, j).unwrap();
            s.primary == hidden.primary && s.secondary == hidden.secondary
        });
        assert!(!hit);
    }
}
