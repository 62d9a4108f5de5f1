//! Small reference graphs and random instance generators shared by the
//! tests, the verification command and the benchmarks.

use std::sync::Arc;

use rand::Rng;

use crate::costs::{assign_costs, CostModel, Threat, WeightedGraph};
use crate::geometry::{OccupancyGrid, Point2};
use crate::roadmap::{build_prm, PrmParams, Roadmap};

/// Graph from `(from, to, primary, secondary)` tuples; node 0 is the source
/// and node `n - 1` the goal.
pub fn from_edge_list(n: usize, edges: &[(usize, usize, f64, f64)]) -> WeightedGraph {
    let nodes = (0..n).map(|i| Point2::new(i as f64, 0.0)).collect();
    from_positions(nodes, edges)
}

pub fn from_positions(nodes: Vec<Point2>, edges: &[(usize, usize, f64, f64)]) -> WeightedGraph {
    let n = nodes.len();
    let rm = Roadmap::from_parts(nodes, edges.iter().map(|e| (e.0, e.1)), 0, n - 1)
        .expect("valid edge list");
    WeightedGraph::new(
        Arc::new(rm),
        edges.iter().map(|e| e.2).collect(),
        edges.iter().map(|e| e.3).collect(),
    )
    .expect("positive weights")
}

/// `x0 -> x1 -> x2` with weights 1.4 + 1.4 and a direct `x0 -> x2` edge of
/// weight 3, identical in both criteria. Edge ids: 0 = (x0,x1), 1 = (x1,x2),
/// 2 = (x0,x2).
pub fn two_path_graph() -> WeightedGraph {
    from_positions(
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 1.0),
            Point2::new(4.0, 0.0),
        ],
        &[(0, 1, 1.4, 1.4), (1, 2, 1.4, 1.4), (0, 2, 3.0, 3.0)],
    )
}

/// Three disjoint two-edge routes whose exact front
/// `{(10, 1), (6, 6), (1, 10)}` (primary, secondary) has its middle point
/// strictly above the segment joining the outer two.
pub fn non_convex_graph() -> WeightedGraph {
    from_edge_list(
        5,
        &[
            (0, 1, 5.0, 0.5),
            (1, 4, 5.0, 0.5),
            (0, 2, 3.0, 3.0),
            (2, 4, 3.0, 3.0),
            (0, 3, 0.5, 5.0),
            (3, 4, 0.5, 5.0),
        ],
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SecondaryKind {
    /// Uniform in `[lo, hi)`.
    Real { lo: f64, hi: f64 },
    /// Uniform integer in `1..=max`.
    Integer { max: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomGraphSpec {
    pub nodes: usize,
    pub edge_prob: f64,
    pub primary: (f64, f64),
    pub secondary: SecondaryKind,
}

impl RandomGraphSpec {
    pub fn real(nodes: usize, edge_prob: f64) -> Self {
        Self {
            nodes,
            edge_prob,
            primary: (1.0, 10.0),
            secondary: SecondaryKind::Real { lo: 0.5, hi: 10.0 },
        }
    }

    pub fn integer(nodes: usize, edge_prob: f64, max: u32) -> Self {
        Self {
            secondary: SecondaryKind::Integer { max },
            ..Self::real(nodes, edge_prob)
        }
    }
}

/// Directed Erdős–Rényi graph with random positive weights; node 0 is the
/// source and the last node the goal.
pub fn random_graph(rng: &mut impl Rng, spec: &RandomGraphSpec) -> WeightedGraph {
    let n = spec.nodes.max(2);
    let nodes: Vec<Point2> = (0..n)
        .map(|_| Point2::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(spec.edge_prob) {
                let c = rng.gen_range(spec.primary.0..spec.primary.1);
                let s = match spec.secondary {
                    SecondaryKind::Real { lo, hi } => rng.gen_range(lo..hi),
                    SecondaryKind::Integer { max } => rng.gen_range(1..=max) as f64,
                };
                edges.push((i, j, c, s));
            }
        }
    }
    from_positions(nodes, &edges)
}

/// Uniform PRM on an empty square map with two inverse-square threats:
/// the synthetic stand-in for a field-scale roadmap.
pub fn synthetic_prm(
    side_m: usize,
    n_nodes: usize,
    connect_radius: f64,
    seed: u64,
) -> crate::error::Result<(OccupancyGrid, WeightedGraph)> {
    let grid = OccupancyGrid::empty(side_m, side_m, 1.0)?;
    let s = side_m as f64;
    let params = PrmParams {
        n_nodes,
        connect_radius,
        robot_radius: 0.0,
        seed,
    };
    let rm = build_prm(
        &grid,
        &params,
        Point2::new(0.05 * s, 0.05 * s),
        Point2::new(0.95 * s, 0.95 * s),
    )?;
    let model = CostModel {
        threats: vec![
            Threat::new(Point2::new(0.5 * s, 0.65 * s), 20.0, 5.0),
            Threat::new(Point2::new(0.5 * s, 0.4 * s), 5.0, 5.0),
        ],
        ..CostModel::default()
    };
    let g = assign_costs(Arc::new(rm), &model, Some(&grid))?;
    Ok((grid, g))
}
