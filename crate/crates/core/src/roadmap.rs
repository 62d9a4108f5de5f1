//! Probabilistic roadmaps: uniformly sampled free configurations joined by
//! collision-checked straight segments.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{OccupancyGrid, Point2};

pub type NodeId = usize;
pub type EdgeId = usize;

/// Free-sample attempts allowed per requested node.
pub const ATTEMPTS_PER_NODE: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub length: f64,
}

/// Directed geometric graph with incoming-edge adjacency.
#[derive(Debug, Clone)]
pub struct Roadmap {
    nodes: Vec<Point2>,
    edges: Vec<Edge>,
    source: NodeId,
    goal: NodeId,
    in_offsets: Vec<usize>,
    in_edges: Vec<EdgeId>,
    out_offsets: Vec<usize>,
    out_edges: Vec<EdgeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadmapStats {
    pub nodes: usize,
    pub edges: usize,
    pub max_in_degree: usize,
    pub mean_in_degree: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrmParams {
    pub n_nodes: usize,
    pub connect_radius: f64,
    pub robot_radius: f64,
    pub seed: u64,
}

/// JSON form of a roadmap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadmapDoc {
    pub source: NodeId,
    pub goal: NodeId,
    pub nodes: Vec<Point2>,
    pub edges: Vec<[NodeId; 2]>,
}

impl Roadmap {
    /// Assembles a roadmap from explicit nodes and directed edges. Edge
    /// lengths are recomputed from node positions.
    pub fn from_parts(
        nodes: Vec<Point2>,
        edge_pairs: impl IntoIterator<Item = (NodeId, NodeId)>,
        source: NodeId,
        goal: NodeId,
    ) -> Result<Self> {
        let n = nodes.len();
        if let Some(p) = nodes.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidGraph(format!(
                "non-finite node position {p:?}"
            )));
        }
        for id in [source, goal] {
            if id >= n {
                return Err(Error::UnknownNode(id));
            }
        }
        let mut edges = Vec::new();
        for (from, to) in edge_pairs {
            if from >= n || to >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({from}, {to}) references a missing node"
                )));
            }
            if from == to {
                return Err(Error::InvalidGraph(format!(
                    "self-transition at node {from}"
                )));
            }
            edges.push(Edge {
                from,
                to,
                length: nodes[from].distance(&nodes[to]),
            });
        }

        let (in_offsets, in_edges) = csr(n, &edges, |e| e.to);
        let (out_offsets, out_edges) = csr(n, &edges, |e| e.from);
        Ok(Self {
            nodes,
            edges,
            source,
            goal,
            in_offsets,
            in_edges,
            out_offsets,
            out_edges,
        })
    }

    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn goal(&self) -> NodeId {
        self.goal
    }

    pub fn position(&self, id: NodeId) -> Point2 {
        self.nodes[id]
    }

    /// Incoming edge ids of `j`, in ascending order of edge id.
    pub fn in_edges(&self, j: NodeId) -> &[EdgeId] {
        &self.in_edges[self.in_offsets[j]..self.in_offsets[j + 1]]
    }

    /// Outgoing edge ids of `i`, ascending.
    pub fn out_edges(&self, i: NodeId) -> &[EdgeId] {
        &self.out_edges[self.out_offsets[i]..self.out_offsets[i + 1]]
    }

    /// The set `{ i | (i, j) is an edge }`, sorted.
    pub fn in_neighbors(&self, j: NodeId) -> Result<Vec<NodeId>> {
        if j >= self.nodes.len() {
            return Err(Error::UnknownNode(j));
        }
        let mut v: Vec<NodeId> = self
            .in_edges(j)
            .iter()
            .map(|&e| self.edges[e].from)
            .collect();
        v.sort_unstable();
        v.dedup();
        Ok(v)
    }

    pub fn stats(&self) -> RoadmapStats {
        let n = self.nodes.len();
        let max_in_degree = (0..n).map(|j| self.in_edges(j).len()).max().unwrap_or(0);
        RoadmapStats {
            nodes: n,
            edges: self.edges.len(),
            max_in_degree,
            mean_in_degree: if n == 0 {
                0.0
            } else {
                self.edges.len() as f64 / n as f64
            },
        }
    }

    /// Same topology with a different goal node.
    pub fn with_goal(&self, goal: NodeId) -> Result<Self> {
        if goal >= self.nodes.len() {
            return Err(Error::UnknownNode(goal));
        }
        let mut rm = self.clone();
        rm.goal = goal;
        Ok(rm)
    }

    /// Nearest node to `p` (lowest id on ties).
    pub fn nearest_node(&self, p: Point2) -> Option<NodeId> {
        self.nodes
            .iter()
            .enumerate()
            .min_by(|a, b| {
                a.1.distance(&p)
                    .total_cmp(&b.1.distance(&p))
                    .then(a.0.cmp(&b.0))
            })
            .map(|(i, _)| i)
    }

    pub fn to_doc(&self) -> RoadmapDoc {
        RoadmapDoc {
            source: self.source,
            goal: self.goal,
            nodes: self.nodes.clone(),
            edges: self.edges.iter().map(|e| [e.from, e.to]).collect(),
        }
    }

    pub fn from_doc(doc: RoadmapDoc) -> Result<Self> {
        Self::from_parts(
            doc.nodes,
            doc.edges.into_iter().map(|[a, b]| (a, b)),
            doc.source,
            doc.goal,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_doc()).expect("roadmap serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: RoadmapDoc = serde_json::from_str(s).map_err(|e| Error::json("roadmap", e))?;
        Self::from_doc(doc)
    }

    /// SHA-256 of the geometry and topology (goal excluded), hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.nodes.len() as u64).to_le_bytes());
        for p in &self.nodes {
            h.update(p.x.to_le_bytes());
            h.update(p.y.to_le_bytes());
        }
        h.update((self.edges.len() as u64).to_le_bytes());
        for e in &self.edges {
            h.update((e.from as u64).to_le_bytes());
            h.update((e.to as u64).to_le_bytes());
        }
        h.update((self.source as u64).to_le_bytes());
        hex::encode(h.finalize())
    }
}

/// Compressed adjacency keyed by `key(edge)`; edge ids stay ascending per node.
fn csr(n: usize, edges: &[Edge], key: impl Fn(&Edge) -> NodeId) -> (Vec<usize>, Vec<EdgeId>) {
    let mut offsets = vec![0usize; n + 1];
    for e in edges {
        offsets[key(e) + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut ids = vec![0; edges.len()];
    for (id, e) in edges.iter().enumerate() {
        ids[fill[key(e)]] = id;
        fill[key(e)] += 1;
    }
    (offsets, ids)
}

/// Builds a PRM with `source` at node 0, `goal` at node 1 (or node 0 when it
/// coincides with the source) and `n_nodes` uniform free samples after them.
/// Pairs within `connect_radius` whose segment is free are joined in both
/// directions.
pub fn build_prm(
    grid: &OccupancyGrid,
    params: &PrmParams,
    source: Point2,
    goal: Point2,
) -> Result<Roadmap> {
    if !(params.connect_radius > 0.0) || !(params.robot_radius >= 0.0) {
        return Err(Error::Config(format!(
            "connect_radius {} / robot_radius {}",
            params.connect_radius, params.robot_radius
        )));
    }
    for (what, p) in [("source", source), ("goal", goal)] {
        if !grid.point_free(p, params.robot_radius) {
            return Err(Error::InCollision {
                what,
                x: p.x,
                y: p.y,
            });
        }
    }

    let mut nodes = vec![source];
    let goal_id = if goal == source {
        0
    } else {
        nodes.push(goal);
        1
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let origin = grid.origin();
    let (w, h) = grid.extent();
    let budget = ATTEMPTS_PER_NODE.saturating_mul(params.n_nodes);
    let mut attempts = 0;
    let mut placed = 0;
    while placed < params.n_nodes {
        if attempts >= budget {
            return Err(Error::SamplingExhausted {
                placed,
                requested: params.n_nodes,
                attempts,
            });
        }
        attempts += 1;
        let p = Point2::new(
            origin.x + rng.gen::<f64>() * w,
            origin.y + rng.gen::<f64>() * h,
        );
        if grid.point_free(p, params.robot_radius) {
            nodes.push(p);
            placed += 1;
        }
    }

    let neighbors = connect(grid, &nodes, params.connect_radius, params.robot_radius);
    let mut out: Vec<Vec<NodeId>> = vec![Vec::new(); nodes.len()];
    for (i, js) in neighbors.iter().enumerate() {
        for &j in js {
            out[i].push(j);
            out[j].push(i);
        }
    }
    let pairs = out.into_iter().enumerate().flat_map(|(i, mut js)| {
        js.sort_unstable();
        js.into_iter().map(move |j| (i, j))
    });
    Roadmap::from_parts(nodes.clone(), pairs.collect::<Vec<_>>(), 0, goal_id)
}

/// For each node `i`, the nodes `j > i` it connects to.
fn connect(
    grid: &OccupancyGrid,
    nodes: &[Point2],
    radius: f64,
    robot_radius: f64,
) -> Vec<Vec<NodeId>> {
    let bucket = |p: &Point2| ((p.x / radius).floor() as i64, (p.y / radius).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<NodeId>> = HashMap::new();
    for (i, p) in nodes.iter().enumerate() {
        buckets.entry(bucket(p)).or_default().push(i);
    }
    (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            let p = nodes[i];
            let (bx, by) = bucket(&p);
            let mut js = Vec::new();
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(cands) = buckets.get(&(bx + dx, by + dy)) {
                        for &j in cands {
                            if j <= i {
                                continue;
                            }
                            let d = p.distance(&nodes[j]);
                            if d > 0.0
                                && d <= radius
                                && grid.segment_free(p, nodes[j], robot_radius)
                            {
                                js.push(j);
                            }
                        }
                    }
                }
            }
            js.sort_unstable();
            js
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, r: f64, seed: u64) -> PrmParams {
        PrmParams {
            n_nodes: n,
            connect_radius: r,
            robot_radius: 5.0,
            seed,
        }
    }

    #[test]
    fn two_nodes_one_meter_apart() {
        let g = OccupancyGrid::empty(50, 50, 1.0).unwrap();
        let rm = build_prm(
            &g,
            &params(0, 2.0, 1),
            Point2::new(20.0, 20.0),
            Point2::new(21.0, 20.0),
        )
        .unwrap();
        assert_eq!(rm.node_count(), 2);
        assert_eq!(rm.edges().len(), 2);
        assert_eq!(rm.in_neighbors(1).unwrap(), vec![0]);
        assert_eq!(rm.in_neighbors(0).unwrap(), vec![1]);
    }

    #[test]
    fn isolated_node_and_unknown_id() {
        let rm = Roadmap::from_parts(vec![Point2::new(0.0, 0.0), Point2::new(5.0, 0.0)], [], 0, 1)
            .unwrap();
        assert!(rm.in_neighbors(1).unwrap().is_empty());
        assert!(matches!(rm.in_neighbors(2), Err(Error::UnknownNode(2))));
    }

    #[test]
    fn self_edges_rejected() {
        assert!(Roadmap::from_parts(vec![Point2::default()], [(0, 0)], 0, 0).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let g = OccupancyGrid::empty(100, 100, 1.0).unwrap();
        let a = build_prm(
            &g,
            &params(200, 15.0, 7),
            Point2::new(10.0, 10.0),
            Point2::new(90.0, 90.0),
        )
        .unwrap();
        let b = build_prm(
            &g,
            &params(200, 15.0, 7),
            Point2::new(10.0, 10.0),
            Point2::new(90.0, 90.0),
        )
        .unwrap();
        assert_eq!(a.nodes(), b.nodes());
        assert_eq!(a.edges(), b.edges());
        assert_eq!(a.content_hash(), b.content_hash());
        let c = build_prm(
            &g,
            &params(200, 15.0, 8),
            Point2::new(10.0, 10.0),
            Point2::new(90.0, 90.0),
        )
        .unwrap();
        assert_ne!(a.content_hash(), c.content_hash());
    }

    #[test]
    fn colliding_endpoints_rejected() {
        let mut g = OccupancyGrid::empty(50, 50, 1.0).unwrap();
        g.fill_rect(Point2::new(30.0, 30.0), Point2::new(40.0, 40.0));
        let err = build_prm(
            &g,
            &params(5, 10.0, 1),
            Point2::new(10.0, 10.0),
            Point2::new(35.0, 35.0),
        );
        assert!(matches!(err, Err(Error::InCollision { what: "goal", .. })));
    }

    #[test]
    fn sampling_budget_exhausts_on_blocked_map() {
        let mut g = OccupancyGrid::empty(30, 30, 1.0).unwrap();
        g.fill_rect(Point2::new(0.0, 0.0), Point2::new(30.0, 30.0));
        for row in 10..20 {
            for col in 10..20 {
                g.set_occupied(col, row, false);
            }
        }
        let p = PrmParams {
            robot_radius: 4.9,
            ..params(3, 5.0, 1)
        };
        let err = build_prm(&g, &p, Point2::new(15.0, 15.0), Point2::new(15.0, 15.0)).unwrap_err();
        assert!(
            matches!(err, Error::SamplingExhausted { attempts: 3000, .. }),
            "{err}"
        );
    }

    #[test]
    fn source_equal_goal_shares_node() {
        let g = OccupancyGrid::empty(50, 50, 1.0).unwrap();
        let rm = build_prm(
            &g,
            &params(0, 5.0, 1),
            Point2::new(20.0, 20.0),
            Point2::new(20.0, 20.0),
        )
        .unwrap();
        assert_eq!(rm.node_count(), 1);
        assert_eq!(rm.goal(), rm.source());
    }

    #[test]
    fn json_roundtrip_preserves_hash() {
        let g = OccupancyGrid::empty(60, 60, 1.0).unwrap();
        let rm = build_prm(
            &g,
            &params(40, 12.0, 3),
            Point2::new(10.0, 10.0),
            Point2::new(50.0, 50.0),
        )
        .unwrap();
        let back = Roadmap::from_json(&rm.to_json()).unwrap();
        assert_eq!(rm.content_hash(), back.content_hash());
        assert_eq!(rm.edges(), back.edges());
    }
}
