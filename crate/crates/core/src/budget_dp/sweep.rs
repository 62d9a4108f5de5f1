use std::time::Instant;

use rayon::prelude::*;

use super::{BudgetGrid, QuantizedGraph};
use crate::error::{Error, Result};
use crate::roadmap::{EdgeId, NodeId};
use crate::scalar_sp::ScalarLabels;

/// Default cap on `nodes * (levels + 1)` table entries.
pub const DEFAULT_MAX_ENTRIES: usize = 60_000_000;

/// Rows smaller than this are filled sequentially.
const PAR_MIN_NODES: usize = 2048;

const NO_PRED: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct SweepOptions {
    /// Use the label shortcuts for entries at or below the first feasible
    /// level and at or above saturation. Disabling them evaluates the
    /// recurrence everywhere.
    pub shortcuts: bool,
    pub max_entries: usize,
    pub deadline: Option<Instant>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            shortcuts: true,
            max_entries: DEFAULT_MAX_ENTRIES,
            deadline: None,
        }
    }
}

/// Constrained values `W`, slackness `S` and predecessor edges for every
/// `(node, level)`, stored node-major so that the lookbacks of one level stay
/// close together in memory whatever the level count.
#[derive(Debug, Clone)]
pub struct BudgetTable {
    pub(crate) quantized: QuantizedGraph,
    pub(crate) grid: BudgetGrid,
    pub(crate) n: usize,
    pub(crate) source: NodeId,
    pub(crate) reachable: Vec<bool>,
    pub(crate) w: Vec<f64>,
    pub(crate) s: Vec<f64>,
    pub(crate) pred: Vec<u32>,
}

impl BudgetTable {
    fn idx(&self, j: NodeId, level: usize) -> usize {
        j * (self.grid.levels + 1) + level
    }

    pub fn grid(&self) -> &BudgetGrid {
        &self.grid
    }

    pub fn quantized(&self) -> &QuantizedGraph {
        &self.quantized
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn levels(&self) -> usize {
        self.grid.levels
    }

    pub fn is_reachable(&self, j: NodeId) -> bool {
        self.reachable[j]
    }

    /// `W` at `(j, level)`; `+inf` beyond the table or below level 0.
    pub fn w(&self, j: NodeId, level: usize) -> f64 {
        if level > self.grid.levels {
            return f64::INFINITY;
        }
        self.w[self.idx(j, level)]
    }

    pub fn slack(&self, j: NodeId, level: usize) -> f64 {
        self.s[self.idx(j, level)]
    }

    pub fn pred(&self, j: NodeId, level: usize) -> Option<EdgeId> {
        match self.pred[self.idx(j, level)] {
            NO_PRED => None,
            e => Some(e as EdgeId),
        }
    }

    /// `W` of node `j` over levels `0..=levels`.
    pub fn row(&self, j: NodeId) -> Vec<f64> {
        (0..=self.grid.levels).map(|l| self.w(j, l)).collect()
    }

    /// Overwrites one entry; used for fault injection in verification.
    pub fn set_w(&mut self, j: NodeId, level: usize, value: f64) {
        let i = self.idx(j, level);
        self.w[i] = value;
    }

    /// Entrywise equality of `W` values.
    pub fn same_values(&self, other: &BudgetTable) -> bool {
        self.n == other.n
            && self.grid.levels == other.grid.levels
            && self.w.iter().zip(&other.w).all(|(a, b)| a == b)
    }
}

type Entry = (f64, f64, u32);

/// Fills the table level by level. `labels_q` must be computed on the
/// primary weights and the *quantized* level costs of `q` (see
/// [`QuantizedGraph::levels_f64`]).
pub fn sweep(
    q: &QuantizedGraph,
    labels_q: &ScalarLabels,
    grid: &BudgetGrid,
    opts: &SweepOptions,
) -> Result<BudgetTable> {
    let g = q.graph();
    let n = g.node_count();
    let entries = n.saturating_mul(grid.levels + 1);
    if entries > opts.max_entries {
        return Err(Error::TableTooLarge {
            entries,
            cap: opts.max_entries,
        });
    }
    if q.delta() != grid.delta {
        return Err(Error::InvalidBudget(format!(
            "quantized with delta {} but grid has {}",
            q.delta(),
            grid.delta
        )));
    }
    let source = g.roadmap().source();
    let mut table = BudgetTable {
        quantized: q.clone(),
        grid: *grid,
        n,
        source,
        reachable: labels_q.u.iter().map(|u| u.is_finite()).collect(),
        w: vec![f64::INFINITY; entries],
        s: vec![0.0; entries],
        pred: vec![NO_PRED; entries],
    };
    let i0 = table.idx(source, 0);
    table.w[i0] = 0.0;

    let incoming = InEdges::new(q);
    let mut row: Vec<Entry> = Vec::with_capacity(n);
    for level in 1..=grid.levels {
        if let Some(deadline) = opts.deadline {
            if Instant::now() > deadline {
                return Err(Error::DeadlineExceeded);
            }
        }
        sweep_level_into(&table, &incoming, labels_q, level, opts.shortcuts, &mut row);
        for (j, &(w, s, p)) in row.iter().enumerate() {
            let i = table.idx(j, level);
            table.w[i] = w;
            table.s[i] = s;
            table.pred[i] = p;
        }
    }
    Ok(table)
}

/// Recomputes one level from the lower levels already in `table`.
pub fn sweep_level(
    table: &BudgetTable,
    labels_q: &ScalarLabels,
    level: usize,
    shortcuts: bool,
) -> Vec<(f64, f64, Option<EdgeId>)> {
    let mut row = Vec::new();
    let incoming = InEdges::new(&table.quantized);
    sweep_level_into(table, &incoming, labels_q, level, shortcuts, &mut row);
    row.into_iter()
        .map(|(w, s, p)| (w, s, (p != NO_PRED).then_some(p as EdgeId)))
        .collect()
}

/// In-edges grouped by head node with everything the recurrence reads per
/// edge packed together.
struct InEdges {
    offsets: Vec<usize>,
    edges: Vec<InEdge>,
}

struct InEdge {
    from: u32,
    levels: u32,
    id: u32,
    primary: f64,
    /// Quantized minus true secondary cost.
    slack: f64,
}

impl InEdges {
    fn new(q: &QuantizedGraph) -> Self {
        let g = q.graph();
        let rm = g.roadmap();
        let mut offsets = Vec::with_capacity(rm.node_count() + 1);
        let mut edges = Vec::with_capacity(rm.edges().len());
        offsets.push(0);
        for j in 0..rm.node_count() {
            for &e in rm.in_edges(j) {
                edges.push(InEdge {
                    from: rm.edge(e).from as u32,
                    levels: q.level(e) as u32,
                    id: e as u32,
                    primary: g.primary()[e],
                    slack: q.quantized_cost(e) - g.secondary()[e],
                });
            }
            offsets.push(edges.len());
        }
        Self { offsets, edges }
    }

    fn of(&self, j: NodeId) -> &[InEdge] {
        &self.edges[self.offsets[j]..self.offsets[j + 1]]
    }
}

fn sweep_level_into(
    table: &BudgetTable,
    incoming: &InEdges,
    labels_q: &ScalarLabels,
    level: usize,
    shortcuts: bool,
    row: &mut Vec<Entry>,
) {
    let n = table.n;
    let entry = |j: NodeId| node_entry(table, incoming, labels_q, level, shortcuts, j);
    row.clear();
    if n >= PAR_MIN_NODES {
        (0..n).into_par_iter().map(entry).collect_into_vec(row);
    } else {
        row.extend((0..n).map(entry));
    }
}

fn node_entry(
    table: &BudgetTable,
    incoming: &InEdges,
    labels_q: &ScalarLabels,
    level: usize,
    shortcuts: bool,
    j: NodeId,
) -> Entry {
    const INF: Entry = (f64::INFINITY, 0.0, NO_PRED);
    if j == table.source {
        return (0.0, 0.0, NO_PRED);
    }
    let u = labels_q.u[j];
    let first = labels_q.v[j];
    let lvl = level as f64;
    if !u.is_finite() || lvl < first {
        return INF;
    }
    if shortcuts {
        if lvl == first {
            return along_tree(
                table,
                level,
                labels_q.u_tilde[j],
                labels_q.pred_secondary[j],
            );
        }
        if lvl >= labels_q.v_tilde[j] {
            return along_tree(table, level, u, labels_q.pred_primary[j]);
        }
    }
    let mut best = INF;
    for e in incoming.of(j) {
        let qe = e.levels as usize;
        if qe > level {
            continue;
        }
        let prev = table.idx(e.from as usize, level - qe);
        let wi = table.w[prev];
        if !wi.is_finite() {
            continue;
        }
        let cand = e.primary + wi;
        if cand < best.0 {
            best = (cand, e.slack + table.s[prev], e.id);
        }
    }
    best
}

/// Entry whose value comes from a label; the predecessor and slackness
/// follow the label's tree edge into the lower levels.
fn along_tree(table: &BudgetTable, level: usize, value: f64, pred: Option<EdgeId>) -> Entry {
    let Some(e) = pred else {
        return (value, 0.0, NO_PRED);
    };
    let q = &table.quantized;
    let i = q.graph().edge(e).from;
    let prev = table.idx(i, level - q.level(e));
    let slack = q.quantized_cost(e) - q.graph().secondary()[e] + table.s[prev];
    (value, slack, e as u32)
}
