//! Planner configuration, graph input files and instance construction.

mod commands;
mod output;

pub use commands::{
    cmd_convergence, cmd_nodes, cmd_plan, cmd_verify, describe_rounds, plan_instance,
    ConvergenceReport, ConvergenceRound, ExactComparison, NodesReport, NodesRow, RunOutput,
    VerifyOptions,
};
pub use output::{
    format_g12, front_rows, manifest_json, pareto_csv, path_records, write_json, write_outputs,
    FrontRow, Manifest, ManifestTimings, PathRecord,
};

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::budget_dp::{BudgetPolicy, PlanOptions};
use crate::costs::{
    assign_costs, edge_threat_cost, CostModel, Threat, WeightedGraph, DEFAULT_QUADRATURE_SAMPLES,
};
use crate::error::{Error, Result};
use crate::geometry::{load_grid, OccupancyGrid, Point2};
use crate::roadmap::{build_prm, NodeId, PrmParams, Roadmap};
use crate::scalar_sp::DEFAULT_TIE_TOL;

fn default_resolution() -> f64 {
    1.0
}
fn default_robot_radius() -> f64 {
    5.0
}
fn default_n_nodes() -> usize {
    1000
}
fn default_connect_radius() -> f64 {
    20.0
}
fn default_m() -> usize {
    64
}
fn default_quadrature() -> usize {
    DEFAULT_QUADRATURE_SAMPLES
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Flat planner configuration; see the README for every key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    /// Occupancy map (PGM). Exactly one of `map` and `graph` is required.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<PathBuf>,
    /// Explicit graph (JSON) used instead of a sampled roadmap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<PathBuf>,
    /// Meters per map cell.
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    /// World position of the map's lower-left corner.
    #[serde(default)]
    pub origin: Point2,
    #[serde(default = "default_robot_radius")]
    pub robot_radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Point2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Point2>,
    #[serde(default = "default_n_nodes")]
    pub n_nodes: usize,
    #[serde(default = "default_connect_radius")]
    pub connect_radius: f64,
    #[serde(default)]
    pub seed: u64,
    /// Number of budget levels.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Fixed maximal budget; the front then covers `[0, budget]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    /// Explicit budget step; overrides `m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub swap: bool,
    #[serde(default)]
    pub visibility: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default = "default_quadrature")]
    pub quadrature_samples: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Wall-clock limit for the budget sweep, in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline_s: Option<f64>,
    #[serde(default)]
    pub threats: Vec<Threat>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        toml::from_str("").expect("all keys have defaults")
    }
}

impl PlannerConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.map, &mut cfg.graph].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match (&self.map, &self.graph) {
            (Some(_), Some(_)) => return bad("`map` and `graph` are mutually exclusive".into()),
            (None, None) => return bad("one of `map` or `graph` is required".into()),
            _ => {}
        }
        for p in [&self.map, &self.graph].into_iter().flatten() {
            if !p.is_file() {
                return bad(format!("file not found: {}", p.display()));
            }
        }
        if self.map.is_some() {
            if !(self.resolution > 0.0 && self.resolution.is_finite()) {
                return bad(format!(
                    "resolution must be positive, got {}",
                    self.resolution
                ));
            }
            if !(self.robot_radius >= 0.0 && self.robot_radius.is_finite()) {
                return bad(format!(
                    "robot_radius must be non-negative, got {}",
                    self.robot_radius
                ));
            }
            if self.source.is_none() || self.goal.is_none() {
                return bad("`source` and `goal` are required with a map".into());
            }
            if self.n_nodes < 2 {
                return bad(format!("n_nodes must be at least 2, got {}", self.n_nodes));
            }
            if !(self.connect_radius > 0.0 && self.connect_radius.is_finite()) {
                return bad(format!(
                    "connect_radius must be positive, got {}",
                    self.connect_radius
                ));
            }
        }
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if let Some(b) = self.budget {
            if !(b > 0.0 && b.is_finite()) {
                return bad(format!("budget must be positive, got {b}"));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("delta must be positive, got {d}"));
            }
        }
        if let Some(t) = self.deadline_s {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("deadline_s must be positive, got {t}"));
            }
        }
        self.cost_model().validate()
    }

    pub fn cost_model(&self) -> CostModel {
        CostModel {
            threats: self.threats.clone(),
            quadrature_samples: self.quadrature_samples,
            visibility: self.visibility,
            epsilon: self.epsilon,
            swap: self.swap,
        }
    }

    pub fn prm_params(&self) -> PrmParams {
        PrmParams {
            n_nodes: self.n_nodes,
            connect_radius: self.connect_radius,
            robot_radius: self.robot_radius,
            seed: self.seed,
        }
    }

    pub fn policy(&self) -> BudgetPolicy {
        match (self.delta, self.budget) {
            (Some(delta), budget) => BudgetPolicy::Delta { delta, budget },
            (None, Some(budget)) => BudgetPolicy::Budget { m: self.m, budget },
            (None, None) => BudgetPolicy::FullFront { m: self.m },
        }
    }

    pub fn plan_options(&self) -> PlanOptions {
        let mut opts = PlanOptions {
            policy: self.policy(),
            tie_tol: DEFAULT_TIE_TOL,
            sweep: Default::default(),
        };
        opts.sweep.deadline = self
            .deadline_s
            .map(|s| Instant::now() + Duration::from_secs_f64(s));
        opts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphEdge {
    pub from: NodeId,
    pub to: NodeId,
    /// Defaults to the Euclidean edge length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary: Option<f64>,
    /// Defaults to the configured threat exposure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary: Option<f64>,
}

/// Explicit weighted graph, bypassing roadmap sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphInput {
    pub nodes: Vec<Point2>,
    pub edges: Vec<GraphEdge>,
    #[serde(default)]
    pub source: NodeId,
    pub goal: NodeId,
}

impl GraphInput {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::json("graph input", e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text)
    }

    /// Weighted graph; missing weights come from `model` (without occlusion,
    /// which needs a map). Roles are exchanged when `model.swap` is set.
    pub fn to_graph(&self, model: &CostModel) -> Result<WeightedGraph> {
        let rm = Roadmap::from_parts(
            self.nodes.clone(),
            self.edges.iter().map(|e| (e.from, e.to)),
            self.source,
            self.goal,
        )?;
        let mut primary = Vec::with_capacity(self.edges.len());
        let mut secondary = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let (a, b) = (self.nodes[e.from], self.nodes[e.to]);
            primary.push(e.primary.unwrap_or_else(|| a.distance(&b)));
            secondary.push(match e.secondary {
                Some(s) => s,
                None => {
                    let plain = CostModel {
                        visibility: false,
                        ..model.clone()
                    };
                    edge_threat_cost(a, b, &plain, None)?
                }
            });
        }
        if model.swap {
            std::mem::swap(&mut primary, &mut secondary);
        }
        WeightedGraph::new(Arc::new(rm), primary, secondary)
    }

    pub fn from_graph(g: &WeightedGraph) -> Self {
        let rm = g.roadmap();
        Self {
            nodes: rm.nodes().to_vec(),
            edges: rm
                .edges()
                .iter()
                .enumerate()
                .map(|(i, e)| GraphEdge {
                    from: e.from,
                    to: e.to,
                    primary: Some(g.primary()[i]),
                    secondary: Some(g.secondary()[i]),
                })
                .collect(),
            source: rm.source(),
            goal: rm.goal(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildTimings {
    pub roadmap_s: f64,
    pub costs_s: f64,
}

/// A weighted roadmap ready for planning.
#[derive(Debug, Clone)]
pub struct Instance {
    pub grid: Option<OccupancyGrid>,
    pub graph: WeightedGraph,
    pub target: NodeId,
    pub timings: BuildTimings,
}

pub fn load_map(cfg: &PlannerConfig) -> Result<OccupancyGrid> {
    let path = cfg
        .map
        .as_ref()
        .ok_or_else(|| Error::Config("no map configured".into()))?;
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    load_grid(&bytes, cfg.resolution, cfg.origin)
}

/// Roadmap from an already loaded grid.
pub fn build_on_grid(cfg: &PlannerConfig, grid: OccupancyGrid) -> Result<Instance> {
    let (source, goal) = match (cfg.source, cfg.goal) {
        (Some(s), Some(g)) => (s, g),
        _ => {
            return Err(Error::Config(
                "`source` and `goal` are required with a map".into(),
            ))
        }
    };
    let t = Instant::now();
    let rm = build_prm(&grid, &cfg.prm_params(), source, goal)?;
    let roadmap_s = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let target = rm.goal();
    let graph = assign_costs(Arc::new(rm), &cfg.cost_model(), Some(&grid))?;
    Ok(Instance {
        grid: Some(grid),
        graph,
        target,
        timings: BuildTimings {
            roadmap_s,
            costs_s: t.elapsed().as_secs_f64(),
        },
    })
}

pub fn build_instance(cfg: &PlannerConfig) -> Result<Instance> {
    cfg.validate()?;
    if cfg.map.is_some() {
        return build_on_grid(cfg, load_map(cfg)?);
    }
    let path = cfg.graph.as_ref().expect("validated");
    let t = Instant::now();
    let input = GraphInput::load(path)?;
    let graph = input.to_graph(&cfg.cost_model())?;
    Ok(Instance {
        grid: None,
        target: graph.roadmap().goal(),
        graph,
        timings: BuildTimings {
            roadmap_s: 0.0,
            costs_s: t.elapsed().as_secs_f64(),
        },
    })
}
