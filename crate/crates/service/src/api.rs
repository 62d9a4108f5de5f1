//! JSON request and response bodies.

use paretoplan_core::budget_dp::{BudgetPolicy, PlanTimings};
use paretoplan_core::costs::{Threat, DEFAULT_QUADRATURE_SAMPLES};
use paretoplan_core::geometry::Point2;
use paretoplan_core::io::{FrontRow, GraphInput, PathRecord};
use paretoplan_core::roadmap::NodeId;
use serde::{Deserialize, Serialize};

pub const DEFAULT_M: usize = 256;

fn one() -> f64 {
    1.0
}
fn five() -> f64 {
    5.0
}
fn default_n_nodes() -> usize {
    1000
}
fn default_connect_radius() -> f64 {
    20.0
}
fn default_quadrature() -> usize {
    DEFAULT_QUADRATURE_SAMPLES
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapUpload {
    /// PGM file (P2 or P5), base64 encoded.
    pub pgm_base64: String,
    #[serde(default = "one")]
    pub resolution: f64,
    #[serde(default)]
    pub origin: Point2,
}

/// Session parameters other than the map or graph payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionParams {
    pub threats: Vec<Threat>,
    pub source: Option<Point2>,
    pub goal: Option<Point2>,
    pub n_nodes: usize,
    pub connect_radius: f64,
    pub seed: u64,
    pub robot_radius: f64,
    pub quadrature_samples: usize,
    pub visibility: bool,
    pub epsilon: Option<f64>,
    pub swap: bool,
}

/// `POST /sessions`. Exactly one of `map` and `graph`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(default)]
    pub map: Option<MapUpload>,
    #[serde(default)]
    pub graph: Option<GraphInput>,
    #[serde(default)]
    pub threats: Vec<Threat>,
    #[serde(default)]
    pub source: Option<Point2>,
    #[serde(default)]
    pub goal: Option<Point2>,
    #[serde(default = "default_n_nodes")]
    pub n_nodes: usize,
    #[serde(default = "default_connect_radius")]
    pub connect_radius: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "five")]
    pub robot_radius: f64,
    #[serde(default = "default_quadrature")]
    pub quadrature_samples: usize,
    #[serde(default)]
    pub visibility: bool,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub swap: bool,
}

impl CreateSession {
    pub fn params(&self) -> SessionParams {
        SessionParams {
            threats: self.threats.clone(),
            source: self.source,
            goal: self.goal,
            n_nodes: self.n_nodes,
            connect_radius: self.connect_radius,
            seed: self.seed,
            robot_radius: self.robot_radius,
            quadrature_samples: self.quadrature_samples,
            visibility: self.visibility,
            epsilon: self.epsilon,
            swap: self.swap,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: String,
    pub roadmap_hash: String,
    pub nodes: usize,
    pub edges: usize,
    pub source: NodeId,
    /// Roadmap node of the goal given at creation.
    pub goal_node: Option<NodeId>,
}

/// `POST /sessions/{id}/plan`. The goal is a position (snapped to the
/// nearest roadmap node) or a node id; without either the creation goal is
/// used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRequest {
    #[serde(default)]
    pub goal: Option<Point2>,
    #[serde(default)]
    pub goal_node: Option<NodeId>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub budget: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Wall-clock limit in seconds; the server default applies otherwise.
    #[serde(default)]
    pub timeout_s: Option<f64>,
}

impl PlanRequest {
    pub fn policy(&self) -> BudgetPolicy {
        let m = self.m.unwrap_or(DEFAULT_M);
        match (self.delta, self.budget) {
            (Some(delta), budget) => BudgetPolicy::Delta { delta, budget },
            (None, Some(budget)) => BudgetPolicy::Budget { m, budget },
            (None, None) => BudgetPolicy::FullFront { m },
        }
    }

    /// Fields of `self` override those of `base`.
    pub fn merged_over(&self, base: &PlanRequest) -> PlanRequest {
        PlanRequest {
            goal: self.goal.or(base.goal),
            goal_node: self.goal_node.or(if self.goal.is_some() {
                None
            } else {
                base.goal_node
            }),
            m: self.m.or(base.m),
            budget: self.budget.or(base.budget),
            delta: self.delta.or(base.delta),
            timeout_s: self.timeout_s.or(base.timeout_s),
        }
    }
}

/// `POST /sessions/{id}/replan`: new threats plus optional plan overrides.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplanRequest {
    #[serde(default)]
    pub threats: Option<Vec<Threat>>,
    #[serde(default)]
    pub goal: Option<Point2>,
    #[serde(default)]
    pub goal_node: Option<NodeId>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub budget: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub timeout_s: Option<f64>,
}

impl ReplanRequest {
    pub fn plan_overrides(&self) -> PlanRequest {
        PlanRequest {
            goal: self.goal,
            goal_node: self.goal_node,
            m: self.m,
            budget: self.budget,
            delta: self.delta,
            timeout_s: self.timeout_s,
        }
    }
}

/// Front of the latest plan; rows mirror `pareto.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontSummary {
    pub session: String,
    /// Number of plans completed in this session, this one included.
    pub plan_seq: u64,
    pub roadmap_hash: String,
    pub goal_node: NodeId,
    pub goal: Point2,
    /// False when the budget admits no path.
    pub feasible: bool,
    pub delta: Option<f64>,
    pub levels: Option<usize>,
    pub k_bound: f64,
    pub rows: Vec<FrontRow>,
    /// Ids for `GET /sessions/{id}/paths/{k}`, one per row.
    pub path_ids: Vec<usize>,
    pub timings: PlanTimings,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathResponse {
    #[serde(flatten)]
    pub path: PathRecord,
    pub selected: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectRequest {
    pub k: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectResponse {
    pub selected: usize,
    pub budget: f64,
    pub primary: f64,
    pub secondary: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanState {
    Idle,
    Planning,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatusResponse {
    pub state: PlanState,
    pub plans_completed: u64,
    pub running_for_s: Option<f64>,
    pub last_error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapInfo {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: Point2,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
    pub roadmap_hash: String,
    pub nodes: usize,
    pub edges: usize,
    pub source: NodeId,
    pub params: SessionParams,
    pub map: Option<MapInfo>,
    pub status: StatusResponse,
    pub selected: Option<usize>,
    pub front: Option<FrontSummary>,
}
