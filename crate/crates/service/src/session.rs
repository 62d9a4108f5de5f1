use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use base64::Engine;
use paretoplan_core::budget_dp::{plan, PlanOptions, SweepOptions};
use paretoplan_core::costs::{assign_costs, CostModel, Threat, WeightedGraph};
use paretoplan_core::geometry::{load_grid, OccupancyGrid};
use paretoplan_core::io::{front_rows, path_records, GraphInput, PathRecord};
use paretoplan_core::roadmap::{build_prm, NodeId, PrmParams, Roadmap};
use paretoplan_core::scalar_sp::DEFAULT_TIE_TOL;

use crate::api::{
    CreateSession, FrontSummary, MapInfo, PlanRequest, PlanState, SessionInfo, SessionParams,
    StatusResponse,
};
use crate::error::ApiError;
use crate::ServiceConfig;

/// The instance a session plans on: everything derived from the creation
/// request plus the current threats.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub params: SessionParams,
    pub grid: Option<Arc<OccupancyGrid>>,
    pub graph_input: Option<Arc<GraphInput>>,
    pub graph: Arc<WeightedGraph>,
}

impl Workspace {
    pub fn roadmap(&self) -> &Roadmap {
        self.graph.roadmap()
    }

    fn cost_model(params: &SessionParams, threats: &[Threat]) -> CostModel {
        CostModel {
            threats: threats.to_vec(),
            quadrature_samples: params.quadrature_samples,
            visibility: params.visibility,
            epsilon: params.epsilon,
            swap: params.swap,
        }
    }

    /// Decodes the payload and builds the roadmap and edge costs.
    pub fn create(req: &CreateSession, cfg: &ServiceConfig) -> Result<Self, ApiError> {
        let params = req.params();
        match (&req.map, &req.graph) {
            (Some(map), None) => {
                let bytes = base64::engine::general_purpose::STANDARD
                    .decode(map.pgm_base64.trim())
                    .map_err(|e| ApiError::bad_request(format!("map is not valid base64: {e}")))?;
                if bytes.len() > cfg.max_map_bytes {
                    return Err(ApiError::too_large(format!(
                        "map of {} bytes exceeds the limit of {}",
                        bytes.len(),
                        cfg.max_map_bytes
                    )));
                }
                let grid = load_grid(&bytes, map.resolution, map.origin)?;
                if grid.width() * grid.height() > cfg.max_cells {
                    return Err(ApiError::too_large(format!(
                        "map of {}x{} cells exceeds the limit of {}",
                        grid.width(),
                        grid.height(),
                        cfg.max_cells
                    )));
                }
                let model = Self::cost_model(&params, &params.threats);
                if model.threats.is_empty() {
                    return Err(ApiError::bad_request("at least one threat is required"));
                }
                model.validate()?;
                let roadmap = Self::sample(&grid, &params, cfg)?;
                let graph = assign_costs(Arc::new(roadmap), &model, Some(&grid))?;
                Ok(Self {
                    params,
                    grid: Some(Arc::new(grid)),
                    graph_input: None,
                    graph: Arc::new(graph),
                })
            }
            (None, Some(input)) => {
                let graph = input.to_graph(&Self::cost_model(&params, &params.threats))?;
                Ok(Self {
                    params,
                    grid: None,
                    graph_input: Some(Arc::new(input.clone())),
                    graph: Arc::new(graph),
                })
            }
            _ => Err(ApiError::bad_request(
                "exactly one of `map` and `graph` is required",
            )),
        }
    }

    fn sample(
        grid: &OccupancyGrid,
        params: &SessionParams,
        cfg: &ServiceConfig,
    ) -> Result<Roadmap, ApiError> {
        let source = params
            .source
            .ok_or_else(|| ApiError::bad_request("`source` is required with a map"))?;
        if params.n_nodes > cfg.max_nodes {
            return Err(ApiError::too_large(format!(
                "{} nodes requested, limit is {}",
                params.n_nodes, cfg.max_nodes
            )));
        }
        let prm = PrmParams {
            n_nodes: params.n_nodes,
            connect_radius: params.connect_radius,
            robot_radius: params.robot_radius,
            seed: params.seed,
        };
        Ok(build_prm(
            grid,
            &prm,
            source,
            params.goal.unwrap_or(source),
        )?)
    }

    /// Rebuilds from persisted parts with a roadmap that was already sampled.
    pub fn restore(
        params: SessionParams,
        grid: Option<OccupancyGrid>,
        graph_input: Option<GraphInput>,
        roadmap: Option<Roadmap>,
    ) -> Result<Self, ApiError> {
        let model = Self::cost_model(&params, &params.threats);
        let graph = match (&grid, &graph_input, roadmap) {
            (Some(g), _, Some(rm)) => assign_costs(Arc::new(rm), &model, Some(g))?,
            (None, Some(input), _) => input.to_graph(&model)?,
            _ => return Err(ApiError::internal("persisted session is incomplete")),
        };
        Ok(Self {
            params,
            grid: grid.map(Arc::new),
            graph_input: graph_input.map(Arc::new),
            graph: Arc::new(graph),
        })
    }

    /// Same roadmap, edge costs recomputed for `threats`.
    pub fn with_threats(&self, threats: Vec<Threat>) -> Result<Self, ApiError> {
        let model = Self::cost_model(&self.params, &threats);
        let graph = match &self.graph_input {
            Some(input) => input.to_graph(&model)?,
            None => assign_costs(
                self.graph.roadmap_arc().clone(),
                &model,
                self.grid.as_deref(),
            )?,
        };
        Ok(Self {
            params: SessionParams {
                threats,
                ..self.params.clone()
            },
            grid: self.grid.clone(),
            graph_input: self.graph_input.clone(),
            graph: Arc::new(graph),
        })
    }

    pub fn map_info(&self) -> Option<MapInfo> {
        self.grid.as_ref().map(|g| MapInfo {
            width: g.width(),
            height: g.height(),
            resolution: g.resolution(),
            origin: g.origin(),
        })
    }

    fn goal_node(&self, req: &PlanRequest) -> Result<NodeId, ApiError> {
        let rm = self.roadmap();
        if let Some(j) = req.goal_node {
            if j >= rm.node_count() {
                return Err(ApiError::unprocessable(format!("unknown goal node {j}")));
            }
            return Ok(j);
        }
        match req.goal {
            Some(p) => {
                if let Some(grid) = &self.grid {
                    if !grid.point_free(p, self.params.robot_radius) {
                        return Err(ApiError::unprocessable(format!(
                            "goal at ({}, {}) is in collision",
                            p.x, p.y
                        )));
                    }
                }
                rm.nearest_node(p)
                    .ok_or_else(|| ApiError::unprocessable("the roadmap has no nodes"))
            }
            None => Ok(rm.goal()),
        }
    }

    /// Scalar labels, budget sweep and path replay for one request.
    pub fn plan(
        &self,
        req: &PlanRequest,
        default_timeout: Duration,
        seq: u64,
        id: &str,
    ) -> Result<PlanResult, ApiError> {
        let target = self.goal_node(req)?;
        let timeout = match req.timeout_s {
            Some(s) if !(s > 0.0 && s.is_finite()) => {
                return Err(ApiError::bad_request(format!(
                    "timeout_s must be positive, got {s}"
                )))
            }
            Some(s) => Duration::from_secs_f64(s),
            None => default_timeout,
        };
        if let Some(m) = req.m {
            if m == 0 {
                return Err(ApiError::bad_request("m must be at least 1"));
            }
        }
        let opts = PlanOptions {
            policy: req.policy(),
            tie_tol: DEFAULT_TIE_TOL,
            sweep: SweepOptions {
                deadline: Some(Instant::now() + timeout),
                ..SweepOptions::default()
            },
        };
        let p = plan(&self.graph, target, &opts)?;
        let rm = self.roadmap();
        let summary = FrontSummary {
            session: id.to_string(),
            plan_seq: seq,
            roadmap_hash: rm.content_hash(),
            goal_node: target,
            goal: rm.position(target),
            feasible: p.feasible(),
            delta: p.delta(),
            levels: p.grid().map(|g| g.levels),
            k_bound: p.k_bound,
            rows: front_rows(&p),
            path_ids: (0..p.paths.len()).collect(),
            timings: p.timings,
        };
        Ok(PlanResult {
            request: req.clone(),
            summary,
            paths: path_records(&p, rm),
        })
    }
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub request: PlanRequest,
    pub summary: FrontSummary,
    pub paths: Vec<PathRecord>,
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub workspace: Workspace,
    pub latest: Option<PlanResult>,
    pub selected: Option<usize>,
    pub state: PlanState,
    pub started: Option<Instant>,
    pub plans_completed: u64,
    pub last_error: Option<String>,
}

impl Session {
    pub fn new(id: String, workspace: Workspace) -> Self {
        Self {
            id,
            workspace,
            latest: None,
            selected: None,
            state: PlanState::Idle,
            started: None,
            plans_completed: 0,
            last_error: None,
        }
    }

    pub fn status(&self) -> StatusResponse {
        StatusResponse {
            state: self.state,
            plans_completed: self.plans_completed,
            running_for_s: match self.state {
                PlanState::Planning => self.started.map(|t| t.elapsed().as_secs_f64()),
                _ => None,
            },
            last_error: self.last_error.clone(),
        }
    }

    pub fn info(&self) -> SessionInfo {
        let rm = self.workspace.roadmap();
        SessionInfo {
            id: self.id.clone(),
            roadmap_hash: rm.content_hash(),
            nodes: rm.node_count(),
            edges: rm.edges().len(),
            source: rm.source(),
            params: self.workspace.params.clone(),
            map: self.workspace.map_info(),
            status: self.status(),
            selected: self.selected,
            front: self.latest.as_ref().map(|r| r.summary.clone()),
        }
    }
}

/// A session plus the flag that admits one mutating request at a time.
#[derive(Debug)]
pub struct SessionSlot {
    busy: AtomicBool,
    session: Mutex<Session>,
}

/// Held for the duration of a mutating request.
#[derive(Debug)]
pub struct BusyGuard {
    slot: Arc<SessionSlot>,
}

impl Drop for BusyGuard {
    fn drop(&mut self) {
        self.slot.busy.store(false, Ordering::Release);
    }
}

impl SessionSlot {
    pub fn new(session: Session) -> Arc<Self> {
        Arc::new(Self {
            busy: AtomicBool::new(false),
            session: Mutex::new(session),
        })
    }

    /// `None` while another mutating request holds the session.
    pub fn try_begin(self: &Arc<Self>) -> Option<BusyGuard> {
        self.busy
            .compare_exchange(false, true, Ordering::Acquire, Ordering::Relaxed)
            .ok()
            .map(|_| BusyGuard { slot: self.clone() })
    }

    pub fn lock(&self) -> MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|e| e.into_inner())
    }
}
