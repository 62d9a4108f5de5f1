//! Edge weights: Euclidean distance and integrated threat exposure.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{OccupancyGrid, Point2};
use crate::roadmap::{Edge, EdgeId, Roadmap};

pub const DEFAULT_QUADRATURE_SAMPLES: usize = 32;

/// Inverse-square threat with a saturated core and a far-field floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threat {
    pub position: Point2,
    pub severity: f64,
    #[serde(default)]
    pub min_radius: f64,
    /// `None` means unbounded visibility.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibility_radius: Option<f64>,
}

impl Threat {
    pub fn new(position: Point2, severity: f64, min_radius: f64) -> Self {
        Self {
            position,
            severity,
            min_radius,
            visibility_radius: None,
        }
    }

    pub fn with_visibility_radius(mut self, r: f64) -> Self {
        self.visibility_radius = Some(r);
        self
    }

    pub fn outer_radius(&self) -> f64 {
        self.visibility_radius.unwrap_or(f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() {
            return Err(Error::InvalidThreat("non-finite position".into()));
        }
        if !(self.severity > 0.0 && self.severity.is_finite()) {
            return Err(Error::InvalidThreat(format!("severity {}", self.severity)));
        }
        if !(self.min_radius >= 0.0 && self.min_radius.is_finite()) {
            return Err(Error::InvalidThreat(format!(
                "min_radius {}",
                self.min_radius
            )));
        }
        if !(self.outer_radius() > self.min_radius) {
            return Err(Error::InvalidThreat(format!(
                "visibility radius {} must exceed min radius {}",
                self.outer_radius(),
                self.min_radius
            )));
        }
        Ok(())
    }

    /// Instantaneous exposure rate at `x`.
    pub fn level(&self, x: Point2) -> Result<f64> {
        let d = x.distance(&self.position);
        let (s, r, big_r) = (self.severity, self.min_radius, self.outer_radius());
        if d <= r {
            if r == 0.0 {
                return Err(Error::SingularThreat {
                    x: self.position.x,
                    y: self.position.y,
                });
            }
            Ok(s / (r * r))
        } else if d < big_r {
            Ok(s / (d * d))
        } else {
            Ok(s / (big_r * big_r))
        }
    }
}

/// Summed exposure rate of all threats at `x`.
pub fn threat_level(threats: &[Threat], x: Point2) -> Result<f64> {
    threats.iter().map(|t| t.level(x)).sum()
}

/// Like [`threat_level`], but a threat without line of sight to `x`
/// contributes `epsilon` instead.
pub fn threat_level_vis(
    threats: &[Threat],
    grid: &OccupancyGrid,
    x: Point2,
    epsilon: f64,
) -> Result<f64> {
    threats
        .iter()
        .map(|t| {
            if grid.line_of_sight(x, t.position) {
                t.level(x)
            } else {
                Ok(epsilon)
            }
        })
        .sum()
}

/// Default occlusion floor: the reciprocal of the map area.
pub fn default_epsilon(grid: &OccupancyGrid) -> f64 {
    1.0 / grid.area()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub threats: Vec<Threat>,
    pub quadrature_samples: usize,
    pub visibility: bool,
    /// Occlusion floor; defaults to [`default_epsilon`] when visibility is on.
    pub epsilon: Option<f64>,
    /// Threat exposure becomes the primary cost and distance the secondary.
    pub swap: bool,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            threats: Vec::new(),
            quadrature_samples: DEFAULT_QUADRATURE_SAMPLES,
            visibility: false,
            epsilon: None,
            swap: false,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        if self.quadrature_samples < 2 {
            return Err(Error::InvalidCostModel(format!(
                "quadrature_samples {} < 2",
                self.quadrature_samples
            )));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidCostModel(format!("epsilon {eps}")));
            }
        }
        self.threats.iter().try_for_each(Threat::validate)
    }

    fn effective_epsilon(&self, grid: &OccupancyGrid) -> f64 {
        self.epsilon.unwrap_or_else(|| default_epsilon(grid))
    }
}

pub fn distance_cost(edge: &Edge, from: Point2, to: Point2) -> Result<f64> {
    let d = from.distance(&to);
    if d > 0.0 {
        Ok(d)
    } else {
        Err(Error::InvalidGraph(format!(
            "zero-length edge ({}, {})",
            edge.from, edge.to
        )))
    }
}

/// Composite-midpoint quadrature of the exposure integral along `[a, b]`.
pub fn edge_threat_cost(
    a: Point2,
    b: Point2,
    model: &CostModel,
    grid: Option<&OccupancyGrid>,
) -> Result<f64> {
    let q = model.quadrature_samples;
    let len = a.distance(&b);
    let vis = match (model.visibility, grid) {
        (true, Some(g)) => Some((g, model.effective_epsilon(g))),
        (true, None) => {
            return Err(Error::InvalidCostModel(
                "visibility requires an occupancy grid".into(),
            ))
        }
        _ => None,
    };
    let mut sum = 0.0;
    for k in 0..q {
        let t = (k as f64 + 0.5) / q as f64;
        let x = a.lerp(&b, t);
        sum += match vis {
            Some((g, eps)) => threat_level_vis(&model.threats, g, x, eps)?,
            None => threat_level(&model.threats, x)?,
        };
    }
    Ok(len * sum / q as f64)
}

/// Roadmap with strictly positive primary and secondary edge weights.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    roadmap: Arc<Roadmap>,
    primary: Vec<f64>,
    secondary: Vec<f64>,
}

impl WeightedGraph {
    pub fn new(roadmap: Arc<Roadmap>, primary: Vec<f64>, secondary: Vec<f64>) -> Result<Self> {
        let m = roadmap.edges().len();
        if primary.len() != m || secondary.len() != m {
            return Err(Error::InvalidGraph(format!(
                "{m} edges but {} primary / {} secondary weights",
                primary.len(),
                secondary.len()
            )));
        }
        for (which, w) in [("primary", &primary), ("secondary", &secondary)] {
            if let Some((edge, &value)) = w
                .iter()
                .enumerate()
                .find(|(_, &v)| !(v > 0.0 && v.is_finite()))
            {
                return Err(Error::NonPositiveWeight { edge, which, value });
            }
        }
        Ok(Self {
            roadmap,
            primary,
            secondary,
        })
    }

    pub fn roadmap(&self) -> &Roadmap {
        &self.roadmap
    }

    pub fn roadmap_arc(&self) -> &Arc<Roadmap> {
        &self.roadmap
    }

    pub fn primary(&self) -> &[f64] {
        &self.primary
    }

    pub fn secondary(&self) -> &[f64] {
        &self.secondary
    }

    pub fn node_count(&self) -> usize {
        self.roadmap.node_count()
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        self.roadmap.edge(id)
    }

    /// The same graph with primary and secondary roles exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            roadmap: self.roadmap.clone(),
            primary: self.secondary.clone(),
            secondary: self.primary.clone(),
        }
    }

    pub fn min_primary(&self) -> f64 {
        self.primary.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_secondary(&self) -> f64 {
        self.secondary.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `(primary, secondary)` totals along a sequence of edges.
    pub fn path_costs(&self, edges: &[EdgeId]) -> (f64, f64) {
        edges.iter().fold((0.0, 0.0), |(p, s), &e| {
            (p + self.primary[e], s + self.secondary[e])
        })
    }
}

/// Distance and threat exposure per edge; roles exchanged when `model.swap`.
pub fn assign_costs(
    roadmap: Arc<Roadmap>,
    model: &CostModel,
    grid: Option<&OccupancyGrid>,
) -> Result<WeightedGraph> {
    model.validate()?;
    let nodes = roadmap.nodes();
    let pairs: Vec<(f64, f64)> = roadmap
        .edges()
        .par_iter()
        .map(|e| {
            let (a, b) = (nodes[e.from], nodes[e.to]);
            Ok((
                distance_cost(e, a, b)?,
                edge_threat_cost(a, b, model, grid)?,
            ))
        })
        .collect::<Result<_>>()?;
    let (dist, threat): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    if model.swap {
        WeightedGraph::new(roadmap, threat, dist)
    } else {
        WeightedGraph::new(roadmap, dist, threat)
    }
}
