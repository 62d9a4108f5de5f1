use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BuildTimings, Instance, PlannerConfig};
use crate::budget_dp::{Plan, PlanTimings};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::roadmap::{EdgeId, NodeId, Roadmap, RoadmapStats};

/// `%.12g`: 12 significant digits, trailing zeros trimmed, exponent form
/// outside `[1e-4, 1e12)`.
pub fn format_g12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One row of `pareto.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontRow {
    pub level_index: usize,
    pub budget: f64,
    pub primary_cost: f64,
    pub slackness: f64,
    pub true_secondary_cost: f64,
}

pub fn front_rows(plan: &Plan) -> Vec<FrontRow> {
    plan.front
        .points
        .iter()
        .zip(&plan.paths)
        .map(|(f, p)| FrontRow {
            level_index: f.level,
            budget: f.budget,
            primary_cost: f.primary,
            slackness: f.slackness,
            true_secondary_cost: p.secondary,
        })
        .collect()
}

pub fn pareto_csv(plan: &Plan) -> String {
    let mut out = String::from("level_index,budget,primary_cost,slackness,true_secondary_cost\n");
    for r in front_rows(plan) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.level_index,
            format_g12(r.budget),
            format_g12(r.primary_cost),
            format_g12(r.slackness),
            format_g12(r.true_secondary_cost)
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub index: usize,
    pub level: usize,
    pub budget: f64,
    pub primary: f64,
    pub secondary: f64,
    pub quantized_secondary: f64,
    pub slackness: f64,
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
    /// Node positions in meters.
    pub polyline: Vec<Point2>,
}

pub fn path_records(plan: &Plan, rm: &Roadmap) -> Vec<PathRecord> {
    plan.paths
        .iter()
        .enumerate()
        .map(|(index, p)| PathRecord {
            index,
            level: p.level,
            budget: p.budget,
            primary: p.primary,
            secondary: p.secondary,
            quantized_secondary: p.quantized_secondary,
            slackness: p.slackness,
            nodes: p.nodes.clone(),
            edges: p.edges.clone(),
            polyline: p.nodes.iter().map(|&n| rm.position(n)).collect(),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestTimings {
    #[serde(flatten)]
    pub build: BuildTimings,
    #[serde(flatten)]
    pub plan: PlanTimings,
    pub total_s: f64,
}

/// Everything needed to reproduce and audit a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: PlannerConfig,
    pub roadmap_hash: String,
    pub source: NodeId,
    pub target: NodeId,
    pub stats: RoadmapStats,
    pub delta: Option<f64>,
    pub levels: Option<usize>,
    pub k_bound: f64,
    pub k_bound_quantized: f64,
    /// Label-setting ties broken within tolerance (true + quantized labels).
    pub tolerance_ties: usize,
    pub feasible: bool,
    pub front_points: usize,
    pub timings: ManifestTimings,
}

pub fn manifest_json(cfg: &PlannerConfig, instance: &Instance, plan: &Plan) -> Manifest {
    let rm = instance.graph.roadmap();
    Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        roadmap_hash: rm.content_hash(),
        source: rm.source(),
        target: plan.target,
        stats: rm.stats(),
        delta: plan.delta(),
        levels: plan.grid().map(|g| g.levels),
        k_bound: plan.k_bound,
        k_bound_quantized: plan.k_bound_quantized,
        tolerance_ties: plan.labels.tolerance_ties
            + plan.labels_q.as_ref().map_or(0, |l| l.tolerance_ties),
        feasible: plan.feasible(),
        front_points: plan.front.points.len(),
        timings: ManifestTimings {
            build: instance.timings,
            plan: plan.timings,
            total_s: instance.timings.roadmap_s + instance.timings.costs_s + plan.timings.total_s(),
        },
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::json(path.display().to_string(), e))?;
    write_text(path, &(text + "\n"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// `pareto.csv`, `paths.json`, `roadmap.json` and `manifest.json` in `dir`.
pub fn write_outputs(
    dir: &Path,
    cfg: &PlannerConfig,
    instance: &Instance,
    plan: &Plan,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    write_text(&dir.join("pareto.csv"), &pareto_csv(plan))?;
    write_json(
        &dir.join("paths.json"),
        &path_records(plan, instance.graph.roadmap()),
    )?;
    write_text(
        &dir.join("roadmap.json"),
        &(instance.graph.roadmap().to_json() + "\n"),
    )?;
    write_json(
        &dir.join("manifest.json"),
        &manifest_json(cfg, instance, plan),
    )
}
