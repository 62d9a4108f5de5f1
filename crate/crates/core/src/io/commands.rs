use std::fs;

use serde::Serialize;

use super::output::{format_g12, front_rows, pareto_csv, write_json, write_outputs, FrontRow};
use super::{build_instance, build_on_grid, load_map, Instance, PlannerConfig};
use crate::budget_dp::{plan, quantize_cost, refine_doubling, Plan, PlanOptions};
use crate::error::{Error, Result};
use crate::oracle::{exact_fronts, exact_pareto, DEFAULT_LABEL_CAP};
use crate::verify::{self, compare_fronts, FrontComparison, Report};

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: PlannerConfig,
    pub instance: Instance,
    pub plan: Plan,
}

pub fn plan_instance(cfg: &PlannerConfig, instance: &Instance) -> Result<Plan> {
    plan(&instance.graph, instance.target, &cfg.plan_options())
}

/// Builds the instance, plans and writes the run artifacts to
/// `cfg.output_dir`.
pub fn cmd_plan(cfg: &PlannerConfig) -> Result<RunOutput> {
    let instance = build_instance(cfg)?;
    let plan = plan_instance(cfg, &instance)?;
    write_outputs(&cfg.output_dir, cfg, &instance, &plan)?;
    Ok(RunOutput {
        config: cfg.clone(),
        instance,
        plan,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRound {
    pub m: usize,
    pub delta: Option<f64>,
    pub levels: Option<usize>,
    pub front: Vec<FrontRow>,
    /// Finer front at least as good as the previous one at every budget of
    /// the previous one.
    pub monotone_vs_previous: Option<bool>,
    /// Largest primary improvement over the previous round at its
    /// breakpoints.
    pub max_gap_vs_previous: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactComparison {
    pub final_round: FrontComparison,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub rounds: Vec<ConvergenceRound>,
    pub all_monotone: bool,
    pub exact: Option<ExactComparison>,
}

/// Full-front plans for `m_start * 2^k`, `k < rounds`. Writes
/// `pareto_m{m}.csv` per round and `convergence.json`. With `with_exact`
/// the final front is compared with the exact one.
pub fn cmd_convergence(
    cfg: &PlannerConfig,
    m_start: usize,
    rounds: usize,
    with_exact: bool,
) -> Result<ConvergenceReport> {
    let instance = build_instance(cfg)?;
    let g = &instance.graph;
    let opts = PlanOptions {
        policy: crate::budget_dp::BudgetPolicy::FullFront { m: m_start },
        ..cfg.plan_options()
    };
    let r = refine_doubling(g, instance.target, m_start, rounds, &opts)?;
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| Error::io(format!("creating {}", cfg.output_dir.display()), e))?;
    let mut out = Vec::with_capacity(r.rounds.len());
    for (k, round) in r.rounds.iter().enumerate() {
        let gap = (k > 0).then(|| {
            let coarse = &r.rounds[k - 1].plan;
            coarse
                .front
                .points
                .iter()
                .map(|p| p.primary - round.plan.front.value_at_level(2 * p.level))
                .filter(|d| d.is_finite())
                .fold(0.0f64, f64::max)
        });
        let path = cfg.output_dir.join(format!("pareto_m{}.csv", round.m));
        fs::write(&path, pareto_csv(&round.plan))
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        out.push(ConvergenceRound {
            m: round.m,
            delta: round.plan.delta(),
            levels: round.plan.grid().map(|g| g.levels),
            front: front_rows(&round.plan),
            monotone_vs_previous: (k > 0).then(|| r.monotone[k - 1]),
            max_gap_vs_previous: gap,
        });
    }
    let exact = if with_exact {
        let last = &r.rounds.last().expect("at least one round").plan;
        let front = exact_pareto(g, instance.target, None, DEFAULT_LABEL_CAP)?;
        Some(ExactComparison {
            final_round: compare_fronts(&front, last),
        })
    } else {
        None
    };
    let report = ConvergenceReport {
        all_monotone: r.all_monotone(),
        rounds: out,
        exact,
    };
    write_json(&cfg.output_dir.join("convergence.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct NodesRow {
    pub n_nodes: usize,
    pub edges: usize,
    pub roadmap_hash: String,
    pub front: Vec<FrontRow>,
    /// Primary cost with the largest budget considered.
    pub best_primary: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NodesReport {
    pub rows: Vec<NodesRow>,
    /// Best primary cost never increases with the node count. Sample sets
    /// are not nested, so this is a diagnostic only.
    pub best_primary_nonincreasing: bool,
}

/// One roadmap and plan per node count. Writes `pareto_n{n}.csv` per run
/// and `nodes.json`. Requires a map.
pub fn cmd_nodes(cfg: &PlannerConfig, counts: &[usize]) -> Result<NodesReport> {
    cfg.validate()?;
    if cfg.map.is_none() {
        return Err(Error::Config("the node study needs a map".into()));
    }
    if counts.is_empty() {
        return Err(Error::Config("no node counts given".into()));
    }
    let grid = load_map(cfg)?;
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| Error::io(format!("creating {}", cfg.output_dir.display()), e))?;
    let mut rows = Vec::with_capacity(counts.len());
    for &n in counts {
        let run_cfg = PlannerConfig {
            n_nodes: n,
            ..cfg.clone()
        };
        run_cfg.validate()?;
        let instance = build_on_grid(&run_cfg, grid.clone())?;
        let plan = plan_instance(&run_cfg, &instance)?;
        let path = cfg.output_dir.join(format!("pareto_n{n}.csv"));
        fs::write(&path, pareto_csv(&plan))
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        rows.push(NodesRow {
            n_nodes: n,
            edges: instance.graph.roadmap().edges().len(),
            roadmap_hash: instance.graph.roadmap().content_hash(),
            best_primary: plan
                .front
                .points
                .last()
                .map_or(f64::INFINITY, |p| p.primary),
            front: front_rows(&plan),
            total_s: instance.timings.roadmap_s + instance.timings.costs_s + plan.timings.total_s(),
        });
    }
    let report = NodesReport {
        best_primary_nonincreasing: rows
            .windows(2)
            .all(|w| w[1].best_primary <= w[0].best_primary),
        rows,
    };
    write_json(&cfg.output_dir.join("nodes.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// The exact oracle runs only up to this many nodes.
    pub oracle_max_nodes: usize,
    /// Corrupts one table entry before the monotonicity check.
    pub inject_fault: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            oracle_max_nodes: 200,
            inject_fault: false,
        }
    }
}

/// Runs every invariant family on the configured instance. Check failures
/// are report content; only instance construction and planning errors are
/// returned as errors.
pub fn cmd_verify(cfg: &PlannerConfig, opts: &VerifyOptions) -> Result<Report> {
    let instance = build_instance(cfg)?;
    let g = &instance.graph;
    let mut plan = plan_instance(cfg, &instance)?;

    let exact = if g.node_count() <= opts.oracle_max_nodes {
        match exact_fronts(g, plan.grid().map(|gr| gr.max_budget()), DEFAULT_LABEL_CAP) {
            Ok(e) => Some(e),
            Err(Error::LabelCapExceeded(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let mut report = verify::verify_plan(g, &plan, exact.as_ref());
    if let Some(grid) = &instance.grid {
        report
            .checks
            .push(verify::check_roadmap(grid, g.roadmap(), cfg.robot_radius));
    }
    if let (Some(table), Some(delta)) = (&plan.table, plan.delta()) {
        let exact_multiples = g
            .secondary()
            .iter()
            .all(|&c| (quantize_cost(c, delta) * delta - c).abs() <= 1e-12 * c);
        if exact_multiples {
            report.checks.push(verify::check_zero_slack(table));
            if let Some(e) = &exact {
                report.checks.push(verify::check_oracle_equality(table, e));
            }
        }
    }
    if opts.inject_fault {
        if let Some(table) = plan.table.as_mut() {
            if let Some((j, l)) = fault_site(table) {
                let v = table.w(j, l) + 1.0;
                table.set_w(j, l + 1, v);
            }
            let mut c = verify::check_monotone(table);
            c.name = "monotone_rows_after_fault".into();
            report.checks.push(c);
        }
    }
    Ok(report)
}

/// First `(node, level)` whose entry and successor are both finite.
fn fault_site(table: &crate::budget_dp::BudgetTable) -> Option<(usize, usize)> {
    (0..table.node_count()).find_map(|j| {
        (0..table.levels())
            .find(|&l| table.w(j, l).is_finite())
            .map(|l| (j, l))
    })
}

/// One summary line per round, for terminals.
pub fn describe_rounds(report: &ConvergenceReport) -> String {
    report
        .rounds
        .iter()
        .map(|r| {
            format!(
                "m={} delta={} points={} monotone={}",
                r.m,
                r.delta.map_or("-".into(), format_g12),
                r.front.len(),
                r.monotone_vs_previous.map_or("-".into(), |b| b.to_string())
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}
