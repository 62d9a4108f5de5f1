use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use paretoplan_core::costs::Threat;
use paretoplan_core::geometry::Point2;
use paretoplan_core::io::{
    cmd_convergence, cmd_nodes, cmd_plan, cmd_verify, describe_rounds, format_g12, pareto_csv,
    write_json, PlannerConfig, VerifyOptions,
};
use paretoplan_service::{serve, AppState, ServiceConfig};

#[derive(Parser)]
#[command(
    name = "paretoplan",
    version,
    about = "Pareto fronts of distance versus threat exposure on roadmaps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the instance, plan and write pareto.csv, paths.json, roadmap.json and manifest.json.
    Plan(ConfigArgs),
    /// Full fronts for m, 2m, 4m, ...
    Convergence {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 64)]
        m_start: usize,
        #[arg(long, default_value_t = 4)]
        rounds: usize,
        /// Compare the last front with the exact one (small graphs only).
        #[arg(long)]
        exact: bool,
    },
    /// One front per roadmap size.
    Nodes {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated node counts.
        #[arg(long, value_delimiter = ',', required = true)]
        counts: Vec<usize>,
    },
    /// Run the invariant checks on the configured instance and write verify.json.
    Verify {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 200)]
        oracle_max_nodes: usize,
        /// Corrupt one table entry to exercise the monotonicity check.
        #[arg(long)]
        inject_fault: bool,
        /// Exit with status 2 when any check fails.
        #[arg(long)]
        strict: bool,
    },
    /// Run the HTTP service.
    Serve(ServeArgs),
}

/// A config file plus overrides; every flag mirrors a config key.
#[derive(Args)]
struct ConfigArgs {
    /// TOML config file.
    config: Option<PathBuf>,
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long, value_parser = parse_point)]
    origin: Option<Point2>,
    #[arg(long)]
    robot_radius: Option<f64>,
    #[arg(long, value_parser = parse_point)]
    source: Option<Point2>,
    #[arg(long, value_parser = parse_point)]
    goal: Option<Point2>,
    #[arg(long)]
    n_nodes: Option<usize>,
    #[arg(long)]
    connect_radius: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    swap: bool,
    #[arg(long)]
    visibility: bool,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    quadrature_samples: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    deadline_s: Option<f64>,
    /// `x,y,severity,min_radius[,visibility_radius]`; repeat for several.
    /// Replaces the threats of the config file.
    #[arg(long = "threat", value_parser = parse_threat)]
    threats: Vec<Threat>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Directory served outside the API, e.g. the UI bundle.
    #[arg(long)]
    static_dir: Option<PathBuf>,
    /// Session snapshots; sessions found here are restored on start.
    #[arg(long)]
    persist_dir: Option<PathBuf>,
    /// Default plan time limit in seconds.
    #[arg(long, default_value_t = 30.0)]
    plan_timeout: f64,
    #[arg(long)]
    max_map_bytes: Option<usize>,
    #[arg(long)]
    max_nodes: Option<usize>,
}

fn parse_numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

fn parse_point(s: &str) -> Result<Point2, String> {
    match parse_numbers(s)?[..] {
        [x, y] => Ok(Point2::new(x, y)),
        _ => Err("expected x,y".into()),
    }
}

fn parse_threat(s: &str) -> Result<Threat, String> {
    match parse_numbers(s)?[..] {
        [x, y, sev, r] => Ok(Threat::new(Point2::new(x, y), sev, r)),
        [x, y, sev, r, vis] => {
            Ok(Threat::new(Point2::new(x, y), sev, r).with_visibility_radius(vis))
        }
        _ => Err("expected x,y,severity,min_radius[,visibility_radius]".into()),
    }
}

impl ConfigArgs {
    fn resolve(self) -> Result<PlannerConfig, String> {
        let mut cfg = match &self.config {
            Some(p) => PlannerConfig::load(p).map_err(|e| e.to_string())?,
            None => PlannerConfig::default(),
        };
        if self.map.is_some() || self.graph.is_some() {
            cfg.map = self.map;
            cfg.graph = self.graph;
        }
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f {
                    cfg.$f = v;
                }
            )*};
        }
        macro_rules! set_opt {
            ($($f:ident),*) => {$(
                if self.$f.is_some() {
                    cfg.$f = self.$f;
                }
            )*};
        }
        set!(
            resolution,
            origin,
            robot_radius,
            n_nodes,
            connect_radius,
            seed,
            m,
            quadrature_samples,
            output_dir
        );
        set_opt!(source, goal, budget, delta, epsilon, deadline_s);
        cfg.swap |= self.swap;
        cfg.visibility |= self.visibility;
        if !self.threats.is_empty() {
            cfg.threats = self.threats;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    let err = |e: paretoplan_core::error::Error| e.to_string();
    match cli.command {
        Command::Plan(args) => {
            let cfg = args.resolve()?;
            let out = cmd_plan(&cfg).map_err(err)?;
            print!("{}", pareto_csv(&out.plan));
            eprintln!(
                "{} front points, outputs in {}",
                out.plan.front.len(),
                cfg.output_dir.display()
            );
        }
        Command::Convergence {
            config,
            m_start,
            rounds,
            exact,
        } => {
            let cfg = config.resolve()?;
            let report = cmd_convergence(&cfg, m_start, rounds, exact).map_err(err)?;
            println!("{}", describe_rounds(&report));
            println!("all monotone: {}", report.all_monotone);
            if let Some(e) = &report.exact {
                let c = &e.final_round;
                println!(
                    "exact: breakpoints_match={} conservative={} max_displacement={} bound={}",
                    c.breakpoints_match,
                    c.conservative,
                    format_g12(c.max_displacement),
                    format_g12(c.bound)
                );
            }
        }
        Command::Nodes { config, counts } => {
            let cfg = config.resolve()?;
            let report = cmd_nodes(&cfg, &counts).map_err(err)?;
            for r in &report.rows {
                println!(
                    "n={} edges={} points={} best_primary={} total_s={}",
                    r.n_nodes,
                    r.edges,
                    r.front.len(),
                    format_g12(r.best_primary),
                    format_g12(r.total_s)
                );
            }
            println!(
                "best primary non-increasing: {}",
                report.best_primary_nonincreasing
            );
        }
        Command::Verify {
            config,
            oracle_max_nodes,
            inject_fault,
            strict,
        } => {
            let cfg = config.resolve()?;
            let opts = VerifyOptions {
                oracle_max_nodes,
                inject_fault,
            };
            let report = cmd_verify(&cfg, &opts).map_err(err)?;
            for c in &report.checks {
                println!("{c}");
            }
            std::fs::create_dir_all(&cfg.output_dir).map_err(|e| e.to_string())?;
            write_json(&cfg.output_dir.join("verify.json"), &report).map_err(err)?;
            if strict && !report.passed() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Serve(args) => {
            if !(args.plan_timeout > 0.0 && args.plan_timeout.is_finite()) {
                return Err("--plan-timeout must be positive".into());
            }
            let defaults = ServiceConfig::default();
            let config = ServiceConfig {
                max_map_bytes: args.max_map_bytes.unwrap_or(defaults.max_map_bytes),
                max_nodes: args.max_nodes.unwrap_or(defaults.max_nodes),
                plan_timeout: Duration::from_secs_f64(args.plan_timeout),
                static_dir: args.static_dir,
                persist_dir: args.persist_dir,
                ..defaults
            };
            let (state, failed) = AppState::restore(config);
            for f in failed {
                eprintln!("warning: session not restored: {f}");
            }
            let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            rt.block_on(serve(args.bind, state))
                .map_err(|e| e.to_string())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
