use std::fs;
use std::path::Path;

use paretoplan_core::geometry::{encode_pgm, OccupancyGrid, Point2};
use paretoplan_core::instances;
use paretoplan_core::io::{
    cmd_convergence, cmd_nodes, cmd_plan, cmd_verify, GraphInput, PlannerConfig, VerifyOptions,
};
use tempfile::TempDir;

fn write_two_path(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("two_path.json");
    let input = GraphInput::from_graph(&instances::two_path_graph());
    fs::write(&path, serde_json::to_string(&input).unwrap()).unwrap();
    path
}

fn write_empty_map(dir: &Path, side: usize) -> std::path::PathBuf {
    let path = dir.join("map.pgm");
    fs::write(
        &path,
        encode_pgm(&OccupancyGrid::empty(side, side, 1.0).unwrap()),
    )
    .unwrap();
    path
}

fn graph_config(dir: &Path) -> PlannerConfig {
    PlannerConfig {
        graph: Some(write_two_path(dir)),
        delta: Some(0.6),
        output_dir: dir.join("out"),
        ..PlannerConfig::default()
    }
}

#[test]
fn two_path_graph_pareto_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = graph_config(dir.path());
    cmd_plan(&cfg).unwrap();
    let csv = fs::read_to_string(cfg.output_dir.join("pareto.csv")).unwrap();
    assert_eq!(
        csv,
        "level_index,budget,primary_cost,slackness,true_secondary_cost\n\
         5,3,3,0,3\n\
         6,3.6,2.8,0.8,2.8\n"
    );
    let paths: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cfg.output_dir.join("paths.json")).unwrap())
            .unwrap();
    assert_eq!(paths[1]["nodes"], serde_json::json!([0, 1, 2]));
    assert_eq!(paths[1]["polyline"][1], serde_json::json!([2.0, 1.0]));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cfg.output_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["levels"], 6);
    assert_eq!(manifest["front_points"], 2);
    assert!(manifest["timings"]["sweep_s"].is_number());
    assert!(cfg.output_dir.join("roadmap.json").is_file());
}

#[test]
fn config_file_relative_paths() {
    let dir = TempDir::new().unwrap();
    write_two_path(dir.path());
    let cfg_path = dir.path().join("plan.toml");
    fs::write(
        &cfg_path,
        "graph = \"two_path.json\"\ndelta = 0.6\noutput_dir = \"run\"\n",
    )
    .unwrap();
    let cfg = PlannerConfig::load(&cfg_path).unwrap();
    cmd_plan(&cfg).unwrap();
    assert!(dir.path().join("run/pareto.csv").is_file());
}

#[test]
fn trivial_source_equals_goal() {
    let dir = TempDir::new().unwrap();
    let cfg = PlannerConfig {
        map: Some(write_empty_map(dir.path(), 60)),
        source: Some(Point2::new(30.0, 30.0)),
        goal: Some(Point2::new(30.0, 30.0)),
        n_nodes: 50,
        connect_radius: 15.0,
        threats: vec![paretoplan_core::costs::Threat::new(
            Point2::new(10.0, 10.0),
            1.0,
            2.0,
        )],
        output_dir: dir.path().join("out"),
        ..PlannerConfig::default()
    };
    let run = cmd_plan(&cfg).unwrap();
    assert_eq!(run.plan.front.points.len(), 1);
    let csv = fs::read_to_string(cfg.output_dir.join("pareto.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "0,0,0,0,0");
}

#[test]
fn two_threat_config_echoed_and_reproducible() {
    let dir = TempDir::new().unwrap();
    let map = write_empty_map(dir.path(), 150);
    let text = format!(
        r#"
map = "{}"
source = [10.0, 10.0]
goal = [140.0, 140.0]
n_nodes = 400
connect_radius = 20.0
seed = 7
m = 64
output_dir = "out_a"

[[threats]]
position = [75.0, 97.5]
severity = 20.0
min_radius = 5.0

[[threats]]
position = [75.0, 60.0]
severity = 5.0
min_radius = 5.0
"#,
        map.display()
    );
    let cfg_path = dir.path().join("threats.toml");
    fs::write(&cfg_path, &text).unwrap();
    let cfg = PlannerConfig::load(&cfg_path).unwrap();
    let run = cmd_plan(&cfg).unwrap();
    assert!(run.plan.front.points.len() > 1);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cfg.output_dir.join("manifest.json")).unwrap())
            .unwrap();
    let threats = &manifest["config"]["threats"];
    assert_eq!(threats[0]["position"], serde_json::json!([75.0, 97.5]));
    assert_eq!(threats[0]["severity"], 20.0);
    assert_eq!(threats[1]["min_radius"], 5.0);
    assert!(threats[0].get("visibility_radius").is_none());
    assert_eq!(manifest["config"]["robot_radius"], 5.0);

    let again = PlannerConfig {
        output_dir: dir.path().join("out_b"),
        ..cfg.clone()
    };
    cmd_plan(&again).unwrap();
    let a = fs::read(cfg.output_dir.join("pareto.csv")).unwrap();
    let b = fs::read(again.output_dir.join("pareto.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        fs::read(cfg.output_dir.join("roadmap.json")).unwrap(),
        fs::read(again.output_dir.join("roadmap.json")).unwrap()
    );
}

#[test]
fn single_convergence_round_matches_plan() {
    let dir = TempDir::new().unwrap();
    let mut cfg = graph_config(dir.path());
    cfg.delta = None;
    cfg.m = 8;
    cmd_plan(&cfg).unwrap();
    let report = cmd_convergence(&cfg, 8, 1, false).unwrap();
    assert_eq!(report.rounds.len(), 1);
    assert_eq!(
        fs::read(cfg.output_dir.join("pareto.csv")).unwrap(),
        fs::read(cfg.output_dir.join("pareto_m8.csv")).unwrap()
    );
}

#[test]
fn convergence_rounds_monotone_and_reach_exact_front() {
    let dir = TempDir::new().unwrap();
    let mut cfg = graph_config(dir.path());
    cfg.delta = None;
    let report = cmd_convergence(&cfg, 4, 4, true).unwrap();
    let ms: Vec<usize> = report.rounds.iter().map(|r| r.m).collect();
    assert_eq!(ms, vec![4, 8, 16, 32]);
    assert!(report.all_monotone);
    let exact = report.exact.unwrap().final_round;
    assert!(exact.conservative && exact.within_bound);
    assert!(cfg.output_dir.join("convergence.json").is_file());
    assert!(cfg.output_dir.join("pareto_m32.csv").is_file());
}

#[test]
fn node_study_writes_one_front_per_count() {
    let dir = TempDir::new().unwrap();
    let cfg = PlannerConfig {
        map: Some(write_empty_map(dir.path(), 100)),
        source: Some(Point2::new(10.0, 10.0)),
        goal: Some(Point2::new(90.0, 90.0)),
        connect_radius: 25.0,
        m: 32,
        threats: vec![paretoplan_core::costs::Threat::new(
            Point2::new(50.0, 50.0),
            10.0,
            5.0,
        )],
        output_dir: dir.path().join("out"),
        ..PlannerConfig::default()
    };
    let report = cmd_nodes(&cfg, &[100, 200, 400]).unwrap();
    assert_eq!(report.rows.len(), 3);
    assert!(report.rows.windows(2).all(|w| w[1].edges > w[0].edges));
    for n in [100, 200, 400] {
        assert!(cfg.output_dir.join(format!("pareto_n{n}.csv")).is_file());
    }
    assert!(cmd_nodes(&graph_config(dir.path()), &[10]).is_err());
}

#[test]
fn verify_two_path_graph() {
    let dir = TempDir::new().unwrap();
    let cfg = graph_config(dir.path());
    let report = cmd_verify(&cfg, &VerifyOptions::default()).unwrap();
    assert!(report.passed(), "{report}");
    assert!(report.get("conservative").is_some());

    let faulty = cmd_verify(
        &cfg,
        &VerifyOptions {
            inject_fault: true,
            ..VerifyOptions::default()
        },
    )
    .unwrap();
    let c = faulty.get("monotone_rows_after_fault").unwrap();
    assert!(!c.passed());
    assert!(c.counterexample.is_some());
}

#[test]
fn verify_reports_zero_slack_for_exact_multiples() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("int.json");
    let g = instances::from_edge_list(
        4,
        &[
            (0, 1, 1.0, 2.0),
            (1, 3, 1.0, 1.0),
            (0, 2, 1.0, 1.0),
            (2, 3, 4.0, 1.0),
        ],
    );
    fs::write(
        &path,
        serde_json::to_string(&GraphInput::from_graph(&g)).unwrap(),
    )
    .unwrap();
    let cfg = PlannerConfig {
        graph: Some(path),
        delta: Some(1.0),
        output_dir: dir.path().join("out"),
        ..PlannerConfig::default()
    };
    let report = cmd_verify(&cfg, &VerifyOptions::default()).unwrap();
    assert!(report.passed(), "{report}");
    assert!(report.get("zero_slackness").unwrap().checked > 0);
    assert!(report.get("oracle_equality").is_some());
}

#[test]
fn verify_on_sampled_roadmap_checks_collisions() {
    let dir = TempDir::new().unwrap();
    let mut grid = OccupancyGrid::empty(80, 80, 1.0).unwrap();
    grid.fill_rect(Point2::new(35.0, 0.0), Point2::new(45.0, 60.0));
    let map = dir.path().join("wall.pgm");
    fs::write(&map, encode_pgm(&grid)).unwrap();
    let cfg = PlannerConfig {
        map: Some(map),
        source: Some(Point2::new(10.0, 10.0)),
        goal: Some(Point2::new(70.0, 10.0)),
        robot_radius: 2.0,
        n_nodes: 150,
        connect_radius: 20.0,
        m: 16,
        threats: vec![paretoplan_core::costs::Threat::new(
            Point2::new(40.0, 70.0),
            10.0,
            3.0,
        )],
        output_dir: dir.path().join("out"),
        ..PlannerConfig::default()
    };
    let report = cmd_verify(
        &cfg,
        &VerifyOptions {
            oracle_max_nodes: 0,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(report.passed(), "{report}");
    assert!(report.get("roadmap_collision_free").unwrap().checked > 150);
}
