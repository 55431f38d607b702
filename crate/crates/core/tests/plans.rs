use std::fs;
use std::path::{Path, PathBuf};

use moralsim::experiment::{
    emit_json, emit_summary_csv, load_plan, parse_plan, run_plan, Provenance, ResultBundle, BASE_VARIANT,
    SUMMARY_HEADER,
};
use moralsim::{AgentSpec, Error, ExplorationSchedule, MoralFramework};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn full_grid_has_63_matchups() {
    let plan = load_plan(config("full_grid.json")).unwrap();
    assert_eq!(plan.agents.len(), 6);
    assert_eq!(plan.matchups().len(), 3 * 21);
    assert_eq!((plan.iterations, plan.n_runs, plan.base_seed), (10_000, 100, 42));
}

#[test]
fn static_grid_has_72_matchups() {
    let plan = load_plan(config("static_opponents.json")).unwrap();
    let ms = plan.matchups();
    assert_eq!(ms.len(), 3 * 6 * 4);
    assert!(ms.iter().all(|m| matches!(m.spec_m, AgentSpec::Learner(_)) && matches!(m.spec_o, AgentSpec::Static(_))));
}

#[test]
fn bundled_variant_configs() {
    let sweep = load_plan(config("beta_sweep.json")).unwrap();
    let variants = sweep.matchups().into_iter().filter(|m| m.variant != BASE_VARIANT).count();
    assert_eq!(variants, 3 * 6);

    let long = load_plan(config("long_run.json")).unwrap();
    assert!(long.matchups().iter().any(|m| m.iterations == 50_000 && m.variant == "T=50000"));

    let eps = load_plan(config("constant_exploration.json")).unwrap();
    assert_eq!(eps.variants.schedule_override, Some(ExplorationSchedule::Constant { eps: 0.05 }));
    assert_eq!(eps.matchups().len(), 3 * 21 * 2);
}

fn small_plan(dir: &Path, extra: &str) -> moralsim::experiment::ExperimentPlan {
    let text = format!(
        r#"{{"games": ["IPD", "IVD"], "agents": ["Selfish", "VirtueMixed"], "iterations": 300, "runs": 5,
            "base_seed": 9 {extra}}}"#
    );
    let mut plan = parse_plan(&text, Path::new("inline.json")).unwrap();
    plan.outputs.rebase(dir);
    plan
}

#[test]
fn run_plan_writes_configured_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let plan = small_plan(
        dir.path(),
        r#", "variants": {"beta_sweep": [0.0, 1.0]},
           "outputs": {"summary_csv": "out/s.csv", "json": "out/b.json", "steps_csv": "out/steps.csv"}"#,
    );
    let bundle = run_plan(&plan, 3).unwrap();
    // Per game: three pairs, and the two pairs with a VirtueMixed agent get two sweep variants each.
    assert_eq!(bundle.summaries.len(), 2 * (3 + 2 * 2));

    let csv = fs::read_to_string(dir.path().join("out/s.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(SUMMARY_HEADER));
    assert_eq!(lines.count(), bundle.summaries.len());
    assert!(csv.contains("IPD,VirtueMixed(beta=1),VirtueMixed(beta=1),beta=1,5,"));

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/b.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), bundle.summaries.len());
    assert_eq!(json["provenance"]["artifact_version"], env!("CARGO_PKG_VERSION"));

    let steps = fs::read_to_string(dir.path().join("out/steps.csv")).unwrap();
    assert!(steps.starts_with("game,agent_m,agent_o,variant,run,seed,t,"));
}

#[test]
fn summaries_follow_plan_order_and_agent_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let plan = small_plan(dir.path(), "");
    let bundle = run_plan(&plan, 2).unwrap();
    let order: Vec<_> = bundle.summaries.iter().map(|s| format!("{} {} {}", s.game, s.agent_m, s.agent_o)).collect();
    assert_eq!(
        order,
        [
            "IPD Selfish Selfish",
            "IPD Selfish VirtueMixed",
            "IPD VirtueMixed VirtueMixed",
            "IVD Selfish Selfish",
            "IVD Selfish VirtueMixed",
            "IVD VirtueMixed VirtueMixed",
        ]
    );
    assert_eq!(plan.agents[1].framework(), Some(&MoralFramework::virtue_mixed(0.5)));
}

#[test]
fn failed_run_leaves_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut plan = small_plan(dir.path(), "");
    plan.n_runs = 0;
    assert!(run_plan(&plan, 2).is_err());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn emitting_an_empty_bundle_fails() {
    let dir = tempfile::tempdir().unwrap();
    let plan = small_plan(dir.path(), "");
    let bundle = ResultBundle { plan, summaries: Vec::new(), provenance: Provenance::now() };
    let path = dir.path().join("s.csv");
    assert!(matches!(emit_summary_csv(&bundle, &path), Err(Error::Empty(_))));
    assert!(!path.exists());
}

#[test]
fn emitters_write_standalone_files() {
    let dir = tempfile::tempdir().unwrap();
    let plan = small_plan(dir.path(), "");
    let bundle = run_plan(&plan, 1).unwrap();
    let (csv, json) = (dir.path().join("again.csv"), dir.path().join("again.json"));
    emit_summary_csv(&bundle, &csv).unwrap();
    emit_json(&bundle, &json).unwrap();
    assert_eq!(fs::read(&csv).unwrap(), fs::read(dir.path().join("summary.csv")).unwrap());
    assert!(fs::read_to_string(&json).unwrap().contains("\"rows\""));
}

#[test]
fn missing_config_is_an_io_error() {
    assert!(matches!(load_plan("/definitely/not/here.json"), Err(Error::Io { .. })));
}
