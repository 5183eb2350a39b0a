use std::path::Path;

use regen_core::cohort::assign_cohorts;
use regen_core::metrics::Variable;
use regen_core::pipeline::{
    build_network, group_mean_rows, run, run_pipeline, scatter_rows, ExitStatus, RunConfig, Stage, Target, MANIFEST,
};
use regen_core::synth::{generate_city, SynthBundle, SynthConfig};

fn bundle(seed: u64) -> SynthBundle {
    generate_city(&SynthConfig {
        grid_rows: 10,
        grid_cols: 10,
        borough_rows: 2,
        borough_cols: 5,
        venues_per_ward: 40.0,
        venue_dispersion: 20.0,
        transitions_per_year: 30_000,
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn config(input: &Path, output: &Path, b: &SynthBundle) -> RunConfig {
    let mut c = RunConfig::for_input_dir(input);
    c.output_dir = Some(output.to_path_buf());
    c.centre = b.config.centre();
    c.seed = Some(5);
    c.k = 5;
    c.subset_thresholds = vec![0, 10];
    c.params.forest_trees = 30;
    c
}

#[test]
fn full_run_lists_seven_artifacts_and_is_deterministic() {
    let b = bundle(1);
    let input = tempfile::tempdir().unwrap();
    b.write_to(input.path()).unwrap();
    let (o1, o2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let r1 = run_pipeline(&config(input.path(), o1.path(), &b));
    assert_eq!(r1.status, ExitStatus::Success, "{:?}", r1.error);
    let m1 = r1.manifest.unwrap();
    let names: Vec<&str> = m1.artifacts.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(
        names,
        ["network_summary.json", "panel.csv", "evaluation.json", "importance.csv", "ablation.csv", "cohorts.csv", "anova.json"]
    );
    // Every file in the directory apart from the manifest is listed.
    let mut on_disk: Vec<String> = std::fs::read_dir(o1.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != MANIFEST)
        .collect();
    on_disk.sort();
    let mut listed: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    listed.sort();
    assert_eq!(on_disk, listed);

    let r2 = run_pipeline(&config(input.path(), o2.path(), &b));
    assert_eq!(r2.manifest.unwrap(), m1);
    assert_eq!(std::fs::read(o1.path().join(MANIFEST)).unwrap(), std::fs::read(o2.path().join(MANIFEST)).unwrap());

    let eval: serde_json::Value =
        serde_json::from_slice(&std::fs::read(o1.path().join("evaluation.json")).unwrap()).unwrap();
    assert_eq!(eval["spec_version"], "1.0");
}

#[test]
fn missing_imd_fails_at_ingest() {
    let b = bundle(2);
    let input = tempfile::tempdir().unwrap();
    b.write_to(input.path()).unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut cfg = config(input.path(), out.path(), &b);
    std::fs::remove_file(input.path().join("imd.csv")).unwrap();
    let r = run_pipeline(&cfg);
    assert_eq!(r.status, ExitStatus::DataError);
    let err = r.error.unwrap();
    assert_eq!(err.stage, Stage::Ingest);
    assert!(err.message.contains("imd.csv"), "{}", err.message);
    assert!(r.manifest.unwrap().artifacts.is_empty());

    // Present but not an IMD file.
    std::fs::write(input.path().join("imd.csv"), "not,an,imd\n").unwrap();
    cfg.output_dir = Some(out.path().join("second"));
    let r = run_pipeline(&cfg);
    assert_eq!(r.status, ExitStatus::DataError);
    let err = r.error.unwrap();
    assert_eq!(err.stage, Stage::Ingest);
    assert!(err.message.contains("imd.csv"), "{}", err.message);
    let m = r.manifest.unwrap();
    assert_eq!((m.status, m.failed_stage), ("failed", Some(Stage::Ingest)));
}

#[test]
fn failure_keeps_partial_artifacts() {
    let b = bundle(3);
    let input = tempfile::tempdir().unwrap();
    b.write_to(input.path()).unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut cfg = config(input.path(), out.path(), &b);
    cfg.k = 10_000;
    let r = run_pipeline(&cfg);
    assert_eq!(r.status, ExitStatus::DataError);
    let m = r.manifest.unwrap();
    assert_eq!(m.failed_stage, Some(Stage::Predict));
    let names: Vec<&str> = m.artifacts.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(names, ["network_summary.json", "panel.csv"]);
    assert!(out.path().join("panel.csv").exists());
}

#[test]
fn report_target_writes_plot_tables() {
    let b = bundle(4);
    let input = tempfile::tempdir().unwrap();
    b.write_to(input.path()).unwrap();
    let out = tempfile::tempdir().unwrap();
    let r = run(&config(input.path(), out.path(), &b), Target::Report);
    assert_eq!(r.status, ExitStatus::Success, "{:?}", r.error);
    let names: Vec<String> = r.manifest.unwrap().artifacts.into_iter().map(|a| a.name).collect();
    assert_eq!(names, ["scatter.csv", "group_means.csv"]);
}

#[test]
fn scatter_and_group_means_contracts() {
    let b = bundle(6);
    let inputs = b.tables();
    let (_, panel) = build_network(&RunConfig::default(), &inputs).unwrap();
    let rows = scatter_rows(&panel, &inputs.imd);
    assert_eq!(rows.len(), panel.ward_codes().len());

    let cohorts = assign_cohorts(&panel, &inputs.imd, Default::default());
    let vars = [Variable::N, Variable::Vc, Variable::Ic];
    let means = group_mean_rows(&panel, &cohorts, &vars);
    assert_eq!(means.len(), 12 * vars.len());
    for chunk in means.chunks(4) {
        let n: usize = chunk.iter().map(|r| r.n).sum();
        let weighted: f64 = chunk.iter().filter_map(|r| r.mean.map(|m| m * r.n as f64)).sum::<f64>() / n as f64;
        assert!((weighted - chunk[0].all_ward_mean.unwrap()).abs() < 1e-9);
    }
}
