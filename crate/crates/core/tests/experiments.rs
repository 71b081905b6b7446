use std::path::Path;
use std::process::Command;

use perfuse::experiments::{run, run_perfusion, ExperimentConfig, ExperimentKind, PerfusionConfig, ScalarGrid};
use perfuse::pencil::{exponent_sweep, PencilKind};

fn small_config(kind: ExperimentKind, dir: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        experiment: Some(kind),
        resolutions: Some(vec![8, 12]),
        d_gamma: vec![1.0, 1e4],
        beta: vec![1e-6],
        k: vec![1e-6, 1e-4],
        output_dir: dir.to_path_buf(),
        ..Default::default()
    };
    c.perfusion.resolution = 8;
    c.perfusion.depth = 3;
    c.perfusion.steps = 12;
    c.perfusion.snapshot_every = 6;
    c.scalar = ScalarGrid { min_exponent: -2, max_exponent: 2, points_per_decade: 1 };
    c
}

fn read_outputs(dir: &Path, files: &[String]) -> Vec<(String, Vec<u8>)> {
    files.iter().map(|f| (f.clone(), std::fs::read(dir.join(f)).unwrap())).collect()
}

#[test]
fn reruns_are_byte_identical() {
    for kind in [ExperimentKind::ConditionTable, ExperimentKind::IterationSweep, ExperimentKind::Perfusion, ExperimentKind::ScalarModel] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = run(kind, &small_config(kind, a.path())).unwrap();
        let mb = run(kind, &small_config(kind, b.path())).unwrap();
        assert_eq!(ma.config_hash, mb.config_hash);
        assert_eq!(ma.outputs, mb.outputs);
        let csv: Vec<String> = ma.outputs.iter().filter(|f| f.ends_with(".csv")).cloned().collect();
        assert!(!csv.is_empty(), "{kind:?}");
        assert_eq!(read_outputs(a.path(), &ma.outputs), read_outputs(b.path(), &mb.outputs), "{kind:?}");
        for f in &csv {
            let text = std::fs::read_to_string(a.path().join(f)).unwrap();
            let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
            assert!(header.chars().any(char::is_alphabetic), "{f} has no header");
        }
        assert!(a.path().join("manifest.json").exists());
    }
}

#[test]
fn condition_csv_has_one_column_per_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_config(ExperimentKind::ConditionTable, dir.path());
    c.pencils = vec![PencilKind::Mass];
    run(ExperimentKind::ConditionTable, &c).unwrap();
    let text = std::fs::read_to_string(dir.path().join("condition_2d.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "pencil,dimension,s,1/h=8,1/h=12");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "mass");
    for v in &row[3..] {
        let kappa: f64 = v.parse().unwrap();
        assert!((3.0..6.5).contains(&kappa));
    }
}

#[test]
fn seed_changes_random_sweep_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_config(ExperimentKind::IterationSweep, dir.path());
    let h0 = c.hash();
    c.seed = 1;
    assert_ne!(c.hash(), h0);
    c.output_dir = "elsewhere".into();
    c.seed = 0;
    assert_eq!(c.hash(), h0);
}

#[test]
fn zero_inlet_leaves_transfer_undefined() {
    let config = PerfusionConfig {
        resolution: 8,
        depth: 2,
        steps: 6,
        inlet_value: 0.0,
        ..Default::default()
    };
    let r = run_perfusion(&config, None).unwrap();
    assert!(r.summary.c_t.iter().all(|&c| c == 0.0));
    assert!(r.summary.k_trans.iter().all(Option::is_none));
    assert_eq!(r.snapshots.len(), 0);
}

#[test]
fn perfusion_stays_within_inlet_bounds() {
    let config = PerfusionConfig {
        resolution: 8,
        depth: 3,
        steps: 30,
        ..Default::default()
    };
    let r = run_perfusion(&config, None).unwrap();
    let s = &r.summary;
    assert!(s.nu > 0.0 && s.nu < 1.0);
    assert_eq!(s.times.len(), 31);
    assert!(s.c_t.iter().all(|&c| (0.0..=1.0).contains(&c)));
    assert!(s.bound_violation == 0.0);
    // The centred difference at the switch step straddles the inlet change.
    for i in 1..config.uptake_steps() {
        assert!(s.k_trans[i].unwrap() > 0.0);
    }
}

#[test]
fn energy_exponent_is_most_stable_near_one_half_in_2d() {
    let s_values: Vec<f64> = (0..=10).map(|i| -(i as f64) / 10.0).collect();
    let sweep = exponent_sweep(2, &[8, 16, 32], &s_values).unwrap();
    assert!((sweep.most_stable + 0.5).abs() <= 0.1 + 1e-12, "{}", sweep.most_stable);
}

#[test]
fn zero_exponent_is_worse_than_the_default_in_3d() {
    let sweep = exponent_sweep(3, &[8], &[0.0, -0.55]).unwrap();
    assert!(sweep.rows[0].kappa[0] > sweep.rows[1].kappa[0]);
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_perfuse"))
}

#[test]
fn cli_writes_outputs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"scalar": {"min_exponent": -1, "max_exponent": 1, "points_per_decade": 1}}"#).unwrap();
    let out = dir.path().join("run");
    let status = cli()
        .args(["scalar-model", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "scalar-model");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert!(out.join("scalar_model.csv").exists());
}

#[test]
fn cli_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"resolutions": []}"#).unwrap();
    let o = cli().args(["iteration-sweep", "--config"]).arg(&bad).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    std::fs::write(&bad, r#"{"no_such_field": 1}"#).unwrap();
    let o = cli().args(["condition-table", "--config"]).arg(&bad).output().unwrap();
    assert!(!o.status.success());

    let o = cli().args(["iteration-sweep", "--resolutions", "6", "--out"]).arg(dir.path()).output().unwrap();
    assert!(!o.status.success());

    let o = cli().args(["perfusion", "--resolutions", "8,12", "--out"]).arg(dir.path()).output().unwrap();
    assert!(!o.status.success());
}
