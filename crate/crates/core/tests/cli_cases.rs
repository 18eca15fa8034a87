//! End-to-end CLI runs on the shipped case files (cheap configurations).

use std::path::{Path, PathBuf};

use swepinn::cli::{self, Command};

fn repo_case(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../cases").join(file)
}

#[test]
fn bump_teacher_produces_51_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    cli::run(Command::Teacher, &repo_case("case2_bump.cfg"), &[], Some(out.clone()), None)
        .unwrap();
    let index = std::fs::read_to_string(out.join("trajectory/snapshots.csv")).unwrap();
    let rows: Vec<&str> = index.lines().skip(1).filter(|l| !l.trim().is_empty()).collect();
    assert_eq!(rows.len(), 51, "one row per snapshot");
    let last: Vec<&str> = rows.last().unwrap().split(',').collect();
    assert_eq!(last[1].parse::<f64>().unwrap(), 72.0);
    // The mass audit for the inlet/exit channel was written alongside.
    let audit = std::fs::read_to_string(out.join("mass_audit.csv")).unwrap();
    let worst = audit
        .lines()
        .skip(1)
        .filter_map(|l| l.rsplit(',').next()?.parse::<f64>().ok())
        .fold(0.0_f64, f64::max);
    assert!(worst <= 1e-10, "bump-case mass defect {worst:.3e}");
}

#[test]
fn windowed_training_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    // The shipped windows case, shrunk to smoke-test size.
    let overrides = vec![
        "train.adam_steps=5".to_string(),
        "network.width=8".to_string(),
        "network.layers=2".to_string(),
        "network.fourier=4".to_string(),
        "mesh.n_cells=10".to_string(),
        "data.teacher_snapshots=3".to_string(),
        "train.n_t=2".to_string(),
    ];
    cli::run(
        Command::Train,
        &repo_case("case4_windows.cfg"),
        &overrides,
        Some(out.clone()),
        None,
    )
    .unwrap();
    assert!(out.join("windows.csv").exists());
    for k in 0..4 {
        assert!(out.join(format!("checkpoint_w{k:03}.bin")).exists());
    }
    // The windowed model loads back and dispatches by time.
    let model = cli::load_model(&out).unwrap();
    let mesh = swepinn::mesh::strip_mesh(
        20.0,
        10,
        0.5,
        1.0,
        |_| 0.0,
        swepinn::mesh::EndCondition::wall(),
        swepinn::mesh::EndCondition::wall(),
    )
    .unwrap();
    let bathy = swepinn::physics::Bathymetry::from_mesh(&mesh);
    let state = model.predict_field_at(&mesh, &bathy, 5.9);
    assert!(state.is_finite());
    assert_eq!(state.n_cells(), 10);
}

#[test]
fn case_configs_parse() {
    for file in [
        "case1_dambreak.cfg",
        "case2_bump.cfg",
        "case3_block.cfg",
        "case4_windows.cfg",
    ] {
        let cfg = swepinn::config::load_case(&repo_case(file), &[])
            .unwrap_or_else(|e| panic!("{file}: {e}"));
        assert!(cfg.train.t_end > cfg.train.t0, "{file}");
    }
}
