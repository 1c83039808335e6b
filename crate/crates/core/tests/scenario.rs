use std::fs;
use std::path::Path;

use mavnav::mapping::write_grid;
use mavnav::planner::{IndustrialConfig, IndustrialWorld};
use mavnav::scenario::{load_config, run_scenario, ScenarioConfig, ScenarioKind};
use mavnav::Error;

fn small_hall() -> IndustrialConfig {
    IndustrialConfig {
        size: [20.0, 20.0, 12.0],
        racks: 3,
        tanks: 1,
        pipes: 2,
        keep_clear: vec![[3.0, 3.0, 2.0], [16.0, 16.0, 2.0]],
        ..Default::default()
    }
}

fn small_plan(seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(ScenarioKind::Plan);
    cfg.seed = seed;
    cfg.plan.world = small_hall();
    cfg.plan.start = [3.0, 3.0, 2.0];
    cfg.plan.goal = [16.0, 16.0, 2.0];
    cfg.plan.roadmap.samples = 400;
    cfg
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn hover_run_writes_the_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ScenarioConfig::new(ScenarioKind::Simulate);
    cfg.simulate.duration = 5.0;
    let m = run_scenario(&cfg, dir.path()).unwrap();
    for f in ["truth.csv", "estimate.csv", "control.csv", "imu.csv", "metrics.txt"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    assert!(m.get("position_rms_m").unwrap() < 0.1);
    let metrics = read(dir.path(), "metrics.txt");
    assert!(metrics.lines().any(|l| l.starts_with("position_rms_m=")));
    assert!(metrics.trim_end().ends_with("seed=0"));
    // one row per control period plus the header
    assert_eq!(read(dir.path(), "truth.csv").lines().count(), 501);
}

#[test]
fn same_config_gives_identical_outputs() {
    let mut vo = ScenarioConfig::new(ScenarioKind::Vo);
    vo.seed = 4;
    vo.vo.scene.frames = 12;
    vo.vo.scene.pixel_noise = 0.3;
    vo.vo.scene.outlier_rate = 0.1;
    let mut sim = ScenarioConfig::new(ScenarioKind::Simulate);
    sim.seed = 9;
    sim.simulate.duration = 4.0;
    for (cfg, files) in [
        (sim, &["metrics.txt", "truth.csv", "estimate.csv"][..]),
        (small_plan(2), &["metrics.txt", "path.csv", "truth.csv"][..]),
        (vo, &["metrics.txt", "trajectory.csv"][..]),
    ] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_scenario(&cfg, a.path()).unwrap();
        run_scenario(&cfg, b.path()).unwrap();
        for f in files {
            assert_eq!(read(a.path(), f), read(b.path(), f), "{:?} {f}", cfg.kind);
        }
    }
}

#[test]
fn different_seeds_give_different_plans() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut c1 = small_plan(1);
    let mut c2 = small_plan(2);
    c1.plan.fly = false;
    c2.plan.fly = false;
    run_scenario(&c1, a.path()).unwrap();
    run_scenario(&c2, b.path()).unwrap();
    assert_ne!(read(a.path(), "path.csv"), read(b.path(), "path.csv"));
}

#[test]
fn plan_reads_a_map_file() {
    let dir = tempfile::tempdir().unwrap();
    let grid = IndustrialWorld::generate(&small_hall()).unwrap().to_grid(0.2).unwrap();
    let map = dir.path().join("hall.grid");
    write_grid(&map, &grid).unwrap();
    let mut cfg = small_plan(3);
    cfg.plan.map = Some(map);
    cfg.plan.world = IndustrialConfig::default();
    let m = run_scenario(&cfg, &dir.path().join("out")).unwrap();
    assert_eq!(m.get("collisions"), Some(0.0));
    assert!(m.get("path_length_m").unwrap() >= (13.0f64 * 2f64.sqrt()) - 1e-9);
}

#[test]
fn misspelled_key_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hover.toml");
    fs::write(&path, "kind = \"simulate\"\n[simulate]\nduraton = 10.0\n").unwrap();
    let err = load_config(&path).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert!(err.to_string().contains("simulate.duraton"), "{err}");
}

#[test]
fn missing_map_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_plan(1);
    cfg.plan.map = Some(dir.path().join("absent.grid"));
    let err = run_scenario(&cfg, dir.path()).unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err:?}");
    assert!(err.to_string().contains("absent.grid"));
}
