use mavnav::eval::rel_trans_error;
use mavnav::vo::*;

fn run(cfg: &VoSceneConfig, mode: ObservationMode, seed: u64) -> (VoScene, VoRun) {
    let scene = gen_scene(cfg, &StereoCalib::default(), seed).unwrap();
    let mut vo = VoConfig::default();
    vo.motion.mode = mode;
    let run = run_odometry(&scene, &vo, seed).unwrap();
    (scene, run)
}

#[test]
fn noise_free_sequence_is_recovered_per_frame() {
    let (scene, run) = run(&VoSceneConfig::default(), ObservationMode::Subpixel, 11);
    assert!(run.held.is_empty());
    for (gt, est) in scene.poses.iter().zip(&run.poses) {
        assert!((gt.position - est.position).norm() < 1e-6);
        assert!(gt.orientation.angle_to(&est.orientation) < 1e-6);
    }
}

#[test]
fn noise_free_loop_returns_to_start() {
    let cfg = VoSceneConfig {
        path: VoPath::Loop,
        ..Default::default()
    };
    let (_, run) = run(&cfg, ObservationMode::Subpixel, 12);
    let drift = (run.poses.last().unwrap().position - run.poses[0].position).norm();
    assert!(drift <= 1e-4, "{drift}");
}

#[test]
fn subpixel_beats_pixel_on_the_benchmark() {
    let cfg = VoSceneConfig::benchmark();
    let (scene, sub) = run(&cfg, ObservationMode::Subpixel, 1);
    let (_, pix) = run(&cfg, ObservationMode::Pixel, 1);
    let es = rel_trans_error(&scene.poses, &sub.poses).unwrap();
    let ep = rel_trans_error(&scene.poses, &pix.poses).unwrap();
    assert!(es.average < ep.average, "{} vs {}", es.average, ep.average);
    assert!(es.average < 3.0);
}

#[test]
fn timing_csv_has_a_row_per_estimated_frame() {
    let (_, run) = run(&VoSceneConfig::default(), ObservationMode::Subpixel, 3);
    let csv = run.timing_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(TIMING_HEADER));
    assert_eq!(lines.count(), 49);
    assert!(run.timings_ms.iter().all(|t| *t >= 0.0));
}
