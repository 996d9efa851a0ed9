use spotlight::calibrate::CalibrationFit;
use spotlight::detect::{track_pattern, TrackerConfig, TrackerState};
use spotlight::estimate::{estimate_distance, SurfaceModel};
use spotlight::experiment::{
    run, run_dynamic_experiment, run_static_experiment, ExperimentConfig, ExperimentError, Mode,
    RenderKind, SurfaceKind,
};
use spotlight::geometry::ConeModel;
use spotlight::synth::{render_frame, Camera, NoiseModel, SceneSpec};

fn analytic_fit() -> CalibrationFit {
    CalibrationFit {
        delta_k: 13.21 * 0.02 / 2.0,
        b: -5.117,
        r2: 1.0,
        rmse: 0.0,
        n: 0,
    }
}

#[test]
fn static_estimates_are_consistent() {
    let cone = ConeModel::from_slope(13.21, -5.117).unwrap();
    let cfg = TrackerConfig::with_patch_half(100);
    let fit = analytic_fit();
    for i in 0..=18 {
        let d = 0.5 + 0.25 * i as f64;
        let scene =
            SceneSpec::plane(cone, d, 0.0, Camera::top_down(0.02, 640, 480), [0.0, 0.0]).unwrap();
        let (img, truth) = render_frame(&scene, &NoiseModel::none()).unwrap();
        let mut state = TrackerState::seeded(truth.center_px);
        let obs = track_pattern(&img, &mut state, &cfg).unwrap().unwrap();
        let est = estimate_distance(&obs, &fit, &SurfaceModel::Plane).unwrap();
        assert!((est - d).abs() <= 0.08, "d {d}: estimate {est}");
    }
}

fn small_sweep() -> ExperimentConfig {
    ExperimentConfig {
        sweep_start_mm: 0.0,
        sweep_end_mm: 4.0,
        sweep_step_mm: 0.2,
        ..ExperimentConfig::default()
    }
}

#[test]
fn stationary_sequence_matches_static_error() {
    let cfg = ExperimentConfig {
        mode: Mode::DynamicEval,
        max_speed_mm_s: 0.0,
        duration_s: 2.0,
        ..small_sweep()
    };
    let out = run_dynamic_experiment(&cfg).unwrap();
    assert!(out.records.iter().all(|r| r.speed == Some(0.0)));
    assert!(!out.analysis.correlation_defined);

    let scene = SceneSpec::plane(
        ConeModel::from_slope(13.21, -5.117).unwrap(),
        cfg.start_distance_mm,
        0.0,
        Camera::top_down(0.02, 640, 480),
        [0.0, 0.0],
    )
    .unwrap();
    let (img, truth) = render_frame(&scene, &NoiseModel::none()).unwrap();
    let mut state = TrackerState::seeded(truth.center_px);
    let obs = track_pattern(&img, &mut state, &cfg.tracker)
        .unwrap()
        .unwrap();
    let static_err =
        estimate_distance(&obs, &out.fit, &SurfaceModel::Plane).unwrap() - truth.d_true;
    for r in &out.records {
        let dyn_err = r.d_est.unwrap() - r.d_true.unwrap();
        assert!((dyn_err - static_err).abs() <= 0.02);
    }
}

#[test]
fn sphere_sweep_stays_under_ceiling() {
    let cfg = ExperimentConfig {
        surface: SurfaceKind::Sphere,
        sphere_offsets_mm: vec![5.531],
        ..small_sweep()
    };
    let out = run_static_experiment(&cfg).unwrap();
    let row = &out.sphere[0];
    assert!(
        row.fit.max_error <= 0.372,
        "max error {}",
        row.fit.max_error
    );
    assert!((row.fit.c - 5.531).abs() < 0.25);
    let table = out.artifacts.text("sphere_evaluation.csv").unwrap();
    assert!(table.starts_with(
        "point,c_true_mm,c_mm,std_dev_mm,mean_abs_error_mm,max_error_mm,n\n1,5.531000,"
    ));
}

#[test]
fn plane_tables_and_summary() {
    let out = run_static_experiment(&small_sweep()).unwrap();
    let table = out.artifacts.text("plane_calibration.csv").unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "point,delta_k_mm_px,b_mm,r2,rmse_mm,n");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("average,"));
    assert!(out.pooled.unwrap().r2 >= 0.9999);
    let summary = out.artifacts.text("summary.txt").unwrap();
    assert!(summary.contains("\nseed=\n") && summary.contains("average_r2="));
    assert_eq!(out.lost, 0);
}

#[test]
fn noise_requires_a_seed() {
    let cfg = ExperimentConfig {
        noise_sigma: 2.0,
        ..small_sweep()
    };
    assert!(matches!(
        run_static_experiment(&cfg),
        Err(ExperimentError::Config(_))
    ));
}

#[test]
fn tracking_loss_gate() {
    // A minor-axis ceiling below every spot rejects all frames.
    let mut cfg = small_sweep();
    cfg.tracker.max_minor_axis = 20.0;
    cfg.trials = 1;
    cfg.sweep_end_mm = 1.0;
    let err = run_static_experiment(&cfg).unwrap_err();
    assert!(matches!(
        err,
        ExperimentError::Calibration(_) | ExperimentError::TrackingLoss { .. }
    ));

    // Only the small spots survive: a partial loss above 10%.
    let mut cfg = small_sweep();
    cfg.trials = 1;
    cfg.tracker.max_minor_axis = 60.0;
    assert!(matches!(
        run_static_experiment(&cfg),
        Err(ExperimentError::TrackingLoss { .. })
    ));
    cfg.allow_loss = true;
    let out = run_static_experiment(&cfg).unwrap();
    assert!(out.lost > 0 && out.lost < out.total);
}

#[test]
fn render_then_track_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let render_cfg = ExperimentConfig {
        mode: Mode::Render,
        render_kind: RenderKind::Sequence,
        duration_s: 2.0,
        max_speed_mm_s: 1.0,
        ..small_sweep()
    };
    let rendered = run(&render_cfg).unwrap();
    rendered.write_to(dir.path()).unwrap();
    let frames = dir.path().join("frames");
    assert!(frames.join("frame_00000.pgm").exists());
    assert!(rendered
        .text("ground_truth.csv")
        .unwrap()
        .starts_with("frame,t_s,d_true_mm,e1_true_px,cx_px,cy_px\n"));

    let fit_path = dir.path().join("fit.txt");
    std::fs::write(&fit_path, analytic_fit().to_report()).unwrap();
    let track_cfg = ExperimentConfig {
        mode: Mode::Track,
        frames: Some(frames),
        fit: Some(fit_path),
        trajectory: Some(dir.path().join("trajectory.csv")),
        ..render_cfg.clone()
    };
    let tracked = run(&track_cfg).unwrap();
    let obs = tracked.text("observations.csv").unwrap();
    assert!(obs.starts_with("frame,a_min_px,a_maj_px,ex_px,ey_px,status\n"));
    assert!(!obs.contains("lost"));
    let records =
        spotlight::estimate::read_records_csv(tracked.get("records.csv").unwrap()).unwrap();
    assert_eq!(records.len(), 20);
    for r in &records {
        assert!((r.d_est.unwrap() - r.d_true.unwrap()).abs() < 0.1, "{r:?}");
    }
}

#[test]
fn calibrate_mode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_static_experiment(&small_sweep()).unwrap();
    out.artifacts.write_to(dir.path()).unwrap();
    let cfg = ExperimentConfig {
        mode: Mode::Calibrate,
        samples: Some(dir.path().join("samples_trial1.csv")),
        ..small_sweep()
    };
    let fit_art = run(&cfg).unwrap();
    let fit = CalibrationFit::from_report(fit_art.text("fit.txt").unwrap()).unwrap();
    assert!((fit.delta_k - out.plane[0].fit.delta_k).abs() < 1e-5);
    assert!(fit_art
        .text("residuals.csv")
        .unwrap()
        .starts_with("e1_px,d_r_mm,d_fit_mm,residual_mm\n"));
}
