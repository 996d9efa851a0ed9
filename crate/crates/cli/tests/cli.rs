use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spotlight(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spotlight"))
        .args(args)
        .output()
        .unwrap()
}

fn out_dir(dir: &Path) -> String {
    dir.display().to_string()
}

const SMALL: [&str; 4] = ["--set", "sweep_end_mm=2", "--set", "sweep_step_mm=0.25"];

#[test]
fn static_eval_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = spotlight(
        &[
            &["static-eval", "--out-dir", &out_dir(dir.path())][..],
            &SMALL,
        ]
        .concat(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = fs::read_to_string(dir.path().join("plane_calibration.csv")).unwrap();
    assert!(table.starts_with("point,delta_k_mm_px,b_mm,r2,rmse_mm,n\n"));
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("mode=static-eval"));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let od = out_dir(d.path());
        let args = [
            &[
                "static-eval",
                "--seed",
                "7",
                "--set",
                "noise_sigma=2",
                "--out-dir",
                &od,
            ][..],
            &SMALL,
        ]
        .concat();
        assert!(spotlight(&args).status.success());
    }
    for name in [
        "plane_calibration.csv",
        "samples_trial2.csv",
        "residuals_average.csv",
        "summary.txt",
    ] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn noise_without_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = spotlight(&[
        "static-eval",
        "--set",
        "noise_sigma=2",
        "--out-dir",
        &out_dir(dir.path()),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn tracking_loss_sets_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let od = out_dir(dir.path());
    let base = [
        &[
            "static-eval",
            "--set",
            "trials=1",
            "--set",
            "max_minor_axis_px=45",
            "--out-dir",
            &od,
        ][..],
        &SMALL,
    ]
    .concat();
    let out = spotlight(&base);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--allow-loss"));
    let ok = spotlight(&[&base[..], &["--allow-loss"]].concat());
    assert!(
        ok.status.success(),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
}

#[test]
fn render_track_calibrate_chain() {
    let dir = tempfile::tempdir().unwrap();
    let root = out_dir(dir.path());
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, "sweep_end_mm=3\nsweep_step_mm=0.25\n").unwrap();
    let cfg = cfg.display().to_string();

    let r = spotlight(&[
        "render",
        "--config",
        &cfg,
        "--out-dir",
        &format!("{root}/render"),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(dir.path().join("render/frames/frame_00012.pgm").exists());

    let t = spotlight(&[
        "track",
        "--config",
        &cfg,
        "--frames",
        &format!("{root}/render/frames"),
        "--out-dir",
        &format!("{root}/track"),
    ]);
    assert!(t.status.success(), "{}", String::from_utf8_lossy(&t.stderr));
    let obs = fs::read_to_string(dir.path().join("track/observations.csv")).unwrap();
    assert_eq!(obs.lines().count(), 14);

    // Pair observed axes with the rendered truth to form calibration samples.
    let truth = fs::read_to_string(dir.path().join("render/ground_truth.csv")).unwrap();
    let mut samples = String::from("e1_px,d_r_mm\n");
    for (o, t) in obs.lines().skip(1).zip(truth.lines().skip(1)) {
        let o: Vec<&str> = o.split(',').collect();
        let t: Vec<&str> = t.split(',').collect();
        samples.push_str(&format!("{},{}\n", o[1], t[2]));
    }
    let samples_path = dir.path().join("samples.csv");
    fs::write(&samples_path, samples).unwrap();
    let c = spotlight(&[
        "calibrate",
        "--samples",
        &samples_path.display().to_string(),
        "--out-dir",
        &format!("{root}/cal"),
    ]);
    assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    let fit = fs::read_to_string(dir.path().join("cal/fit.txt")).unwrap();
    assert!(fit.starts_with("delta_k=0.13"), "{fit}");
}

#[test]
fn bad_override_is_reported() {
    let out = spotlight(&["static-eval", "--set", "no_such_key=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));
}
