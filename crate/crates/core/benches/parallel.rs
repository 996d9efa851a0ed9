use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::Vector3;

use spotlight::geometry::{raycast_oracle, ConeModel, ConePose, Surface, DEFAULT_MANTLE_RAYS};
use spotlight::par::{self, Execution};
use spotlight::synth::{render_sequence, speed_ramp_circle, Camera, NoiseModel, SceneSpec};

fn bench_render(c: &mut Criterion) {
    let cone = ConeModel::from_slope(13.21, -5.117).unwrap();
    let scene =
        SceneSpec::plane(cone, 2.5, 0.0, Camera::top_down(0.02, 640, 480), [0.0, 0.0]).unwrap();
    let traj = speed_ramp_circle(
        &scene.pose,
        Vector3::x(),
        2.0,
        30f64.to_radians(),
        3.0,
        2.0,
        200.0,
    );
    let noise = NoiseModel::gaussian(2.0, 1);
    let mut group = c.benchmark_group("render_sequence");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &exec,
            |b, &exec| b.iter(|| render_sequence(&traj, &scene, 10.0, 0.05, &noise, exec).unwrap()),
        );
    }
    group.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let plane = Surface::plane(Vector3::zeros(), Vector3::z()).unwrap();
    let cases: Vec<(ConeModel, ConePose)> = (0..1000)
        .map(|i| {
            let theta = (10.0 + 0.05 * i as f64).to_radians();
            let tilt = (0.02 * i as f64).to_radians();
            let axis = Vector3::new(tilt.sin(), 0.0, -tilt.cos());
            (
                ConeModel::from_angle(theta, -1.0).unwrap(),
                ConePose::new(-axis * 5.0, axis).unwrap(),
            )
        })
        .collect();
    let mut group = c.benchmark_group("oracle_sweep");
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &exec,
            |b, &exec| {
                b.iter(|| {
                    par::map(exec, &cases, |(cone, pose)| {
                        raycast_oracle(pose, cone, &plane, DEFAULT_MANTLE_RAYS).is_ok()
                    })
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, bench_render, bench_oracle);
criterion_main!(benches);
