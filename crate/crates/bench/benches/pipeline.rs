use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use nalgebra::Vector3;
use windsense_bench::{calib_grid, figure_eight_log, model_set};
use windsense_core::{dob_run, fit_tps, pipeline_run, DobConfig, FilterConfig, VehicleParams};

fn observer(c: &mut Criterion) {
    let log = figure_eight_log(60.0);
    let params = VehicleParams::default();
    let cfg = DobConfig::default();
    c.bench_function("dob_run 3000 samples", |b| {
        b.iter(|| dob_run(black_box(&log.states), &cfg, &params, Vector3::zeros()).unwrap())
    });
}

fn spline_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_tps");
    for (rings, spokes) in [(5, 12), (10, 36)] {
        let data = calib_grid(rings, spokes);
        group.bench_function(format!("{} points", data.len()), |b| {
            b.iter(|| fit_tps(black_box(&data), 1e-3).unwrap())
        });
    }
    group.finish();
}

fn replay(c: &mut Criterion) {
    let log = figure_eight_log(60.0);
    let params = VehicleParams::default();
    let models = model_set(params.rotor_count);
    let forces = dob_run(&log.states, &DobConfig::default(), &params, Vector3::zeros()).unwrap();
    c.bench_function("pipeline_run 3000 samples", |b| {
        b.iter_batched(
            FilterConfig::default,
            |filter| pipeline_run(black_box(&forces), &log.states, &models, filter).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, observer, spline_fit, replay);
criterion_main!(benches);
