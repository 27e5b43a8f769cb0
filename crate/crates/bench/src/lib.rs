//! Shared fixtures for the criterion benches.

use windsense_core::{
    fit_tps, fit_vertical_poly, simulate, CalibSample, DragSpec, ModelSet, NoiseSpec, ScenarioKind,
    ScenarioScript, SimOutput, VehicleParams, WindFieldSpec,
};

/// Simulation step used by every fixture.
pub const DT: f64 = 0.02;

/// A noisy figure-eight flight in steady 5 m/s wind.
pub fn figure_eight_log(duration: f64) -> SimOutput {
    let script = ScenarioScript::new(ScenarioKind::FigureEight { extent: 5.0, period: 20.0 }, duration)
        .with_noise(NoiseSpec::default());
    simulate(
        &script,
        &WindFieldSpec::horizontal(5.0, 0.6),
        &VehicleParams::default(),
        &DragSpec::default(),
        DT,
        7,
    )
    .expect("fixture flight is within the envelope")
}

/// Calibration points on a polar grid with a smooth speed surface.
pub fn calib_grid(rings: usize, spokes: usize) -> Vec<CalibSample> {
    let mut out = Vec::with_capacity(rings * spokes);
    for r in 1..=rings {
        let radius = r as f64;
        for s in 0..spokes {
            let a = std::f64::consts::TAU * s as f64 / spokes as f64;
            out.push(CalibSample {
                force_x_comp: radius * a.cos(),
                force_y_comp: radius * a.sin(),
                wind_speed_h: 1.3 * radius.sqrt() * (1.0 + 0.05 * (2.0 * a).cos()),
            });
        }
    }
    out
}

/// A model set fitted on [`calib_grid`] plus a cubic vertical law.
pub fn model_set(rotor_count: usize) -> ModelSet {
    let horizontal = fit_tps(&calib_grid(10, 36), 1e-3).expect("grid is well posed");
    let vertical_data: Vec<(f64, f64)> = (0..21)
        .map(|i| {
            let f = -10.0 + i as f64;
            (f, -0.4 * f + 0.001 * f * f * f)
        })
        .collect();
    ModelSet {
        horizontal,
        vertical: Some(fit_vertical_poly(&vertical_data, 3).expect("distinct forces")),
        rotor_count,
    }
}
