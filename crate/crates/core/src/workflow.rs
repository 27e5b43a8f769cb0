//! End-to-end helpers: calibrate from simulated or recorded logs and replay a
//! log through the estimator.

use nalgebra::Vector3;

use crate::calibration::{
    build_horizontal_dataset, build_vertical_dataset, fit_tps, fit_vertical_poly, ModelSet,
    SweepLabel, SweepProtocol, VerticalLabel,
};
use crate::dob::{dob_run, DobConfig};
use crate::error::{Error, Result};
use crate::frames::{StateSample, VehicleParams};
use crate::pipeline::{pipeline_run, FilterConfig, WindEstimate};

/// States of one calibration log with their labels.
pub struct HorizontalLog<'a> {
    pub states: &'a [StateSample],
    pub labels: &'a [SweepLabel],
}

pub struct VerticalLog<'a> {
    pub states: &'a [StateSample],
    pub labels: &'a [VerticalLabel],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSettings {
    pub params: VehicleParams,
    pub dob: DobConfig,
    pub protocol: SweepProtocol,
    pub lambda: f64,
    pub degree: usize,
}

/// Summary of a calibration run.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub horizontal_logs: usize,
    pub horizontal_windows: usize,
    pub horizontal_skipped: usize,
    pub horizontal_samples: usize,
    /// RMS training residual of the spline, m/s.
    pub horizontal_residual: f64,
    pub vertical_logs: usize,
    pub vertical_samples: usize,
    /// `None` when no vertical model was fitted.
    pub vertical_residual: Option<f64>,
}

/// Runs the observer over every log, averages dwell windows, and fits both
/// models. With no vertical logs the vertical model is omitted.
pub fn calibrate_logs(
    horizontal: &[HorizontalLog<'_>],
    vertical: &[VerticalLog<'_>],
    settings: &CalibrationSettings,
) -> Result<(ModelSet, CalibrationReport)> {
    if horizontal.is_empty() {
        return Err(Error::Usage("at least one horizontal calibration log is required".into()));
    }
    let mut h_samples = Vec::new();
    let (mut windows, mut skipped) = (0, 0);
    for log in horizontal {
        let forces = dob_run(log.states, &settings.dob, &settings.params, Vector3::zeros())?;
        let ds = build_horizontal_dataset(&forces, log.labels, &settings.protocol)?;
        windows += ds.windows;
        skipped += ds.skipped_windows;
        h_samples.extend(ds.samples);
    }
    let tps = fit_tps(&h_samples, settings.lambda)?;

    let mut v_samples = Vec::new();
    for log in vertical {
        let forces = dob_run(log.states, &settings.dob, &settings.params, Vector3::zeros())?;
        let ds = build_vertical_dataset(&forces, log.labels, settings.protocol.sample_period())?;
        v_samples.extend(ds.samples);
    }
    let poly = if vertical.is_empty() {
        None
    } else {
        Some(fit_vertical_poly(&v_samples, settings.degree)?)
    };

    let report = CalibrationReport {
        horizontal_logs: horizontal.len(),
        horizontal_windows: windows,
        horizontal_skipped: skipped,
        horizontal_samples: tps.stats.samples,
        horizontal_residual: tps.stats.residual_rms,
        vertical_logs: vertical.len(),
        vertical_samples: v_samples.len(),
        vertical_residual: poly.as_ref().map(|p| p.stats.residual_rms),
    };
    let models = ModelSet {
        horizontal: tps,
        vertical: poly,
        rotor_count: settings.params.rotor_count,
    };
    Ok((models, report))
}

/// Observer plus pipeline over one log; one estimate per state.
pub fn estimate_log(
    states: &[StateSample],
    models: &ModelSet,
    params: &VehicleParams,
    dob: &DobConfig,
    filter: FilterConfig,
) -> Result<Vec<WindEstimate>> {
    if models.rotor_count != params.rotor_count {
        return Err(Error::Usage(format!(
            "models were calibrated for {} rotors but the vehicle has {}",
            models.rotor_count, params.rotor_count
        )));
    }
    let forces = dob_run(states, dob, params, Vector3::zeros())?;
    pipeline_run(&forces, states, models, filter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{TpsModel, VerticalPolyModel};

    #[test]
    fn rotor_mismatch_is_usage_error() {
        let models = ModelSet {
            horizontal: TpsModel::from_parts(vec![], vec![], [0.0; 3], 0.0).unwrap(),
            vertical: Some(VerticalPolyModel::new(vec![0.0]).unwrap()),
            rotor_count: 6,
        };
        let err = estimate_log(&[], &models, &VehicleParams::default(), &DobConfig::default(), FilterConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }

    #[test]
    fn no_horizontal_logs() {
        let settings = CalibrationSettings {
            params: VehicleParams::default(),
            dob: DobConfig::default(),
            protocol: SweepProtocol::default(),
            lambda: 1e-3,
            degree: 3,
        };
        assert!(matches!(calibrate_logs(&[], &[], &settings), Err(Error::Usage(_))));
    }
}
