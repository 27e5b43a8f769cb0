//! Window averaging of observer output into regression datasets.

use std::f64::consts::TAU;

use super::tps::CalibSample;
use crate::dob::ForceEstimate;
use crate::error::{param, Error, Result};
use crate::pipeline::force_to_features;

/// Fraction of each dwell window discarded as the settling transient.
pub const TRANSIENT_TRIM: f64 = 0.2;

/// Windows with fewer samples than this are skipped.
pub const MIN_WINDOW_SAMPLES: usize = 10;

/// Yaw-sweep calibration schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepProtocol {
    /// Wind speeds, one sweep each, m/s.
    pub speeds: Vec<f64>,
    /// Yaw increment, rad.
    pub yaw_step: f64,
    /// Time held at each yaw, s.
    pub dwell: f64,
    /// Hz
    pub sample_rate: f64,
}

impl Default for SweepProtocol {
    fn default() -> Self {
        Self {
            speeds: (0..=8).map(f64::from).collect(),
            yaw_step: 10f64.to_radians(),
            dwell: 20.0,
            sample_rate: 50.0,
        }
    }
}

impl SweepProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.speeds.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(param("sweep speeds must be finite and >= 0"));
        }
        if self.speeds.windows(2).any(|w| w[1] < w[0]) {
            return Err(param("sweep speeds must be nondecreasing"));
        }
        if !(self.yaw_step.is_finite() && self.yaw_step > 0.0 && self.yaw_step <= TAU) {
            return Err(param(format!("yaw step must be in (0, 2π], got {}", self.yaw_step)));
        }
        if !(self.dwell.is_finite() && self.dwell > 0.0) {
            return Err(param(format!("dwell must be > 0, got {}", self.dwell)));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(param(format!("sample rate must be > 0, got {}", self.sample_rate)));
        }
        Ok(())
    }

    /// Number of yaw stops in one revolution.
    pub fn yaw_stops(&self) -> usize {
        (TAU / self.yaw_step).round().max(1.0) as usize
    }

    /// Length of one full sweep, s.
    pub fn sweep_duration(&self) -> f64 {
        self.yaw_stops() as f64 * self.dwell
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate
    }
}

/// Ground-truth label for one yaw-sweep sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepLabel {
    pub t: f64,
    /// Horizontal wind speed, m/s.
    pub wind_speed: f64,
    /// Vehicle yaw, rad.
    pub yaw: f64,
}

/// Ground-truth label for one vertical-calibration sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerticalLabel {
    pub t: f64,
    /// Vehicle velocity relative to the air along inertial z (down-positive), m/s.
    pub air_rel_vertical: f64,
    /// Scripted segment the sample belongs to.
    pub segment: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HorizontalDataset {
    pub samples: Vec<CalibSample>,
    /// Windows found in the stream.
    pub windows: usize,
    /// Windows dropped for having fewer than [`MIN_WINDOW_SAMPLES`] samples.
    pub skipped_windows: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerticalDataset {
    /// `(vertical force N, air-relative vertical speed m/s)` per window.
    pub samples: Vec<(f64, f64)>,
    pub windows: usize,
    pub skipped_windows: usize,
}

fn check_aligned(force_t: &[f64], label_t: &[f64], period: f64) -> Result<()> {
    if force_t.len() != label_t.len() {
        return Err(Error::Stream {
            index: force_t.len().min(label_t.len()),
            reason: format!(
                "{} force estimates but {} labels",
                force_t.len(),
                label_t.len()
            ),
        });
    }
    for (index, (a, b)) in force_t.iter().zip(label_t).enumerate() {
        if (a - b).abs() > 0.5 * period {
            return Err(Error::Stream {
                index,
                reason: format!("force time {a} does not match label time {b}"),
            });
        }
    }
    Ok(())
}

/// Splits `0..len` into maximal runs over which `key` is constant.
fn runs<K: PartialEq>(len: usize, key: impl Fn(usize) -> K) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=len {
        if i == len || key(i) != key(start) {
            if i > start {
                out.push(start..i);
            }
            start = i;
        }
    }
    out
}

/// Index range of a window after dropping the leading transient.
fn settled(range: &std::ops::Range<usize>) -> std::ops::Range<usize> {
    let skip = (range.len() as f64 * TRANSIENT_TRIM).floor() as usize;
    range.start + skip..range.end
}

/// Averages each constant-label dwell window of a yaw sweep into one sample.
///
/// A window is a maximal run of samples with identical wind-speed and yaw
/// labels. The first [`TRANSIENT_TRIM`] of each window is discarded, the
/// intermediate-frame force is averaged over the rest, and the averaged force
/// is mapped to `(force_x_comp, force_y_comp)` by [`force_to_features`].
pub fn build_horizontal_dataset(
    forces: &[ForceEstimate],
    labels: &[SweepLabel],
    protocol: &SweepProtocol,
) -> Result<HorizontalDataset> {
    protocol.validate()?;
    let ft: Vec<f64> = forces.iter().map(|f| f.t).collect();
    let lt: Vec<f64> = labels.iter().map(|l| l.t).collect();
    check_aligned(&ft, &lt, protocol.sample_period())?;

    let mut out = HorizontalDataset::default();
    for window in runs(labels.len(), |i| {
        (labels[i].wind_speed.to_bits(), labels[i].yaw.to_bits())
    }) {
        out.windows += 1;
        if window.len() < MIN_WINDOW_SAMPLES {
            out.skipped_windows += 1;
            continue;
        }
        let keep = settled(&window);
        let n = keep.len() as f64;
        let (fx, fy) = forces[keep.clone()].iter().fold((0.0, 0.0), |(x, y), f| {
            (x + f.f_intermediate.x / n, y + f.f_intermediate.y / n)
        });
        let features = force_to_features(&nalgebra::Vector3::new(fx, fy, 0.0));
        let speed = labels[window.start].wind_speed;
        if !(speed.is_finite() && speed >= 0.0) {
            return Err(param(format!(
                "wind speed label {speed} at index {} is negative or non-finite",
                window.start
            )));
        }
        out.samples.push(CalibSample {
            force_x_comp: features.force_x_comp,
            force_y_comp: features.force_y_comp,
            wind_speed_h: speed,
        });
    }
    Ok(out)
}

/// Averages each scripted segment of a vertical calibration log into one
/// `(f_ez, air-relative vertical speed)` pair.
pub fn build_vertical_dataset(
    forces: &[ForceEstimate],
    labels: &[VerticalLabel],
    sample_period: f64,
) -> Result<VerticalDataset> {
    let ft: Vec<f64> = forces.iter().map(|f| f.t).collect();
    let lt: Vec<f64> = labels.iter().map(|l| l.t).collect();
    check_aligned(&ft, &lt, sample_period)?;

    let mut out = VerticalDataset::default();
    for window in runs(labels.len(), |i| labels[i].segment) {
        out.windows += 1;
        if window.len() < MIN_WINDOW_SAMPLES {
            out.skipped_windows += 1;
            continue;
        }
        let keep = settled(&window);
        let n = keep.len() as f64;
        let (f, v) = keep.fold((0.0, 0.0), |(f, v), i| {
            (
                f + forces[i].f_intermediate.z / n,
                v + labels[i].air_rel_vertical / n,
            )
        });
        out.samples.push((f, v));
    }
    Ok(out)
}
