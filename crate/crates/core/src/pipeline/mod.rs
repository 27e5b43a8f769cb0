//! Online force-to-wind inference.
//!
//! For every observer output the pipeline
//!
//! 1. maps the intermediate-frame horizontal force to features
//!    `f_h = ‖(f_x, f_y)‖`, `θ_f = atan2(f_x, f_y)` (note the argument order) and
//!    `(m, n) = f_h·(cos θ_f, sin θ_f)`;
//! 2. evaluates the horizontal speed model at `(m, n)` and the vertical model
//!    at `f_z`;
//! 3. builds the vehicle's velocity relative to the air in the intermediate
//!    frame, rotates it into the inertial frame by the desired yaw, and
//!    subtracts the ground velocity;
//! 4. reports direction `atan2(A_y, A_x) + π` in `[0, 2π)`, horizontal speed
//!    `‖(A_x, A_y)‖`, and vertical speed `A_z`;
//! 5. smooths the wind vector with the speed-scheduled filter.
//!
//! # Sign conventions
//!
//! Drag pushes the vehicle along the air flowing past it, so the air-relative
//! velocity of the vehicle points *against* the horizontal force. Because of
//! the swapped `atan2` arguments, the force direction in intermediate-frame
//! axes is `(sin θ_f, cos θ_f)`; the air-relative velocity is therefore
//! `V_h·(−sin θ_f, −cos θ_f)`. With that, `A = A_rel − ṗ` equals the negated
//! wind, and after the `+π` offset the reported direction is the direction
//! the wind blows **towards**, measured from inertial x towards inertial y.
//! Vertical speed is positive for upward airflow (the inertial z axis points
//! down). The vertical model maps `f_z` to the vehicle's air-relative vertical
//! velocity (down-positive), which is what a still-air climb or descent
//! produces directly.
//!
//! Direction is meaningless when the wind is calm; estimates below
//! [`LOW_CONFIDENCE_SPEED`] carry `low_confidence = true`.

mod filter;
mod metrics;

use nalgebra::Vector3;

pub use filter::{dynamic_filter_step, smoothing_step, DynamicFilter, FilterConfig};
pub use metrics::{
    pearson, rmse, unwrap_angles, wind_metrics, wrap_pi, wrap_two_pi, WindMetrics, WindTriple,
};

use crate::calibration::{ModelSet, TpsModel, VerticalPolyModel};
use crate::dob::ForceEstimate;
use crate::error::{ensure_finite3, Error, Result};
use crate::frames::{from_intermediate_frame, StateSample};

/// Horizontal speed below which the reported direction is flagged.
pub const LOW_CONFIDENCE_SPEED: f64 = 0.2;

/// Horizontal force features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceFeatures {
    /// N
    pub f_h: f64,
    /// `atan2(f_x, f_y)`, rad.
    pub theta_f: f64,
    /// `f_h·cos θ_f`, N
    pub force_x_comp: f64,
    /// `f_h·sin θ_f`, N
    pub force_y_comp: f64,
}

/// Features of an intermediate-frame force (only x and y are used).
pub fn force_to_features(f_c: &Vector3<f64>) -> ForceFeatures {
    let f_h = f_c.x.hypot(f_c.y);
    let theta_f = f_c.x.atan2(f_c.y);
    let (s, c) = theta_f.sin_cos();
    ForceFeatures {
        f_h,
        theta_f,
        force_x_comp: f_h * c,
        force_y_comp: f_h * s,
    }
}

/// Maps force features to horizontal air-relative speed (m/s).
pub trait HorizontalSpeedModel {
    /// Unclamped model output.
    fn horizontal_speed_raw(&self, m: f64, n: f64) -> f64;

    fn horizontal_speed(&self, m: f64, n: f64) -> f64 {
        self.horizontal_speed_raw(m, n).max(0.0)
    }
}

/// Maps intermediate-frame vertical force to air-relative vertical velocity
/// (m/s, down-positive).
pub trait VerticalSpeedModel {
    fn vertical_speed(&self, f_ez: f64) -> f64;
}

impl HorizontalSpeedModel for TpsModel {
    fn horizontal_speed_raw(&self, m: f64, n: f64) -> f64 {
        self.eval_raw(m, n)
    }
}

impl VerticalSpeedModel for VerticalPolyModel {
    fn vertical_speed(&self, f_ez: f64) -> f64 {
        self.eval(f_ez)
    }
}

/// Adapts a closure `(m, n) -> speed` as a horizontal model.
#[derive(Debug, Clone, Copy)]
pub struct HorizontalFn<F>(pub F);

impl<F: Fn(f64, f64) -> f64> HorizontalSpeedModel for HorizontalFn<F> {
    fn horizontal_speed_raw(&self, m: f64, n: f64) -> f64 {
        (self.0)(m, n)
    }
}

/// Adapts a closure `f_ez -> vertical speed` as a vertical model.
#[derive(Debug, Clone, Copy)]
pub struct VerticalFn<F>(pub F);

impl<F: Fn(f64) -> f64> VerticalSpeedModel for VerticalFn<F> {
    fn vertical_speed(&self, f_ez: f64) -> f64 {
        (self.0)(f_ez)
    }
}

/// Wind vector (the negated wind, see module docs) and its derived scalars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindSolution {
    /// `A = A_rel − ṗ`, m/s, inertial frame.
    pub wind_inertial: Vector3<f64>,
    /// m/s
    pub speed_h: f64,
    /// rad in `[0, 2π)`
    pub dir_h: f64,
    /// m/s, positive for upward airflow.
    pub speed_v: f64,
}

impl WindSolution {
    pub fn from_vector(a: Vector3<f64>) -> Self {
        Self {
            wind_inertial: a,
            speed_h: a.x.hypot(a.y),
            dir_h: wrap_two_pi(a.y.atan2(a.x) + std::f64::consts::PI),
            speed_v: a.z,
        }
    }

    pub fn triple(&self) -> WindTriple {
        WindTriple {
            speed: self.speed_h,
            dir: self.dir_h,
            vspeed: self.speed_v,
        }
    }

    /// Physical wind velocity (where the air moves), inertial frame.
    pub fn air_velocity(&self) -> Vector3<f64> {
        -self.wind_inertial
    }
}

/// One pipeline output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindEstimate {
    pub t: f64,
    /// Vehicle velocity relative to the air, intermediate frame, m/s.
    pub air_rel_intermediate: Vector3<f64>,
    /// The same in the inertial frame, m/s.
    pub air_rel_inertial: Vector3<f64>,
    /// Ground velocity used for the subtraction, m/s.
    pub ground_velocity: Vector3<f64>,
    pub raw: WindSolution,
    pub filtered: WindSolution,
    /// Horizontal model output before clamping at zero.
    pub model_speed_raw: f64,
    pub low_confidence: bool,
}

/// Builds the wind estimate from an air-relative velocity given in the
/// intermediate frame.
pub fn reconstruct_from_air_relative(
    t: f64,
    air_rel_intermediate: Vector3<f64>,
    psi_d: f64,
    ground_velocity: &Vector3<f64>,
) -> Result<WindEstimate> {
    ensure_finite3("ground velocity", ground_velocity)?;
    let air_rel_inertial = from_intermediate_frame(&air_rel_intermediate, psi_d)?;
    let raw = WindSolution::from_vector(air_rel_inertial - ground_velocity);
    Ok(WindEstimate {
        t,
        air_rel_intermediate,
        air_rel_inertial,
        ground_velocity: *ground_velocity,
        raw,
        filtered: raw,
        model_speed_raw: air_rel_intermediate.x.hypot(air_rel_intermediate.y),
        low_confidence: raw.speed_h < LOW_CONFIDENCE_SPEED,
    })
}

/// Evaluates both models and reconstructs the (unfiltered) wind.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_wind(
    t: f64,
    features: &ForceFeatures,
    horizontal: &dyn HorizontalSpeedModel,
    vertical: &dyn VerticalSpeedModel,
    f_ez: f64,
    psi_d: f64,
    ground_velocity: &Vector3<f64>,
) -> Result<WindEstimate> {
    let speed_raw = horizontal.horizontal_speed_raw(features.force_x_comp, features.force_y_comp);
    let speed_h = speed_raw.max(0.0);
    let speed_v = vertical.vertical_speed(f_ez);
    let (s, c) = features.theta_f.sin_cos();
    let air_rel = Vector3::new(-speed_h * s, -speed_h * c, speed_v);
    let mut est = reconstruct_from_air_relative(t, air_rel, psi_d, ground_velocity)?;
    est.model_speed_raw = speed_raw;
    Ok(est)
}

/// Stateful per-stream inference: reconstruction plus filtering.
pub struct WindPipeline<'a> {
    horizontal: &'a dyn HorizontalSpeedModel,
    vertical: &'a dyn VerticalSpeedModel,
    filter: DynamicFilter,
}

impl<'a> WindPipeline<'a> {
    pub fn new(
        horizontal: &'a dyn HorizontalSpeedModel,
        vertical: &'a dyn VerticalSpeedModel,
        filter: FilterConfig,
    ) -> Result<Self> {
        Ok(Self {
            horizontal,
            vertical,
            filter: DynamicFilter::new(filter)?,
        })
    }

    /// Uses the fitted models of `models`; the vertical model must be present.
    pub fn from_models(models: &'a ModelSet, filter: FilterConfig) -> Result<Self> {
        let vertical = models
            .vertical
            .as_ref()
            .ok_or_else(|| Error::Usage("vertical model has not been fitted".into()))?;
        Self::new(&models.horizontal, vertical, filter)
    }

    pub fn process(&mut self, force: &ForceEstimate, state: &StateSample) -> Result<WindEstimate> {
        let features = force_to_features(&force.f_intermediate);
        let mut est = reconstruct_wind(
            force.t,
            &features,
            self.horizontal,
            self.vertical,
            force.f_intermediate.z,
            state.desired_yaw,
            &state.velocity,
        )?;
        est.filtered = WindSolution::from_vector(self.filter.update(&est.raw.wind_inertial));
        Ok(est)
    }
}

/// Runs the pipeline over aligned force and state streams.
pub fn pipeline_run(
    forces: &[ForceEstimate],
    states: &[StateSample],
    models: &ModelSet,
    filter: FilterConfig,
) -> Result<Vec<WindEstimate>> {
    let mut pipeline = WindPipeline::from_models(models, filter)?;
    run_aligned(&mut pipeline, forces, states)
}

/// Same as [`pipeline_run`] for an already constructed pipeline.
pub fn run_aligned(
    pipeline: &mut WindPipeline<'_>,
    forces: &[ForceEstimate],
    states: &[StateSample],
) -> Result<Vec<WindEstimate>> {
    if forces.len() != states.len() {
        return Err(Error::Stream {
            index: forces.len().min(states.len()),
            reason: format!("{} force estimates but {} states", forces.len(), states.len()),
        });
    }
    let half_period = if states.len() >= 2 {
        0.5 * (states[1].t - states[0].t).abs()
    } else {
        1e-9
    };
    let mut out = Vec::with_capacity(forces.len());
    for (index, (f, s)) in forces.iter().zip(states).enumerate() {
        if (f.t - s.t).abs() > half_period {
            return Err(Error::Stream {
                index,
                reason: format!("force time {} does not match state time {}", f.t, s.t),
            });
        }
        out.push(pipeline.process(f, s).map_err(|e| match e {
            Error::Stream { reason, .. } => Error::Stream { index, reason },
            other => other,
        })?);
    }
    Ok(out)
}
