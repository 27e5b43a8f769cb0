//! Discrete-time disturbance observer for the external force.
//!
//! The recursion is
//!
//! ```text
//! f̂(k+1) = (I − δt/(2m)·K)·f̂(k) + δt/(2m)·K·(m·p̈ − m·g0·e₃ + u_f·z_B)
//! ```
//!
//! with `z_B` the body z axis in the inertial frame and `u_f` the total rotor
//! thrust. The drive term is exactly the external force implied by the
//! translational dynamics `m·p̈ = −u_f·z_B + m·g0·e₃ + f_e` in the
//! down-positive inertial frame, so a level hover with balanced thrust is a
//! fixed point at zero.
//!
//! The `δt/(2m)` factor is kept as published. Do not replace it with the
//! forward-Euler `δt/m`: the per-axis time constant is `2m/k`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{ensure_finite3, param, Error, Result};
use crate::frames::{thrust_from_rotor_speeds, to_intermediate_frame, StateSample, VehicleParams};

/// Relative disagreement between the configured period and a sample gap above
/// which the measured gap is used instead.
pub const DT_JITTER_TOLERANCE: f64 = 0.10;

/// Observer gains and nominal sample period.
#[derive(Debug, Clone, PartialEq)]
pub struct DobConfig {
    /// Diagonal of the force gain matrix, N/(N·s).
    pub gain: Vector3<f64>,
    /// Nominal sample period, s.
    pub dt: f64,
}

impl DobConfig {
    /// Equal gains on every axis giving a time constant `tau` for vehicle mass `mass`.
    pub fn with_time_constant(mass: f64, tau: f64, dt: f64) -> Self {
        let k = 2.0 * mass / tau;
        Self {
            gain: Vector3::repeat(k),
            dt,
        }
    }

    /// Per-axis contraction factor `1 − dt·k/(2m)` at the nominal period.
    pub fn contraction(&self, mass: f64) -> Vector3<f64> {
        self.gain.map(|k| 1.0 - self.dt * k / (2.0 * mass))
    }

    pub fn gain_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&self.gain)
    }

    /// Checks positivity and that every axis contracts for `params.mass`.
    pub fn validate(&self, params: &VehicleParams) -> Result<()> {
        params.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(param(format!("observer dt must be > 0, got {}", self.dt)));
        }
        for (axis, &k) in self.gain.iter().enumerate() {
            if !(k.is_finite() && k > 0.0) {
                return Err(param(format!("observer gain on axis {axis} must be > 0, got {k}")));
            }
        }
        for (axis, &c) in self.contraction(params.mass).iter().enumerate() {
            if !(c > -1.0 && c < 1.0) {
                return Err(param(format!(
                    "observer gain on axis {axis} is unstable: 1 - dt·k/(2m) = {c}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for DobConfig {
    /// 0.5 s time constant for the default vehicle at 50 Hz.
    fn default() -> Self {
        Self::with_time_constant(VehicleParams::default().mass, 0.5, 0.02)
    }
}

/// Observer output for one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceEstimate {
    pub t: f64,
    /// Estimated external force in the inertial frame, N.
    pub f_inertial: Vector3<f64>,
    /// The same force in the intermediate frame, N.
    pub f_intermediate: Vector3<f64>,
}

impl ForceEstimate {
    pub fn from_inertial(t: f64, f_inertial: Vector3<f64>, psi_d: f64) -> Result<Self> {
        Ok(Self {
            t,
            f_inertial,
            f_intermediate: to_intermediate_frame(&f_inertial, psi_d)?,
        })
    }
}

/// Recursion state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DobState {
    pub f_hat: Vector3<f64>,
    /// Time of the last consumed sample; `None` before the first.
    pub last_t: Option<f64>,
}

impl DobState {
    pub fn new(initial: Vector3<f64>) -> Self {
        Self {
            f_hat: initial,
            last_t: None,
        }
    }
}

impl Default for DobState {
    fn default() -> Self {
        Self::new(Vector3::zeros())
    }
}

/// External force implied by one sample: `m·p̈ − m·g0·e₃ + u_f·z_B`.
pub fn force_drive(params: &VehicleParams, sample: &StateSample) -> Result<Vector3<f64>> {
    let thrust = thrust_from_rotor_speeds(params, &sample.rotor_norm_speeds)?;
    let gravity = Vector3::new(0.0, 0.0, params.mass * params.gravity);
    Ok(params.mass * sample.accel - gravity + thrust * sample.attitude.z_axis())
}

/// Step period to use given the configured period and the observed gap.
fn step_period(config: &DobConfig, last_t: Option<f64>, t: f64) -> f64 {
    match last_t {
        Some(prev) => {
            let gap = t - prev;
            if (gap - config.dt).abs() > DT_JITTER_TOLERANCE * config.dt {
                gap
            } else {
                config.dt
            }
        }
        None => config.dt,
    }
}

/// Advances the observer by one sample and returns `f̂(k+1)`.
pub fn dob_step(
    state: &DobState,
    config: &DobConfig,
    params: &VehicleParams,
    sample: &StateSample,
) -> Result<(DobState, ForceEstimate)> {
    sample.validate()?;
    ensure_finite3("observer state", &state.f_hat)?;
    if let Some(prev) = state.last_t {
        if !(sample.t > prev) {
            return Err(Error::Stream {
                index: 0,
                reason: format!("timestamp {} does not follow {}", sample.t, prev),
            });
        }
    }
    let dt = step_period(config, state.last_t, sample.t);
    let scale = config.gain * (dt / (2.0 * params.mass));
    let drive = force_drive(params, sample)?;
    let f_next = state.f_hat + scale.component_mul(&(drive - state.f_hat));
    ensure_finite3("observer estimate", &f_next)?;
    let next = DobState {
        f_hat: f_next,
        last_t: Some(sample.t),
    };
    Ok((next, ForceEstimate::from_inertial(sample.t, f_next, sample.desired_yaw)?))
}

/// Folds [`dob_step`] over a stream; one estimate per sample.
pub fn dob_run(
    samples: &[StateSample],
    config: &DobConfig,
    params: &VehicleParams,
    initial: Vector3<f64>,
) -> Result<Vec<ForceEstimate>> {
    if samples.is_empty() {
        return Ok(Vec::new());
    }
    config.validate(params)?;
    let mut state = DobState::new(initial);
    let mut out = Vec::with_capacity(samples.len());
    for (index, sample) in samples.iter().enumerate() {
        let (next, est) = dob_step(&state, config, params, sample).map_err(|e| match e {
            Error::Stream { reason, .. } => Error::Stream { index, reason },
            other => other,
        })?;
        state = next;
        out.push(est);
    }
    Ok(out)
}

/// Per-axis mean and population standard deviation of `f̂ − truth`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceErrorStats {
    pub mean: Vector3<f64>,
    pub sd: Vector3<f64>,
}

pub fn dob_error_stats(estimates: &[ForceEstimate], truth: &Vector3<f64>) -> Result<ForceErrorStats> {
    if estimates.is_empty() {
        return Err(param("error statistics need at least one estimate"));
    }
    let n = estimates.len() as f64;
    let mean = estimates
        .iter()
        .fold(Vector3::zeros(), |acc, e| acc + (e.f_inertial - truth))
        / n;
    let var = estimates.iter().fold(Vector3::zeros(), |acc, e| {
        let d = e.f_inertial - truth - mean;
        acc + d.component_mul(&d)
    }) / n;
    Ok(ForceErrorStats {
        mean,
        sd: var.map(f64::sqrt),
    })
}
