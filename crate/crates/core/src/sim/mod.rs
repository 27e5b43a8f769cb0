//! Synthetic quadrotor flight for calibration data and ground truth.
//!
//! The plant integrates the translational rows `m·p̈ = −u_f·R·e₃ + m·g0·e₃ + f_drag`
//! with semi-implicit Euler. A PD tracker (`kp = 4 s⁻²`, `kd = 4 s⁻¹`,
//! critically damped at `ω_n = 2 rad/s`) turns the scripted reference into a
//! commanded thrust vector; attitude follows the command instantly. The
//! tracker does not know about drag, so wind shows up as a small steady
//! position offset rather than being cancelled.

mod drag;
mod scenario;
mod suite;
mod wind;

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub use drag::{drag_force, DragSpec};
pub use scenario::{Axis, NoiseSpec, Reference, ScenarioKind, ScenarioScript};
pub use suite::{generate_calibration_suite, CalibrationSuite, SuiteConfig, SuiteLog};
pub use wind::WindFieldSpec;

use crate::calibration::{SweepLabel, VerticalLabel};
use crate::error::{param, Error, Result};
use crate::frames::{thrust_from_rotor_speeds, FrameRotation, StateSample, VehicleParams};
use crate::pipeline::{wrap_two_pi, WindTriple};

/// Position gain of the tracker, s⁻².
pub const TRACK_KP: f64 = 4.0;
/// Velocity gain of the tracker, s⁻¹.
pub const TRACK_KD: f64 = 4.0;
/// Largest commanded tilt from vertical.
pub const MAX_TILT: f64 = std::f64::consts::FRAC_PI_3;

/// Ground truth logged alongside each state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSample {
    pub t: f64,
    /// Air velocity in the inertial frame, m/s.
    pub wind: Vector3<f64>,
    /// True external (drag) force, N.
    pub force: Vector3<f64>,
    /// Vehicle velocity relative to the air, `v − wind`, m/s.
    pub air_rel: Vector3<f64>,
    /// Scripted segment index.
    pub segment: usize,
}

impl TruthSample {
    /// Horizontal speed, direction the wind blows towards in `[0, 2π)`, and
    /// vertical speed (positive up).
    pub fn wind_triple(&self) -> WindTriple {
        WindTriple {
            speed: self.wind.x.hypot(self.wind.y),
            dir: wrap_two_pi(self.wind.y.atan2(self.wind.x)),
            vspeed: -self.wind.z,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub states: Vec<StateSample>,
    pub truth: Vec<TruthSample>,
}

impl SimOutput {
    /// Labels for the horizontal dataset builder; the wind speed is the
    /// true horizontal speed.
    pub fn sweep_labels(&self) -> Vec<SweepLabel> {
        self.states
            .iter()
            .zip(&self.truth)
            .map(|(s, tr)| SweepLabel {
                t: s.t,
                wind_speed: tr.wind.x.hypot(tr.wind.y),
                yaw: s.desired_yaw,
            })
            .collect()
    }

    /// Labels for the vertical dataset builder.
    pub fn vertical_labels(&self) -> Vec<VerticalLabel> {
        self.truth
            .iter()
            .map(|tr| VerticalLabel {
                t: tr.t,
                air_rel_vertical: tr.air_rel.z,
                segment: tr.segment,
            })
            .collect()
    }
}

/// Body-to-inertial rotation with third column `z_b` and heading `yaw`.
fn attitude_from(z_b: &Vector3<f64>, yaw: f64) -> Result<FrameRotation> {
    let (s, c) = yaw.sin_cos();
    let heading = Vector3::new(c, s, 0.0);
    let y_b = z_b.cross(&heading).normalize();
    let x_b = y_b.cross(z_b);
    FrameRotation::from_matrix(Matrix3::from_columns(&[x_b, y_b, *z_b]))
}

/// Runs a scripted flight.
///
/// Logs `round(duration / dt)` samples at `t = k·dt`. Each record holds the
/// state at `t` and the acceleration applied over the following step. The
/// logged acceleration and rotor speeds carry Gaussian noise from
/// `script.noise`, drawn from a ChaCha8 stream seeded by `seed`.
pub fn simulate(
    script: &ScenarioScript,
    wind: &WindFieldSpec,
    params: &VehicleParams,
    drag: &DragSpec,
    dt: f64,
    seed: u64,
) -> Result<SimOutput> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(param(format!("time step must be > 0, got {dt}")));
    }
    script.validate()?;
    wind.validate()?;
    params.validate()?;
    drag.validate()?;

    let steps = (script.duration / dt).round() as usize;
    let m = params.mass;
    let gravity = Vector3::new(0.0, 0.0, m * params.gravity);
    let rotors = params.rotor_count as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let accel_noise = Normal::new(0.0, script.noise.accel_sd).map_err(|e| param(e.to_string()))?;
    let rotor_noise = Normal::new(0.0, script.noise.rotor_sd).map_err(|e| param(e.to_string()))?;

    let start = script.reference(0.0);
    let mut p = start.position;
    let mut v = start.velocity;
    let mut states = Vec::with_capacity(steps);
    let mut truth = Vec::with_capacity(steps);

    for k in 0..steps {
        let t = k as f64 * dt;
        let r = script.reference(t);
        let w = wind.at(t, &p);
        let f_drag = drag_force(drag, &(w - v), r.yaw);

        let a_cmd = r.accel + TRACK_KP * (r.position - p) + TRACK_KD * (r.velocity - v);
        let thrust_vec = gravity - m * a_cmd;
        let u_cmd = thrust_vec.norm();
        if !(u_cmd.is_finite() && u_cmd > 0.0) {
            return Err(Error::Simulation {
                t,
                reason: "commanded thrust vanished".into(),
            });
        }
        let z_b = thrust_vec / u_cmd;
        if z_b.z < MAX_TILT.cos() {
            return Err(Error::Simulation {
                t,
                reason: format!(
                    "required tilt {:.1}° exceeds {:.0}°",
                    z_b.z.clamp(-1.0, 1.0).acos().to_degrees(),
                    MAX_TILT.to_degrees()
                ),
            });
        }
        let omega = params
            .rotor_speed_for_thrust(u_cmd / rotors)
            .ok_or_else(|| Error::Simulation {
                t,
                reason: format!("thrust {u_cmd:.2} N is outside the rotor envelope"),
            })?;
        let omegas = vec![omega; params.rotor_count];
        let u_f = thrust_from_rotor_speeds(params, &omegas)?;
        let attitude = attitude_from(&z_b, r.yaw)?;
        let thrust_force = -u_f * attitude.z_axis();
        let accel = (thrust_force + gravity + f_drag) / m;

        let mut logged_accel = accel;
        if script.noise.accel_sd > 0.0 {
            for a in logged_accel.iter_mut() {
                *a += accel_noise.sample(&mut rng);
            }
        }
        let mut logged_omegas = omegas;
        if script.noise.rotor_sd > 0.0 {
            for w in logged_omegas.iter_mut() {
                *w = (*w + rotor_noise.sample(&mut rng)).clamp(0.0, 1.0);
            }
        }

        states.push(StateSample {
            t,
            attitude,
            accel: logged_accel,
            velocity: v,
            position: p,
            rotor_norm_speeds: logged_omegas,
            desired_yaw: r.yaw,
        });
        truth.push(TruthSample {
            t,
            wind: w,
            force: f_drag,
            air_rel: v - w,
            segment: r.segment,
        });

        v += accel * dt;
        p += v * dt;
    }
    Ok(SimOutput { states, truth })
}
