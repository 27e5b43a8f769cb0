//! Scripted reference trajectories.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;

use crate::calibration::SweepProtocol;
use crate::error::{param, Result};

/// Guards floor() against `k·dt` landing just below a segment boundary.
const BOUNDARY_EPS: f64 = 1e-9;

/// Logged sensor noise, Gaussian standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// m/s², per axis.
    pub accel_sd: f64,
    /// Normalized rotor speed, per rotor.
    pub rotor_sd: f64,
}

impl NoiseSpec {
    pub const NONE: Self = Self {
        accel_sd: 0.0,
        rotor_sd: 0.0,
    };
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            accel_sd: 0.05,
            rotor_sd: 0.002,
        }
    }
}

/// Signed principal axis for lateral translation legs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    PosX,
    NegX,
    PosY,
    NegY,
    /// Up (negative inertial z).
    Up,
    /// Down (positive inertial z).
    Down,
}

impl Axis {
    pub fn unit(self) -> Vector3<f64> {
        match self {
            Self::PosX => Vector3::x(),
            Self::NegX => -Vector3::x(),
            Self::PosY => Vector3::y(),
            Self::NegY => -Vector3::y(),
            Self::Up => -Vector3::z(),
            Self::Down => Vector3::z(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::PosX => "+x",
            Self::NegX => "-x",
            Self::PosY => "+y",
            Self::NegY => "-y",
            Self::Up => "up",
            Self::Down => "down",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s.trim() {
            "+x" | "x" => Self::PosX,
            "-x" => Self::NegX,
            "+y" | "y" => Self::PosY,
            "-y" => Self::NegY,
            "up" => Self::Up,
            "down" => Self::Down,
            other => return Err(format!("unknown axis `{other}` (expected +x, -x, +y, -y, up, down)")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioKind {
    /// Station keeping at the origin.
    Hover,
    /// Hover while the heading steps by `yaw_step` every `dwell` seconds.
    YawSweep(SweepProtocol),
    /// Constant climb rates (m/s, positive up), each held for `dwell`.
    VerticalSteps { climb_rates: Vec<f64>, dwell: f64 },
    /// Horizontal lemniscate `(A·sin ωt, A/2·sin 2ωt)`.
    FigureEight { extent: f64, period: f64 },
    /// One smooth out-and-stop leg per axis, sharing the duration equally.
    LateralTranslation { axes: Vec<Axis>, peak_speed: f64 },
    /// Horizontal circle through the origin.
    Circle { radius: f64, period: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioScript {
    pub kind: ScenarioKind,
    /// s
    pub duration: f64,
    /// Base heading, rad.
    pub yaw: f64,
    pub noise: NoiseSpec,
}

impl ScenarioScript {
    pub fn new(kind: ScenarioKind, duration: f64) -> Self {
        Self {
            kind,
            duration,
            yaw: 0.0,
            noise: NoiseSpec::default(),
        }
    }

    pub fn hover(duration: f64) -> Self {
        Self::new(ScenarioKind::Hover, duration)
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_yaw(mut self, yaw: f64) -> Self {
        self.yaw = yaw;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(param(format!("scenario duration must be > 0, got {}", self.duration)));
        }
        if !self.yaw.is_finite() {
            return Err(param("scenario yaw must be finite"));
        }
        let sd_ok = |x: f64| x.is_finite() && x >= 0.0;
        if !(sd_ok(self.noise.accel_sd) && sd_ok(self.noise.rotor_sd)) {
            return Err(param("noise standard deviations must be >= 0"));
        }
        let positive = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(param(format!("{name} must be > 0, got {x}")))
            }
        };
        match &self.kind {
            ScenarioKind::Hover => Ok(()),
            ScenarioKind::YawSweep(p) => p.validate(),
            ScenarioKind::VerticalSteps { climb_rates, dwell } => {
                if climb_rates.is_empty() || climb_rates.iter().any(|r| !r.is_finite()) {
                    return Err(param("vertical steps need at least one finite climb rate"));
                }
                positive("dwell", *dwell)
            }
            ScenarioKind::FigureEight { extent, period } => {
                positive("extent", *extent)?;
                positive("period", *period)
            }
            ScenarioKind::LateralTranslation { axes, peak_speed } => {
                if axes.is_empty() {
                    return Err(param("lateral translation needs at least one axis"));
                }
                positive("peak speed", *peak_speed)
            }
            ScenarioKind::Circle { radius, period } => {
                positive("radius", *radius)?;
                positive("period", *period)
            }
        }
    }

    /// Reference position, velocity, acceleration, and heading at `t`.
    pub fn reference(&self, t: f64) -> Reference {
        let mut r = Reference {
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
            accel: Vector3::zeros(),
            yaw: self.yaw,
            segment: 0,
        };
        match &self.kind {
            ScenarioKind::Hover => {}
            ScenarioKind::YawSweep(p) => {
                let k = (t / p.dwell + BOUNDARY_EPS).floor().max(0.0) as usize;
                r.segment = k;
                r.yaw = self.yaw + k as f64 * p.yaw_step;
            }
            ScenarioKind::VerticalSteps { climb_rates, dwell } => {
                let k = ((t / dwell + BOUNDARY_EPS).floor().max(0.0) as usize).min(climb_rates.len() - 1);
                let climbed: f64 = climb_rates[..k].iter().sum::<f64>() * dwell
                    + climb_rates[k] * (t - k as f64 * dwell);
                r.segment = k;
                r.position.z = -climbed;
                r.velocity.z = -climb_rates[k];
            }
            ScenarioKind::FigureEight { extent, period } => {
                let w = TAU / period;
                let (s1, c1) = (w * t).sin_cos();
                let (s2, c2) = (2.0 * w * t).sin_cos();
                r.position = Vector3::new(extent * s1, 0.5 * extent * s2, 0.0);
                r.velocity = Vector3::new(extent * w * c1, extent * w * c2, 0.0);
                r.accel = Vector3::new(-extent * w * w * s1, -2.0 * extent * w * w * s2, 0.0);
            }
            ScenarioKind::LateralTranslation { axes, peak_speed } => {
                let leg = self.duration / axes.len() as f64;
                let k = ((t / leg + BOUNDARY_EPS).floor().max(0.0) as usize).min(axes.len() - 1);
                let tau = t - k as f64 * leg;
                let leg_distance = 0.5 * peak_speed * leg;
                let offset: Vector3<f64> = axes[..k].iter().map(|a| a.unit() * leg_distance).sum();
                let u = axes[k].unit();
                let phase = TAU * tau / leg;
                let dist = 0.5 * peak_speed * (tau - phase.sin() * leg / TAU);
                r.segment = k;
                r.position = offset + u * dist;
                r.velocity = u * (0.5 * peak_speed * (1.0 - phase.cos()));
                r.accel = u * (peak_speed * PI / leg * phase.sin());
            }
            ScenarioKind::Circle { radius, period } => {
                let w = TAU / period;
                let (s, c) = (w * t).sin_cos();
                r.position = Vector3::new(radius * (c - 1.0), radius * s, 0.0);
                r.velocity = Vector3::new(-radius * w * s, radius * w * c, 0.0);
                r.accel = Vector3::new(-radius * w * w * c, -radius * w * w * s, 0.0);
            }
        }
        r
    }
}

/// Tracking reference for one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub accel: Vector3<f64>,
    pub yaw: f64,
    /// Index of the scripted segment (yaw stop, climb step, or leg).
    pub segment: usize,
}
