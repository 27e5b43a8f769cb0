//! Run configuration: a flat `key = value` document.
//!
//! Keys are dotted (`vehicle.mass = 6.3`). A `[section]` line prefixes the
//! keys that follow it. `#` starts a comment. Lists are comma or whitespace
//! separated. Angles carry a `_deg` suffix and are given in degrees.
//!
//! Every key is optional; missing keys take library defaults. Unknown keys,
//! repeated keys, and out-of-range values are rejected with the offending
//! line number.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Vector3;
use thiserror::Error;

use windsense_core::calibration::{SweepProtocol, DEFAULT_LAMBDA, DEFAULT_VERTICAL_DEGREE};
use windsense_core::dob::DobConfig;
use windsense_core::frames::VehicleParams;
use windsense_core::pipeline::FilterConfig;
use windsense_core::sim::{Axis, DragSpec, NoiseSpec, ScenarioKind, ScenarioScript, SuiteConfig, WindFieldSpec};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: `{key}`: {msg}")]
    Field { line: usize, key: String, msg: String },
    #[error("`{key}`: {msg}")]
    Invalid { key: String, msg: String },
}

/// What `simulate` flies.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioChoice {
    Single(ScenarioScript),
    CalibrationSuite(SuiteConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub vehicle: VehicleParams,
    pub dob: DobConfig,
    pub filter: FilterConfig,
    pub drag: DragSpec,
    pub scenario: ScenarioChoice,
    pub wind: WindFieldSpec,
    pub protocol: SweepProtocol,
    pub lambda: f64,
    pub degree: usize,
    pub dt: f64,
    pub seed: u64,
    /// Seconds of estimator output ignored by `evaluate`.
    pub settle: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("empty configuration is valid")
    }
}

const KEYS: &[&str] = &[
    "vehicle.mass",
    "vehicle.gravity",
    "vehicle.rotor_count",
    "vehicle.thrust_coeffs",
    "vehicle.max_rpm",
    "dob.tau",
    "dob.gain",
    "dob.dt",
    "filter.low_speed_gain",
    "filter.high_speed_gain",
    "filter.low_speed_knot",
    "filter.high_speed_knot",
    "drag.air_density",
    "drag.area",
    "drag.cd",
    "drag.anisotropy",
    "scenario.kind",
    "scenario.duration",
    "scenario.yaw_deg",
    "scenario.extent",
    "scenario.period",
    "scenario.radius",
    "scenario.peak_speed",
    "scenario.axes",
    "scenario.climb_rates",
    "scenario.dwell",
    "sweep.speeds",
    "sweep.yaw_step_deg",
    "sweep.dwell",
    "sweep.sample_rate",
    "suite.vertical_speeds",
    "suite.vertical_dwell",
    "suite.wind_heading_deg",
    "noise.accel_sd",
    "noise.rotor_sd",
    "wind.kind",
    "wind.velocity",
    "wind.speed",
    "wind.heading_deg",
    "wind.mean",
    "wind.amplitude",
    "wind.period",
    "wind.schedule",
    "sim.dt",
    "sim.seed",
    "calibration.lambda",
    "calibration.degree",
    "evaluate.settle",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line,
                    msg: format!("unterminated section header `{content}`"),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if !KEYS.contains(&full.as_str()) {
                return Err(ConfigError::Field {
                    line,
                    key: full,
                    msg: "unknown key".into(),
                });
            }
            if let Some((first, _)) = map.get(&full) {
                return Err(ConfigError::Field {
                    line,
                    key: full,
                    msg: format!("already set on line {first}"),
                });
            }
            map.insert(full, (line, value.trim().to_string()));
        }
        Ok(Self { map })
    }

    fn field_err(&self, key: &str, msg: impl Into<String>) -> ConfigError {
        match self.map.get(key) {
            Some((line, _)) => ConfigError::Field {
                line: *line,
                key: key.into(),
                msg: msg.into(),
            },
            None => ConfigError::Invalid {
                key: key.into(),
                msg: msg.into(),
            },
        }
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn str(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.str(key) {
            None => Ok(default),
            Some(v) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(self.field_err(key, format!("expected a finite number, got `{v}`"))),
            },
        }
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let x = self.f64(key, default)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(self.field_err(key, format!("must be > 0, got {x}")))
        }
    }

    fn non_negative(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let x = self.f64(key, default)?;
        if x >= 0.0 {
            Ok(x)
        } else {
            Err(self.field_err(key, format!("must be >= 0, got {x}")))
        }
    }

    fn uint(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.str(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| self.field_err(key, format!("expected a non-negative integer, got `{v}`"))),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(v) = self.str(key) else {
            return Ok(None);
        };
        v.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| self.field_err(key, format!("`{s}` is not a finite number")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn vec3(&self, key: &str, default: Vector3<f64>) -> Result<Vector3<f64>, ConfigError> {
        match self.list(key)? {
            None => Ok(default),
            Some(v) if v.len() == 3 => Ok(Vector3::new(v[0], v[1], v[2])),
            Some(v) => Err(self.field_err(key, format!("expected 3 numbers, got {}", v.len()))),
        }
    }

    /// Runs a component validator and attributes failures to `key`.
    fn check(&self, key: &str, r: windsense_core::Result<()>) -> Result<(), ConfigError> {
        r.map_err(|e| self.field_err(key, e.to_string()))
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let e = Entries::parse(text)?;
    let base = VehicleParams::default();

    let thrust_coeffs = match e.list("vehicle.thrust_coeffs")? {
        None => base.thrust_coeffs,
        Some(v) if v.len() == 3 => [v[0], v[1], v[2]],
        Some(v) => {
            return Err(e.field_err("vehicle.thrust_coeffs", format!("expected 3 numbers, got {}", v.len())))
        }
    };
    let rotor_count = e.uint("vehicle.rotor_count", base.rotor_count as u64)? as usize;
    if rotor_count == 0 {
        return Err(e.field_err("vehicle.rotor_count", "must be >= 1"));
    }
    let vehicle = VehicleParams {
        mass: e.positive("vehicle.mass", base.mass)?,
        gravity: e.positive("vehicle.gravity", base.gravity)?,
        thrust_coeffs,
        rotor_count,
        max_rpm: e.positive("vehicle.max_rpm", base.max_rpm)?,
    };
    e.check("vehicle", vehicle.validate())?;

    let dt = e.positive("sim.dt", 0.02)?;
    let dob_dt = e.positive("dob.dt", dt)?;
    if e.has("dob.tau") && e.has("dob.gain") {
        return Err(e.field_err("dob.gain", "set either dob.tau or dob.gain, not both"));
    }
    let dob = if e.has("dob.gain") {
        DobConfig {
            gain: e.vec3("dob.gain", Vector3::zeros())?,
            dt: dob_dt,
        }
    } else {
        DobConfig::with_time_constant(vehicle.mass, e.positive("dob.tau", 0.5)?, dob_dt)
    };
    let dob_key = if e.has("dob.gain") { "dob.gain" } else { "dob.tau" };
    e.check(dob_key, dob.validate(&vehicle))?;

    let fd = FilterConfig::default();
    let filter = FilterConfig {
        low_speed_gain: e.f64("filter.low_speed_gain", fd.low_speed_gain)?,
        high_speed_gain: e.f64("filter.high_speed_gain", fd.high_speed_gain)?,
        low_speed_knot: e.f64("filter.low_speed_knot", fd.low_speed_knot)?,
        high_speed_knot: e.f64("filter.high_speed_knot", fd.high_speed_knot)?,
    };
    e.check("filter", filter.validate())?;

    let dd = DragSpec::default();
    let drag = DragSpec {
        air_density: e.positive("drag.air_density", dd.air_density)?,
        area: e.vec3("drag.area", dd.area)?,
        cd: e.vec3("drag.cd", dd.cd)?,
        anisotropy: e.non_negative("drag.anisotropy", dd.anisotropy)?,
    };
    e.check("drag", drag.validate())?;

    let pd = SweepProtocol::default();
    let protocol = SweepProtocol {
        speeds: e.list("sweep.speeds")?.unwrap_or(pd.speeds),
        yaw_step: e.positive("sweep.yaw_step_deg", pd.yaw_step.to_degrees())?.to_radians(),
        dwell: e.positive("sweep.dwell", pd.dwell)?,
        sample_rate: e.positive("sweep.sample_rate", pd.sample_rate)?,
    };
    e.check("sweep", protocol.validate())?;

    let nd = NoiseSpec::default();
    let noise = NoiseSpec {
        accel_sd: e.non_negative("noise.accel_sd", nd.accel_sd)?,
        rotor_sd: e.non_negative("noise.rotor_sd", nd.rotor_sd)?,
    };

    let kind_name = e.str("scenario.kind").unwrap_or("hover");
    let scenario = if kind_name == "calibration-suite" {
        let sd = SuiteConfig::default();
        ScenarioChoice::CalibrationSuite(SuiteConfig {
            protocol: protocol.clone(),
            vertical_speeds: e.list("suite.vertical_speeds")?.unwrap_or(sd.vertical_speeds),
            vertical_dwell: e.positive("suite.vertical_dwell", sd.vertical_dwell)?,
            noise,
            wind_heading: e.f64("suite.wind_heading_deg", 0.0)?.to_radians(),
        })
    } else {
        let kind = match kind_name {
            "hover" => ScenarioKind::Hover,
            "yaw-sweep" => ScenarioKind::YawSweep(protocol.clone()),
            "vertical-steps" => ScenarioKind::VerticalSteps {
                climb_rates: e.list("scenario.climb_rates")?.unwrap_or_else(|| vec![1.0]),
                dwell: e.positive("scenario.dwell", 20.0)?,
            },
            "figure-eight" => ScenarioKind::FigureEight {
                extent: e.positive("scenario.extent", 5.0)?,
                period: e.positive("scenario.period", 20.0)?,
            },
            "lateral-translation" => {
                let axes = match e.str("scenario.axes") {
                    None => vec![Axis::PosX, Axis::NegX],
                    Some(v) => v
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse::<Axis>().map_err(|m| e.field_err("scenario.axes", m)))
                        .collect::<Result<Vec<_>, _>>()?,
                };
                ScenarioKind::LateralTranslation {
                    axes,
                    peak_speed: e.positive("scenario.peak_speed", 4.0)?,
                }
            }
            "circle" => ScenarioKind::Circle {
                radius: e.positive("scenario.radius", 5.0)?,
                period: e.positive("scenario.period", 20.0)?,
            },
            other => {
                return Err(e.field_err(
                    "scenario.kind",
                    format!(
                        "unknown kind `{other}` (expected hover, yaw-sweep, vertical-steps, \
                         figure-eight, lateral-translation, circle, calibration-suite)"
                    ),
                ))
            }
        };
        let default_duration = match &kind {
            ScenarioKind::YawSweep(p) => p.sweep_duration(),
            ScenarioKind::VerticalSteps { climb_rates, dwell } => climb_rates.len() as f64 * dwell,
            _ => 60.0,
        };
        let script = ScenarioScript {
            kind,
            duration: e.positive("scenario.duration", default_duration)?,
            yaw: e.f64("scenario.yaw_deg", 0.0)?.to_radians(),
            noise,
        };
        e.check("scenario", script.validate())?;
        ScenarioChoice::Single(script)
    };

    let wind = match e.str("wind.kind").unwrap_or("constant") {
        "constant" => {
            if e.has("wind.velocity") && (e.has("wind.speed") || e.has("wind.heading_deg")) {
                return Err(e.field_err("wind.velocity", "set either wind.velocity or wind.speed/heading_deg"));
            }
            if e.has("wind.velocity") {
                WindFieldSpec::Constant(e.vec3("wind.velocity", Vector3::zeros())?)
            } else {
                let speed = e.non_negative("wind.speed", 0.0)?;
                WindFieldSpec::horizontal(speed, e.f64("wind.heading_deg", 0.0)?.to_radians())
            }
        }
        "sinusoid" => WindFieldSpec::Sinusoid {
            mean: e.vec3("wind.mean", Vector3::zeros())?,
            amplitude: e.vec3("wind.amplitude", Vector3::zeros())?,
            period: e.positive("wind.period", 10.0)?,
        },
        "schedule" => {
            let text = e.str("wind.schedule").unwrap_or("");
            let mut points = Vec::new();
            for entry in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                let nums: Vec<f64> = entry
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| e.field_err("wind.schedule", format!("bad entry `{entry}`")))?;
                if nums.len() != 4 {
                    return Err(e.field_err(
                        "wind.schedule",
                        format!("entry `{entry}` must be `t wx wy wz`"),
                    ));
                }
                points.push((nums[0], Vector3::new(nums[1], nums[2], nums[3])));
            }
            WindFieldSpec::Schedule(points)
        }
        other => {
            return Err(e.field_err(
                "wind.kind",
                format!("unknown kind `{other}` (expected constant, sinusoid, schedule)"),
            ))
        }
    };
    e.check("wind", wind.validate())?;

    let lambda = e.non_negative("calibration.lambda", DEFAULT_LAMBDA)?;
    let degree = e.uint("calibration.degree", DEFAULT_VERTICAL_DEGREE as u64)? as usize;
    if degree == 0 {
        return Err(e.field_err("calibration.degree", "must be >= 1"));
    }

    Ok(RunConfig {
        vehicle,
        dob,
        filter,
        drag,
        scenario,
        wind,
        protocol,
        lambda,
        degree,
        dt,
        seed: e.uint("sim.seed", 0)?,
        settle: e.non_negative("evaluate.settle", 5.0)?,
    })
}

/// Degrees in `[0, 360)` for reporting.
pub fn to_degrees_wrapped(rad: f64) -> f64 {
    (rad * 180.0 / PI).rem_euclid(360.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.vehicle, VehicleParams::default());
        assert_eq!(c.dob, DobConfig::default());
        assert_eq!(c.lambda, DEFAULT_LAMBDA);
        assert!(matches!(c.scenario, ScenarioChoice::Single(ref s) if s.kind == ScenarioKind::Hover));
    }

    #[test]
    fn sections_and_comments() {
        let c = parse_config(
            "# vehicle\n[vehicle]\nmass = 2.5 # kg\n\n[wind]\nspeed = 5\nheading_deg = 90\nsim.seed = 4\n",
        );
        // keys after a section header are prefixed, so `sim.seed` here is `wind.sim.seed`
        assert!(matches!(c, Err(ConfigError::Field { line: 8, .. })));
        let c = parse_config("[vehicle]\nmass = 2.5\n[wind]\nspeed = 5\nheading_deg = 90\n[sim]\nseed = 4\n").unwrap();
        assert_eq!(c.vehicle.mass, 2.5);
        assert_eq!(c.seed, 4);
        match c.wind {
            WindFieldSpec::Constant(v) => assert!((v - Vector3::new(0.0, 5.0, 0.0)).norm() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_mass_names_field() {
        let err = parse_config("sim.seed = 1\nvehicle.mass = -1\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::Field {
                line: 2,
                key: "vehicle.mass".into(),
                msg: "must be > 0, got -1".into()
            }
        );
        assert!(err.to_string().contains("vehicle.mass"));
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed() {
        assert!(matches!(parse_config("vehicle.colour = red"), Err(ConfigError::Field { line: 1, .. })));
        assert!(matches!(
            parse_config("sim.dt = 0.02\nsim.dt = 0.01"),
            Err(ConfigError::Field { line: 2, .. })
        ));
        assert!(matches!(parse_config("just words"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(parse_config("[vehicle"), Err(ConfigError::Syntax { .. })));
        assert!(parse_config("drag.area = 1 2").is_err());
        assert!(parse_config("scenario.kind = spiral").is_err());
        assert!(parse_config("dob.tau = 0.5\ndob.gain = 1 1 1").is_err());
    }

    #[test]
    fn component_validation_is_attributed() {
        let err = parse_config("filter.low_speed_gain = 0.5").unwrap_err();
        assert!(err.to_string().contains("filter"), "{err}");
        let err = parse_config("dob.gain = 1e6 1e6 1e6").unwrap_err();
        assert!(matches!(err, ConfigError::Field { line: 1, .. }), "{err}");
    }

    #[test]
    fn scenario_kinds() {
        let c = parse_config("scenario.kind = lateral-translation\nscenario.axes = +x, -y up\nscenario.duration = 30").unwrap();
        match c.scenario {
            ScenarioChoice::Single(s) => {
                assert_eq!(s.duration, 30.0);
                assert_eq!(
                    s.kind,
                    ScenarioKind::LateralTranslation {
                        axes: vec![Axis::PosX, Axis::NegY, Axis::Up],
                        peak_speed: 4.0
                    }
                );
            }
            other => panic!("{other:?}"),
        }
        let c = parse_config("scenario.kind = calibration-suite\nsweep.speeds = 0 4 8\nsuite.vertical_speeds = -1 1").unwrap();
        match c.scenario {
            ScenarioChoice::CalibrationSuite(s) => {
                assert_eq!(s.protocol.speeds, vec![0.0, 4.0, 8.0]);
                assert_eq!(s.vertical_speeds, vec![-1.0, 1.0]);
            }
            other => panic!("{other:?}"),
        }
        let c = parse_config("scenario.kind = yaw-sweep\nsweep.yaw_step_deg = 90\nsweep.dwell = 2").unwrap();
        assert!(matches!(c.scenario, ScenarioChoice::Single(ref s) if s.duration == 8.0));
        let c = parse_config("wind.kind = schedule\nwind.schedule = 0 1 0 0; 5, 2, 0, 0").unwrap();
        assert_eq!(c.wind, WindFieldSpec::Schedule(vec![(0.0, Vector3::x()), (5.0, 2.0 * Vector3::x())]));
    }
}
