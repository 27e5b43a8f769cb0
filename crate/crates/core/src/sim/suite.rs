use std::thread;

use crate::calibration::SweepProtocol;
use crate::error::{param, Result};
use crate::frames::VehicleParams;

use super::{simulate, DragSpec, NoiseSpec, ScenarioKind, ScenarioScript, SimOutput, WindFieldSpec};

/// Synthetic calibration campaign settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub protocol: SweepProtocol,
    /// Climb rates for the vertical logs, m/s, positive up.
    pub vertical_speeds: Vec<f64>,
    /// Dwell per vertical log, s.
    pub vertical_dwell: f64,
    pub noise: NoiseSpec,
    /// Direction the tunnel wind blows towards, rad.
    pub wind_heading: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            protocol: SweepProtocol::default(),
            vertical_speeds: (-5..=5).map(f64::from).collect(),
            vertical_dwell: 20.0,
            noise: NoiseSpec::default(),
            wind_heading: 0.0,
        }
    }
}

/// One generated log with the speed it was flown at.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteLog {
    /// Tunnel speed (horizontal logs) or climb rate (vertical logs), m/s.
    pub speed: f64,
    pub output: SimOutput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSuite {
    pub horizontal: Vec<SuiteLog>,
    pub vertical: Vec<SuiteLog>,
}

/// Per-log seed so that logs are independent and order-insensitive.
fn log_seed(seed: u64, index: u64) -> u64 {
    seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Flies one yaw sweep per tunnel speed and one constant-rate climb or
/// descent per vertical speed, in parallel.
pub fn generate_calibration_suite(
    params: &VehicleParams,
    drag: &DragSpec,
    config: &SuiteConfig,
    seed: u64,
) -> Result<CalibrationSuite> {
    config.protocol.validate()?;
    if !(config.vertical_dwell.is_finite() && config.vertical_dwell > 0.0) {
        return Err(param("vertical dwell must be > 0"));
    }
    let dt = config.protocol.sample_period();
    let sweep = ScenarioScript {
        kind: ScenarioKind::YawSweep(config.protocol.clone()),
        duration: config.protocol.sweep_duration(),
        yaw: 0.0,
        noise: config.noise,
    };

    let mut jobs: Vec<(f64, ScenarioScript, WindFieldSpec)> = Vec::new();
    for &speed in &config.protocol.speeds {
        jobs.push((speed, sweep.clone(), WindFieldSpec::horizontal(speed, config.wind_heading)));
    }
    for &rate in &config.vertical_speeds {
        let script = ScenarioScript {
            kind: ScenarioKind::VerticalSteps {
                climb_rates: vec![rate],
                dwell: config.vertical_dwell,
            },
            duration: config.vertical_dwell,
            yaw: 0.0,
            noise: config.noise,
        };
        jobs.push((rate, script, WindFieldSpec::default()));
    }

    let results: Vec<Result<SuiteLog>> = thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .enumerate()
            .map(|(i, (speed, script, wind))| {
                scope.spawn(move || {
                    simulate(script, wind, params, drag, dt, log_seed(seed, i as u64))
                        .map(|output| SuiteLog { speed: *speed, output })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });

    let mut logs = results.into_iter().collect::<Result<Vec<_>>>()?;
    let vertical = logs.split_off(config.protocol.speeds.len());
    Ok(CalibrationSuite {
        horizontal: logs,
        vertical,
    })
}
