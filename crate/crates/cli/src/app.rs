use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use windsense_core::calibration::{deserialize_models, serialize_models};
use windsense_core::pipeline::{wind_metrics, wrap_pi, WindTriple};
use windsense_core::sim::{generate_calibration_suite, simulate, SimOutput, TruthSample};
use windsense_core::workflow::{
    calibrate_logs, estimate_log, CalibrationSettings, HorizontalLog, VerticalLog,
};
use windsense_core::Error as CoreError;

use crate::config::{parse_config, to_degrees_wrapped, ConfigError, RunConfig, ScenarioChoice};
use crate::logfile::{
    format_estimates, format_log, format_truth, key_values, timestamp_line, truth_path_for,
    write_atomic, LogError, Table, WriteOptions,
};

/// Exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    Success = 0,
    Usage = 1,
    Data = 2,
    Fit = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub class: ExitClass,
    pub message: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        Self {
            class: ExitClass::Usage,
            message: msg.into(),
        }
    }

    fn data(msg: impl Into<String>) -> Self {
        Self {
            class: ExitClass::Data,
            message: msg.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::usage(format!("config: {e}"))
    }
}

impl From<LogError> for CliError {
    fn from(e: LogError) -> Self {
        Self::data(e.to_string())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let class = match e {
            CoreError::Parameter(_) | CoreError::Usage(_) => ExitClass::Usage,
            CoreError::OutOfCalibrationRange { .. } | CoreError::Stream { .. } | CoreError::Decode(_) => {
                ExitClass::Data
            }
            CoreError::Fit(_) | CoreError::Simulation { .. } => ExitClass::Fit,
        };
        Self {
            class,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "windsense", version, about = "Wind estimation from multirotor flight logs")]
pub struct Cli {
    /// Run configuration (flat `key = value` file).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `sim.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Omit the generation timestamp comment from outputs.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fly the configured scenario and write `<name>.log.csv` and `<name>.truth.csv`.
    Simulate {
        /// Base name of the output files (ignored for calibration suites).
        #[arg(long, default_value = "flight")]
        name: String,
    },
    /// Fit the horizontal and vertical models from calibration logs.
    Calibrate {
        /// Yaw-sweep logs; truth is read from the matching `.truth.csv`.
        #[arg(long, num_args = 1..)]
        horizontal: Vec<PathBuf>,
        /// Climb/descent logs.
        #[arg(long, num_args = 1..)]
        vertical: Vec<PathBuf>,
        /// Overrides `calibration.lambda`.
        #[arg(long)]
        lambda: Option<f64>,
        /// Overrides `calibration.degree`.
        #[arg(long)]
        degree: Option<usize>,
        /// Model document path, default `<out>/models.txt`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Replay a flight log through the estimator.
    Estimate {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Output path, default `<out>/estimates.csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare estimates with ground truth.
    Evaluate {
        #[arg(long)]
        estimates: PathBuf,
        /// Truth file, or any table with `t,wind_x,wind_y,wind_z` columns.
        #[arg(long)]
        truth: PathBuf,
        /// Overrides `evaluate.settle`, seconds skipped at the start.
        #[arg(long)]
        settle: Option<f64>,
    },
}

/// Outcome of a successful command: text for stdout plus warnings.
#[derive(Debug, Default)]
pub struct Report {
    pub stdout: String,
    pub warnings: Vec<String>,
}

pub fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

pub fn run(cli: &Cli) -> CliResult<Report> {
    let config = load_config(cli)?;
    let opts = WriteOptions {
        timestamp: !cli.no_timestamp,
    };
    match &cli.command {
        Command::Simulate { name } => cmd_simulate(&config, &cli.out, name, opts),
        Command::Calibrate {
            horizontal,
            vertical,
            lambda,
            degree,
            model,
        } => {
            let model = model.clone().unwrap_or_else(|| cli.out.join("models.txt"));
            cmd_calibrate(&config, horizontal, vertical, *lambda, *degree, &model, &cli.out, opts)
        }
        Command::Estimate { log, model, output } => {
            let output = output.clone().unwrap_or_else(|| cli.out.join("estimates.csv"));
            cmd_estimate(&config, log, model, &output, opts)
        }
        Command::Evaluate {
            estimates,
            truth,
            settle,
        } => cmd_evaluate(estimates, truth, settle.unwrap_or(config.settle), &cli.out, opts),
    }
}

fn write_flight(out: &Path, name: &str, sim: &SimOutput, opts: WriteOptions) -> CliResult<[PathBuf; 2]> {
    let log = out.join(format!("{name}.log.csv"));
    let truth = out.join(format!("{name}.truth.csv"));
    write_atomic(&log, format_log(&sim.states, opts).as_bytes())?;
    write_atomic(&truth, format_truth(&sim.states, &sim.truth, opts).as_bytes())?;
    Ok([log, truth])
}

pub fn cmd_simulate(config: &RunConfig, out: &Path, name: &str, opts: WriteOptions) -> CliResult<Report> {
    let mut report = Report::default();
    match &config.scenario {
        ScenarioChoice::Single(script) => {
            let sim = simulate(script, &config.wind, &config.vehicle, &config.drag, config.dt, config.seed)?;
            let [log, _] = write_flight(out, name, &sim, opts)?;
            let _ = writeln!(report.stdout, "wrote {} ({} rows)", log.display(), sim.states.len());
        }
        ScenarioChoice::CalibrationSuite(suite_cfg) => {
            let suite = generate_calibration_suite(&config.vehicle, &config.drag, suite_cfg, config.seed)?;
            for (i, log) in suite.horizontal.iter().enumerate() {
                write_flight(out, &format!("sweep_{i:02}"), &log.output, opts)?;
            }
            for (i, log) in suite.vertical.iter().enumerate() {
                write_flight(out, &format!("vertical_{i:02}"), &log.output, opts)?;
            }
            let _ = writeln!(
                report.stdout,
                "wrote {} sweep and {} vertical logs to {}",
                suite.horizontal.len(),
                suite.vertical.len(),
                out.display()
            );
        }
    }
    Ok(report)
}

fn read_calibration_log(path: &Path) -> CliResult<(SimOutput, usize)> {
    let table = Table::read(path)?;
    if table.is_empty() {
        return Err(CliError::data(format!("{}: log has no rows", path.display())));
    }
    let states = table.states()?;
    let truth_path = truth_path_for(path).ok_or_else(|| {
        CliError::usage(format!("{}: calibration logs must be named `*.log.csv`", path.display()))
    })?;
    let truth_table = Table::read(&truth_path)?;
    let truth: Vec<TruthSample> = truth_table.truth()?;
    if truth.len() != states.len() || truth.iter().zip(&states).any(|(a, b)| a.t != b.t) {
        return Err(CliError::data(format!(
            "{} does not line up with {}",
            truth_path.display(),
            path.display()
        )));
    }
    let rotors = states[0].rotor_norm_speeds.len();
    Ok((SimOutput { states, truth }, rotors))
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_calibrate(
    config: &RunConfig,
    horizontal: &[PathBuf],
    vertical: &[PathBuf],
    lambda: Option<f64>,
    degree: Option<usize>,
    model_path: &Path,
    out: &Path,
    opts: WriteOptions,
) -> CliResult<Report> {
    if horizontal.is_empty() {
        return Err(CliError::usage("calibrate needs at least one --horizontal log"));
    }
    let mut report = Report::default();
    let load = |paths: &[PathBuf]| -> CliResult<Vec<SimOutput>> {
        paths
            .iter()
            .map(|p| {
                let (sim, rotors) = read_calibration_log(p)?;
                if rotors != config.vehicle.rotor_count {
                    return Err(CliError::usage(format!(
                        "{}: log has {rotors} rotors but vehicle.rotor_count is {}",
                        p.display(),
                        config.vehicle.rotor_count
                    )));
                }
                Ok(sim)
            })
            .collect()
    };
    let h_logs = load(horizontal)?;
    let v_logs = load(vertical)?;
    let h_labels: Vec<_> = h_logs.iter().map(SimOutput::sweep_labels).collect();
    let v_labels: Vec<_> = v_logs.iter().map(SimOutput::vertical_labels).collect();
    let h: Vec<_> = h_logs
        .iter()
        .zip(&h_labels)
        .map(|(l, labels)| HorizontalLog {
            states: &l.states,
            labels,
        })
        .collect();
    let v: Vec<_> = v_logs
        .iter()
        .zip(&v_labels)
        .map(|(l, labels)| VerticalLog {
            states: &l.states,
            labels,
        })
        .collect();

    let lambda = lambda.unwrap_or(config.lambda);
    let degree = degree.unwrap_or(config.degree);
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(CliError::usage(format!("--lambda must be >= 0, got {lambda}")));
    }
    if degree == 0 {
        return Err(CliError::usage("--degree must be >= 1"));
    }
    let settings = CalibrationSettings {
        params: config.vehicle.clone(),
        dob: config.dob.clone(),
        protocol: config.protocol.clone(),
        lambda,
        degree,
    };
    let (models, summary) = calibrate_logs(&h, &v, &settings)?;
    write_atomic(model_path, serialize_models(&models).as_bytes())?;

    let vertical_line = match summary.vertical_residual {
        Some(r) => format!("{r:e}"),
        None => {
            let msg = "no vertical logs given; vertical model omitted".to_string();
            report.warnings.push(msg.clone());
            format!("omitted ({msg})")
        }
    };
    let mut text = timestamp_line(opts);
    text.push_str(&key_values(&[
        ("model", model_path.display().to_string()),
        ("lambda", format!("{lambda:e}")),
        ("degree", degree.to_string()),
        ("horizontal.logs", summary.horizontal_logs.to_string()),
        ("horizontal.windows", summary.horizontal_windows.to_string()),
        ("horizontal.skipped_windows", summary.horizontal_skipped.to_string()),
        ("horizontal.samples", summary.horizontal_samples.to_string()),
        ("horizontal.residual_rms_mps", format!("{:e}", summary.horizontal_residual)),
        ("vertical.logs", summary.vertical_logs.to_string()),
        ("vertical.samples", summary.vertical_samples.to_string()),
        ("vertical.residual_rms_mps", vertical_line),
    ]));
    let report_path = out.join("calibration_report.txt");
    write_atomic(&report_path, text.as_bytes())?;
    report.stdout = text;
    Ok(report)
}

pub fn cmd_estimate(
    config: &RunConfig,
    log: &Path,
    model: &Path,
    output: &Path,
    opts: WriteOptions,
) -> CliResult<Report> {
    let doc = std::fs::read_to_string(model).map_err(|e| CliError::data(format!("{}: {e}", model.display())))?;
    let models = deserialize_models(&doc).map_err(|e| CliError::data(format!("{}: {e}", model.display())))?;
    let table = Table::read(log)?;
    if table.is_empty() {
        return Err(CliError::data(format!("{}: log has no rows", log.display())));
    }
    let states = table.states()?;
    let rotors = states[0].rotor_norm_speeds.len();
    if rotors != models.rotor_count || rotors != config.vehicle.rotor_count {
        return Err(CliError::usage(format!(
            "rotor count mismatch: log has {rotors}, model {}, vehicle.rotor_count {}",
            models.rotor_count, config.vehicle.rotor_count
        )));
    }
    if models.vertical.is_none() {
        return Err(CliError::usage(format!(
            "{} has no vertical model; calibrate with --vertical logs first",
            model.display()
        )));
    }
    let estimates = estimate_log(&states, &models, &config.vehicle, &config.dob, config.filter)?;
    write_atomic(output, format_estimates(&estimates, opts).as_bytes())?;
    Ok(Report {
        stdout: format!("wrote {} ({} rows)\n", output.display(), estimates.len()),
        warnings: vec![],
    })
}

fn triple_of(wind: &nalgebra::Vector3<f64>) -> WindTriple {
    TruthSample {
        t: 0.0,
        wind: *wind,
        force: nalgebra::Vector3::zeros(),
        air_rel: nalgebra::Vector3::zeros(),
        segment: 0,
    }
    .wind_triple()
}

pub fn cmd_evaluate(
    estimates: &Path,
    truth: &Path,
    settle: f64,
    out: &Path,
    opts: WriteOptions,
) -> CliResult<Report> {
    if !(settle.is_finite() && settle >= 0.0) {
        return Err(CliError::usage(format!("settle time must be >= 0, got {settle}")));
    }
    let est = Table::read(estimates)?.wind_series()?;
    let tru = Table::read(truth)?.wind_series()?;
    if est.len() != tru.len() {
        return Err(CliError::data(format!(
            "{} has {} rows but {} has {}",
            estimates.display(),
            est.len(),
            truth.display(),
            tru.len()
        )));
    }
    for (i, ((te, _), (tt, _))) in est.iter().zip(&tru).enumerate() {
        if (te - tt).abs() > 1e-9 * te.abs().max(1.0) {
            return Err(CliError::data(format!(
                "row {}: estimate time {te} does not match truth time {tt}",
                i + 1
            )));
        }
    }
    let start = est.first().map_or(0.0, |(t, _)| *t) + settle;
    let keep: Vec<usize> = (0..est.len()).filter(|&i| est[i].0 >= start).collect();
    let e: Vec<WindTriple> = keep.iter().map(|&i| triple_of(&est[i].1)).collect();
    let t: Vec<WindTriple> = keep.iter().map(|&i| triple_of(&tru[i].1)).collect();
    let metrics = wind_metrics(&e, &t).map_err(|err| {
        CliError::data(format!(
            "{} rows after the {settle} s settle window: {err}",
            keep.len()
        ))
    })?;

    let r_text = |r: Option<f64>| r.map_or("undefined".to_string(), |r| format!("{r:e}"));
    let pairs = [
        ("samples", metrics.samples.to_string()),
        ("settle_s", format!("{settle:e}")),
        ("rmse_speed_mps", format!("{:e}", metrics.rmse_speed)),
        ("rmse_dir_deg", format!("{:e}", metrics.rmse_dir.to_degrees())),
        ("rmse_vspeed_mps", format!("{:e}", metrics.rmse_vspeed)),
        ("pearson_speed", r_text(metrics.pearson_speed)),
        ("pearson_dir", r_text(metrics.pearson_dir)),
    ];
    let mut human = timestamp_line(opts);
    human.push_str(&key_values(&pairs));
    write_atomic(&out.join("metrics.txt"), human.as_bytes())?;
    let mut machine = timestamp_line(opts);
    machine.push_str("metric,value\n");
    for (k, v) in &pairs {
        let _ = writeln!(machine, "{k},{v}");
    }
    write_atomic(&out.join("metrics.csv"), machine.as_bytes())?;

    let mut errors = timestamp_line(opts);
    errors.push_str(
        "t,speed_est,speed_true,dir_est_deg,dir_true_deg,vspeed_est,vspeed_true,err_speed,err_dir_deg,err_vspeed\n",
    );
    for (k, &i) in keep.iter().enumerate() {
        let (a, b) = (&e[k], &t[k]);
        let _ = writeln!(
            errors,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            est[i].0,
            a.speed,
            b.speed,
            to_degrees_wrapped(a.dir),
            to_degrees_wrapped(b.dir),
            a.vspeed,
            b.vspeed,
            a.speed - b.speed,
            wrap_pi(a.dir - b.dir).to_degrees(),
            a.vspeed - b.vspeed
        );
    }
    write_atomic(&out.join("errors.csv"), errors.as_bytes())?;

    let speed_err: Vec<f64> = e.iter().zip(&t).map(|(a, b)| a.speed - b.speed).collect();
    let mut hist = timestamp_line(opts);
    hist.push_str(&histogram_csv(&speed_err, 20));
    write_atomic(&out.join("speed_error_histogram.csv"), hist.as_bytes())?;

    Ok(Report {
        stdout: key_values(&pairs),
        warnings: vec![],
    })
}

/// Equal-width bins over the data range as `bin_lo,bin_hi,count` rows.
pub fn histogram_csv(values: &[f64], bins: usize) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        return out;
    }
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    for (k, c) in counts.iter().enumerate() {
        let a = lo + k as f64 * width;
        let _ = writeln!(out, "{:e},{:e},{c}", a, a + width);
    }
    out
}
