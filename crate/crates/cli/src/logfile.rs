//! On-disk formats.
//!
//! All tables are headered CSV with floats in shortest round-trip scientific
//! notation. Lines starting with `#` are comments; writers emit at most one,
//! a generation timestamp, which `--no-timestamp` suppresses.
//!
//! * flight log: `t,qw,qx,qy,qz,ax,ay,az,vx,vy,vz,px,py,pz,omega1..omegaN,psi_d`
//! * truth: flight log columns followed by
//!   `wind_x,wind_y,wind_z,force_x,force_y,force_z,segment`
//! * estimates: `t`, raw and filtered wind velocity, scalar summaries with the
//!   direction in degrees, and a low-confidence flag.
//!
//! Quaternions are body-to-inertial `(w, x, y, z)`; angles in logs are
//! radians; wind vectors give the air's velocity (down-positive z).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::Vector3;
use thiserror::Error;

use windsense_core::frames::{FrameRotation, StateSample};
use windsense_core::pipeline::WindEstimate;
use windsense_core::sim::TruthSample;

use crate::config::to_degrees_wrapped;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("{path}: {msg}")]
    File { path: PathBuf, msg: String },
    #[error("{path}: row {row} (line {line}): {msg}")]
    Row {
        path: PathBuf,
        row: usize,
        line: u64,
        msg: String,
    },
}

fn file_err(path: &Path, msg: impl Into<String>) -> LogError {
    LogError::File {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

/// Options shared by every writer.
#[derive(Debug, Clone, Copy, Default)]
pub struct WriteOptions {
    pub timestamp: bool,
}

fn header_comment(opts: WriteOptions) -> String {
    if !opts.timestamp {
        return String::new();
    }
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# generated by windsense {} at unix time {secs}\n", env!("CARGO_PKG_VERSION"))
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), LogError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| file_err(path, format!("cannot create directory: {e}")))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| file_err(path, e.to_string()))?;
    tmp.write_all(contents).map_err(|e| file_err(path, e.to_string()))?;
    tmp.as_file().sync_all().map_err(|e| file_err(path, e.to_string()))?;
    tmp.persist(path).map_err(|e| file_err(path, e.error.to_string()))?;
    Ok(())
}

fn push_row(out: &mut String, fields: impl IntoIterator<Item = String>) {
    let mut first = true;
    for f in fields {
        if !first {
            out.push(',');
        }
        out.push_str(&f);
        first = false;
    }
    out.push('\n');
}

fn num(x: f64) -> String {
    // adding zero turns -0 into 0
    format!("{:e}", x + 0.0)
}

pub fn log_header(rotors: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "t", "qw", "qx", "qy", "qz", "ax", "ay", "az", "vx", "vy", "vz", "px", "py", "pz",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((1..=rotors).map(|i| format!("omega{i}")));
    h.push("psi_d".into());
    h
}

const TRUTH_EXTRA: [&str; 7] = ["wind_x", "wind_y", "wind_z", "force_x", "force_y", "force_z", "segment"];

fn state_fields(s: &StateSample) -> Vec<String> {
    let q = s.attitude.to_quaternion();
    let mut f = vec![num(s.t)];
    f.extend(q.iter().map(|x| num(*x)));
    f.extend(s.accel.iter().chain(s.velocity.iter()).chain(s.position.iter()).map(|x| num(*x)));
    f.extend(s.rotor_norm_speeds.iter().map(|x| num(*x)));
    f.push(num(s.desired_yaw));
    f
}

pub fn format_log(states: &[StateSample], opts: WriteOptions) -> String {
    let rotors = states.first().map_or(0, |s| s.rotor_norm_speeds.len());
    let mut out = header_comment(opts);
    push_row(&mut out, log_header(rotors));
    for s in states {
        push_row(&mut out, state_fields(s));
    }
    out
}

pub fn format_truth(states: &[StateSample], truth: &[TruthSample], opts: WriteOptions) -> String {
    let rotors = states.first().map_or(0, |s| s.rotor_norm_speeds.len());
    let mut out = header_comment(opts);
    let mut header = log_header(rotors);
    header.extend(TRUTH_EXTRA.iter().map(|s| s.to_string()));
    push_row(&mut out, header);
    for (s, tr) in states.iter().zip(truth) {
        let mut f = state_fields(s);
        f.extend(tr.wind.iter().chain(tr.force.iter()).map(|x| num(*x)));
        f.push(tr.segment.to_string());
        push_row(&mut out, f);
    }
    out
}

pub const ESTIMATE_HEADER: [&str; 14] = [
    "t",
    "raw_wind_x",
    "raw_wind_y",
    "raw_wind_z",
    "wind_x",
    "wind_y",
    "wind_z",
    "speed_h",
    "dir_h_deg",
    "speed_v",
    "raw_speed_h",
    "raw_dir_h_deg",
    "raw_speed_v",
    "low_confidence",
];

pub fn format_estimates(estimates: &[WindEstimate], opts: WriteOptions) -> String {
    let mut out = header_comment(opts);
    push_row(&mut out, ESTIMATE_HEADER.iter().map(|s| s.to_string()));
    for e in estimates {
        let raw = e.raw.air_velocity();
        let filt = e.filtered.air_velocity();
        let mut f = vec![num(e.t)];
        f.extend(raw.iter().chain(filt.iter()).map(|x| num(*x)));
        f.extend([
            num(e.filtered.speed_h),
            num(to_degrees_wrapped(e.filtered.dir_h)),
            num(e.filtered.speed_v),
            num(e.raw.speed_h),
            num(to_degrees_wrapped(e.raw.dir_h)),
            num(e.raw.speed_v),
            u8::from(e.low_confidence).to_string(),
        ]);
        push_row(&mut out, f);
    }
    out
}

/// A parsed CSV table with named columns.
#[derive(Debug)]
pub struct Table {
    path: PathBuf,
    columns: HashMap<String, usize>,
    pub header: Vec<String>,
    rows: Vec<(u64, Vec<f64>)>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, LogError> {
        let text = std::fs::read_to_string(path).map_err(|e| file_err(path, e.to_string()))?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self, LogError> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| file_err(path, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.iter().all(|h| h.is_empty()) {
            return Err(file_err(path, "missing header row"));
        }
        let mut columns = HashMap::new();
        for (i, h) in header.iter().enumerate() {
            if columns.insert(h.clone(), i).is_some() {
                return Err(file_err(path, format!("duplicate column `{h}`")));
            }
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| file_err(path, format!("row {row}: {e}")))?;
            let line = record.position().map_or(0, |p| p.line());
            let row_err = |msg: String| LogError::Row {
                path: path.to_path_buf(),
                row,
                line,
                msg,
            };
            if record.len() != header.len() {
                return Err(row_err(format!(
                    "expected {} fields, found {}",
                    header.len(),
                    record.len()
                )));
            }
            let values = record
                .iter()
                .zip(&header)
                .map(|(field, name)| {
                    field
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| row_err(format!("column `{name}`: `{field}` is not a finite number")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push((line, values));
        }
        Ok(Self {
            path: path.to_path_buf(),
            columns,
            header,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Result<usize, LogError> {
        self.columns
            .get(name)
            .copied()
            .ok_or_else(|| file_err(&self.path, format!("missing column `{name}`")))
    }

    fn row_err(&self, row: usize, msg: String) -> LogError {
        LogError::Row {
            path: self.path.clone(),
            row: row + 1,
            line: self.rows[row].0,
            msg,
        }
    }

    fn rotor_count(&self) -> usize {
        (1..).take_while(|i| self.columns.contains_key(&format!("omega{i}"))).count()
    }

    /// Requires the flight-log columns in their canonical order.
    fn check_log_prefix(&self) -> Result<usize, LogError> {
        let rotors = self.rotor_count();
        if rotors == 0 {
            return Err(file_err(&self.path, "no rotor columns (`omega1`, ...)"));
        }
        let expected = log_header(rotors);
        if self.header.len() < expected.len() || self.header[..expected.len()] != expected[..] {
            return Err(file_err(
                &self.path,
                format!("header must start with `{}`", expected.join(",")),
            ));
        }
        Ok(rotors)
    }

    pub fn states(&self) -> Result<Vec<StateSample>, LogError> {
        let rotors = self.check_log_prefix()?;
        let mut out = Vec::with_capacity(self.rows.len());
        for (i, (_, r)) in self.rows.iter().enumerate() {
            let attitude = FrameRotation::from_quaternion(r[1], r[2], r[3], r[4])
                .map_err(|e| self.row_err(i, e.to_string()))?;
            let v3 = |k: usize| Vector3::new(r[k], r[k + 1], r[k + 2]);
            let sample = StateSample {
                t: r[0],
                attitude,
                accel: v3(5),
                velocity: v3(8),
                position: v3(11),
                rotor_norm_speeds: r[14..14 + rotors].to_vec(),
                desired_yaw: r[14 + rotors],
            };
            if let Some(prev) = out.last().map(|s: &StateSample| s.t) {
                if !(sample.t > prev) {
                    return Err(self.row_err(i, format!("time {} does not follow {prev}", sample.t)));
                }
            }
            out.push(sample);
        }
        Ok(out)
    }

    /// Time and wind velocity columns; present in truth and estimate files.
    pub fn wind_series(&self) -> Result<Vec<(f64, Vector3<f64>)>, LogError> {
        let t = self.column("t")?;
        let (x, y, z) = (self.column("wind_x")?, self.column("wind_y")?, self.column("wind_z")?);
        Ok(self
            .rows
            .iter()
            .map(|(_, r)| (r[t], Vector3::new(r[x], r[y], r[z])))
            .collect())
    }

    pub fn truth(&self) -> Result<Vec<TruthSample>, LogError> {
        let states = self.states()?;
        let cols: Vec<usize> = TRUTH_EXTRA.iter().map(|c| self.column(c)).collect::<Result<_, _>>()?;
        let mut out = Vec::with_capacity(states.len());
        for (i, ((_, r), s)) in self.rows.iter().zip(&states).enumerate() {
            let seg = r[cols[6]];
            if seg < 0.0 || seg.fract() != 0.0 {
                return Err(self.row_err(i, format!("segment `{seg}` is not a non-negative integer")));
            }
            let wind = Vector3::new(r[cols[0]], r[cols[1]], r[cols[2]]);
            out.push(TruthSample {
                t: s.t,
                wind,
                force: Vector3::new(r[cols[3]], r[cols[4]], r[cols[5]]),
                air_rel: s.velocity - wind,
                segment: seg as usize,
            });
        }
        Ok(out)
    }
}

/// `foo.log.csv` → `foo.truth.csv`.
pub fn truth_path_for(log: &Path) -> Option<PathBuf> {
    let name = log.file_name()?.to_str()?;
    let stem = name.strip_suffix(".log.csv")?;
    Some(log.with_file_name(format!("{stem}.truth.csv")))
}

/// Fixed-width text block of `key value` lines.
pub fn key_values(pairs: &[(&str, String)]) -> String {
    let width = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    out
}

pub fn timestamp_line(opts: WriteOptions) -> String {
    header_comment(opts)
}
