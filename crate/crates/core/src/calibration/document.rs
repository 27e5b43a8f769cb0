//! Versioned text document holding a fitted model pair.
//!
//! ```text
//! windsense-models
//! version = 1
//! vehicle.rotor_count = 4
//! tps.lambda = 1e-3
//! tps.samples = 324
//! tps.residual_rms = 2.5e-9
//! tps.count = 289
//! tps.centers = m0 n0 m1 n1 ...
//! tps.weights = c0 c1 ...
//! tps.affine = a0 a1 a2
//! vertical.degree = 3
//! vertical.samples = 11
//! vertical.residual_rms = 1.2e-2
//! vertical.coeffs = c1 c2 c3
//! end
//! ```
//!
//! Numbers are written in shortest round-trip scientific notation, so a decode
//! reproduces every field bit for bit. The `vertical.*` block is optional.
//! The trailing `end` line guards against truncated files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::tps::{FitStats, TpsModel};
use super::vertical::VerticalPolyModel;
use crate::error::{Error, Result};

pub const MAGIC: &str = "windsense-models";
pub const FORMAT_VERSION: u32 = 1;
pub const SUPPORTED_VERSIONS: &[u32] = &[FORMAT_VERSION];

/// The fitted horizontal and (optional) vertical models.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    pub horizontal: TpsModel,
    pub vertical: Option<VerticalPolyModel>,
    /// Rotor count of the vehicle the models were calibrated on.
    pub rotor_count: usize,
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn serialize_models(models: &ModelSet) -> String {
    let tps = &models.horizontal;
    let mut out = String::new();
    // writes to a String cannot fail
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "version = {FORMAT_VERSION}");
    let _ = writeln!(out, "vehicle.rotor_count = {}", models.rotor_count);
    let _ = writeln!(out, "tps.lambda = {:e}", tps.lambda());
    let _ = writeln!(out, "tps.samples = {}", tps.stats.samples);
    let _ = writeln!(out, "tps.residual_rms = {:e}", tps.stats.residual_rms);
    let _ = writeln!(out, "tps.count = {}", tps.centers().len());
    let _ = writeln!(out, "tps.centers = {}", join(tps.centers().iter().flatten().copied()));
    let _ = writeln!(out, "tps.weights = {}", join(tps.kernel_weights().iter().copied()));
    let _ = writeln!(out, "tps.affine = {}", join(tps.affine()));
    if let Some(v) = &models.vertical {
        let _ = writeln!(out, "vertical.degree = {}", v.degree());
        let _ = writeln!(out, "vertical.samples = {}", v.stats.samples);
        let _ = writeln!(out, "vertical.residual_rms = {:e}", v.stats.residual_rms);
        let _ = writeln!(out, "vertical.coeffs = {}", join(v.coeffs().iter().copied()));
    }
    out.push_str("end\n");
    out
}

fn decode_err(msg: impl Into<String>) -> Error {
    Error::Decode(msg.into())
}

struct Fields(BTreeMap<String, (usize, String)>);

impl Fields {
    fn take(&mut self, key: &str) -> Result<(usize, String)> {
        self.0
            .remove(key)
            .ok_or_else(|| decode_err(format!("missing field `{key}`")))
    }

    fn has(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (line, raw) = self.take(key)?;
        raw.trim()
            .parse()
            .map_err(|_| decode_err(format!("line {line}: `{key}` has invalid value `{raw}`")))
    }

    fn floats(&mut self, key: &str) -> Result<Vec<f64>> {
        let (line, raw) = self.take(key)?;
        raw.split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| decode_err(format!("line {line}: `{key}` has invalid number `{tok}`")))
            })
            .collect()
    }
}

pub fn deserialize_models(doc: &str) -> Result<ModelSet> {
    let mut lines = doc
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    match lines.next() {
        None => return Err(decode_err("empty document")),
        Some((_, l)) if l == MAGIC => {}
        Some((n, l)) => return Err(decode_err(format!("line {n}: expected `{MAGIC}`, found `{l}`"))),
    }

    let mut fields = BTreeMap::new();
    let mut ended = false;
    for (n, line) in lines {
        if ended {
            return Err(decode_err(format!("line {n}: content after `end`")));
        }
        if line == "end" {
            ended = true;
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| decode_err(format!("line {n}: expected `key = value`")))?;
        let key = key.trim().to_string();
        if fields.insert(key.clone(), (n, value.trim().to_string())).is_some() {
            return Err(decode_err(format!("line {n}: duplicate field `{key}`")));
        }
    }
    let mut f = Fields(fields);

    let version: u32 = f.parse("version")?;
    if !SUPPORTED_VERSIONS.contains(&version) {
        return Err(decode_err(format!(
            "unsupported document version {version}; supported versions: {SUPPORTED_VERSIONS:?}"
        )));
    }
    if !ended {
        return Err(decode_err("document is truncated (no `end` line)"));
    }

    let rotor_count: usize = f.parse("vehicle.rotor_count")?;
    let lambda: f64 = f.parse("tps.lambda")?;
    let samples: usize = f.parse("tps.samples")?;
    let residual_rms: f64 = f.parse("tps.residual_rms")?;
    let count: usize = f.parse("tps.count")?;
    let flat = f.floats("tps.centers")?;
    let weights = f.floats("tps.weights")?;
    let affine = f.floats("tps.affine")?;
    if flat.len() != 2 * count || weights.len() != count {
        return Err(decode_err(format!(
            "tps.count = {count} but found {} center coordinates and {} weights",
            flat.len(),
            weights.len()
        )));
    }
    let affine: [f64; 3] = affine
        .try_into()
        .map_err(|v: Vec<f64>| decode_err(format!("tps.affine needs 3 values, found {}", v.len())))?;
    let centers = flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
    let mut horizontal = TpsModel::from_parts(centers, weights, affine, lambda)
        .map_err(|e| decode_err(e.to_string()))?;
    horizontal.stats = FitStats { samples, residual_rms };

    let vertical = if f.has("vertical.degree") {
        let degree: usize = f.parse("vertical.degree")?;
        let samples: usize = f.parse("vertical.samples")?;
        let residual_rms: f64 = f.parse("vertical.residual_rms")?;
        let coeffs = f.floats("vertical.coeffs")?;
        if coeffs.len() != degree {
            return Err(decode_err(format!(
                "vertical.degree = {degree} but found {} coefficients",
                coeffs.len()
            )));
        }
        let mut v = VerticalPolyModel::new(coeffs).map_err(|e| decode_err(e.to_string()))?;
        v.stats = FitStats { samples, residual_rms };
        Some(v)
    } else {
        None
    };

    if let Some(key) = f.0.keys().next() {
        return Err(decode_err(format!("unknown field `{key}`")));
    }
    Ok(ModelSet {
        horizontal,
        vertical,
        rotor_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{fit_tps, fit_vertical_poly, CalibSample};

    fn fitted() -> ModelSet {
        let data: Vec<_> = (0..12)
            .map(|i| {
                let a = i as f64 * 0.5;
                CalibSample {
                    force_x_comp: a.cos() * (1.0 + 0.1 * i as f64),
                    force_y_comp: a.sin() * (1.0 + 0.1 * i as f64),
                    wind_speed_h: 1.0 / 3.0 + i as f64,
                }
            })
            .collect();
        let vertical: Vec<_> = (-4..=4).map(|i| (i as f64 * 0.3, 0.7 * i as f64 - 0.01 * (i * i * i) as f64)).collect();
        ModelSet {
            horizontal: fit_tps(&data, 1e-3).unwrap(),
            vertical: Some(fit_vertical_poly(&vertical, 3).unwrap()),
            rotor_count: 4,
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let m = fitted();
        let back = deserialize_models(&serialize_models(&m)).unwrap();
        assert_eq!(back, m);
        let no_vertical = ModelSet { vertical: None, ..m };
        assert_eq!(deserialize_models(&serialize_models(&no_vertical)).unwrap(), no_vertical);
    }

    #[test]
    fn empty_document() {
        assert_eq!(deserialize_models(""), Err(Error::Decode("empty document".into())));
        assert!(deserialize_models("\n\n# comment\n").is_err());
    }

    #[test]
    fn unknown_version_names_supported() {
        let doc = serialize_models(&fitted()).replace("version = 1", "version = 7");
        let err = deserialize_models(&doc).unwrap_err().to_string();
        assert!(err.contains('7') && err.contains("[1]"), "{err}");
    }

    #[test]
    fn truncated_document() {
        let doc = serialize_models(&fitted());
        let cut = &doc[..doc.len() / 2];
        assert!(matches!(deserialize_models(cut), Err(Error::Decode(_))));
        let no_end = doc.replace("end\n", "");
        assert!(deserialize_models(&no_end).unwrap_err().to_string().contains("truncated"));
    }

    #[test]
    fn rejects_unknown_and_inconsistent_fields() {
        let doc = serialize_models(&fitted());
        let extra = doc.replace("end\n", "tps.extra = 1\nend\n");
        assert!(deserialize_models(&extra).unwrap_err().to_string().contains("tps.extra"));
        let bad_count = doc.replace("tps.count = ", "tps.count = 1");
        assert!(deserialize_models(&bad_count).is_err());
    }
}
