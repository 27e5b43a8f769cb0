//! Accuracy metrics for wind estimates: RMSE and Pearson correlation.

use std::f64::consts::{PI, TAU};

use crate::error::{param, Result};

/// Horizontal speed (m/s), direction (rad), and vertical speed (m/s, positive up).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindTriple {
    pub speed: f64,
    pub dir: f64,
    pub vspeed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindMetrics {
    pub samples: usize,
    /// m/s
    pub rmse_speed: f64,
    /// rad
    pub rmse_dir: f64,
    /// m/s
    pub rmse_vspeed: f64,
    /// `None` when either series has zero variance.
    pub pearson_speed: Option<f64>,
    pub pearson_dir: Option<f64>,
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_pi(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_two_pi(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Removes 2π jumps between consecutive angles.
pub fn unwrap_angles(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len());
    let mut offset = 0.0;
    for (i, &a) in angles.iter().enumerate() {
        if i > 0 {
            let prev = angles[i - 1];
            offset += wrap_pi(a - prev) - (a - prev);
        }
        out.push(a + offset);
    }
    out
}

pub fn rmse(residuals: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = residuals
        .into_iter()
        .fold((0.0, 0usize), |(s, n), r| (s + r * r, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Sample Pearson correlation; `None` if either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // rounding in the mean leaves a tiny spread on constant series
    let floor = |m: f64, v: &[f64]| {
        let scale = v.iter().fold(m.abs(), |a, b| a.max(b.abs()));
        n * (1e-12 * scale).powi(2)
    };
    if sxx <= floor(mx, x) || syy <= floor(my, y) {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Compares an estimate series against ground truth.
///
/// Direction residuals are wrapped to `(−π, π]`; direction correlation is
/// computed on unwrapped series.
pub fn wind_metrics(estimates: &[WindTriple], truth: &[WindTriple]) -> Result<WindMetrics> {
    if estimates.len() != truth.len() {
        return Err(param(format!(
            "{} estimates but {} truth samples",
            estimates.len(),
            truth.len()
        )));
    }
    if estimates.len() < 2 {
        return Err(param("metrics need at least 2 samples"));
    }
    let pairs = || estimates.iter().zip(truth);
    let es: Vec<f64> = estimates.iter().map(|e| e.speed).collect();
    let ts: Vec<f64> = truth.iter().map(|e| e.speed).collect();
    let ed = unwrap_angles(&estimates.iter().map(|e| e.dir).collect::<Vec<_>>());
    let td = unwrap_angles(&truth.iter().map(|e| e.dir).collect::<Vec<_>>());
    Ok(WindMetrics {
        samples: estimates.len(),
        rmse_speed: rmse(pairs().map(|(e, t)| e.speed - t.speed)),
        rmse_dir: rmse(pairs().map(|(e, t)| wrap_pi(e.dir - t.dir))),
        rmse_vspeed: rmse(pairs().map(|(e, t)| e.vspeed - t.vspeed)),
        pearson_speed: pearson(&es, &ts),
        pearson_dir: pearson(&ed, &td),
    })
}
