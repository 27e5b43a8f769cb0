//! Intercept-free polynomial map from vertical force to vertical airspeed.

use nalgebra::{DMatrix, DVector};

use super::tps::FitStats;
use crate::error::{param, Error, Result};

/// `V = Σ_{k=1..K} c_k·f^k`; no constant term, so `V(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalPolyModel {
    /// `coeffs[k - 1]` multiplies `f^k`.
    coeffs: Vec<f64>,
    pub stats: FitStats,
}

impl VerticalPolyModel {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(param("vertical polynomial needs degree >= 1"));
        }
        if !coeffs.iter().all(|c| c.is_finite()) {
            return Err(param("vertical polynomial coefficients must be finite"));
        }
        Ok(Self {
            coeffs,
            stats: FitStats::default(),
        })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// Horner evaluation of `f·(c1 + f·(c2 + …))`.
    pub fn eval(&self, f_ez: f64) -> f64 {
        f_ez * self.coeffs.iter().rev().fold(0.0, |acc, c| acc * f_ez + c)
    }
}

pub fn eval_vertical_poly(model: &VerticalPolyModel, f_ez: f64) -> f64 {
    model.eval(f_ez)
}

/// Least-squares fit of an intercept-free polynomial of degree `degree`.
///
/// `dataset` holds `(vertical force N, vertical air-relative speed m/s)` pairs.
pub fn fit_vertical_poly(dataset: &[(f64, f64)], degree: usize) -> Result<VerticalPolyModel> {
    if degree < 1 {
        return Err(param("vertical polynomial degree must be >= 1"));
    }
    if dataset.iter().any(|(f, v)| !(f.is_finite() && v.is_finite())) {
        return Err(param("vertical calibration data must be finite"));
    }
    let mut distinct: Vec<f64> = dataset.iter().map(|(f, _)| *f).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < degree + 1 {
        return Err(Error::Fit(format!(
            "degree {degree} needs at least {} distinct force values, got {}",
            degree + 1,
            distinct.len()
        )));
    }

    // columns are scaled by s^k so the design stays well conditioned
    let scale = dataset.iter().map(|(f, _)| f.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Fit("vertical design matrix is rank deficient (all forces zero)".into()));
    }
    let rows = dataset.len();
    let design = DMatrix::from_fn(rows, degree, |i, k| (dataset[i].0 / scale).powi(k as i32 + 1));
    let target = DVector::from_iterator(rows, dataset.iter().map(|(_, v)| *v));

    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::Fit(format!(
            "vertical design matrix is rank deficient (singular values {smin:e} / {smax:e})"
        )));
    }
    let scaled = svd
        .solve(&target, 0.0)
        .map_err(|e| Error::Fit(format!("vertical least squares failed: {e}")))?;
    let coeffs = scaled
        .iter()
        .enumerate()
        .map(|(k, c)| c / scale.powi(k as i32 + 1))
        .collect();
    let mut model = VerticalPolyModel::new(coeffs)?;
    let sse: f64 = dataset.iter().map(|(f, v)| (v - model.eval(*f)).powi(2)).sum();
    model.stats = FitStats {
        samples: rows,
        residual_rms: (sse / rows as f64).sqrt(),
    };
    Ok(model)
}
