//! Two-dimensional thin-plate spline regression.
//!
//! `Z(m, n) = Σ cᵢ·φ(‖(m, n) − xᵢ‖) + a0 + a1·m + a2·n` with `φ(r) = r²·ln r`
//! and `φ(0) = 0`. Fitting solves the augmented system
//!
//! ```text
//! [ Φ + λI   P ] [c]   [V]
//! [ Pᵀ       0 ] [a] = [0]
//! ```
//!
//! where `Φᵢⱼ = φ(‖xᵢ − xⱼ‖)` and the rows of `P` are `(1, mᵢ, nᵢ)`.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{param, Error, Result};

/// One averaged training point in force space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibSample {
    /// N
    pub force_x_comp: f64,
    /// N
    pub force_y_comp: f64,
    /// Horizontal air-relative speed label, m/s.
    pub wind_speed_h: f64,
}

impl CalibSample {
    pub fn validate(&self) -> Result<()> {
        if !(self.force_x_comp.is_finite() && self.force_y_comp.is_finite()) {
            return Err(param("calibration sample force components must be finite"));
        }
        if !(self.wind_speed_h.is_finite() && self.wind_speed_h >= 0.0) {
            return Err(param(format!(
                "calibration wind speed must be >= 0, got {}",
                self.wind_speed_h
            )));
        }
        Ok(())
    }
}

/// Training summary stored alongside a fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitStats {
    /// Number of samples passed to the fit (before duplicate merging).
    pub samples: usize,
    /// Root-mean-square training residual, m/s.
    pub residual_rms: f64,
}

/// The radial kernel `r²·ln r`, written in terms of the squared distance.
#[inline]
pub fn tps_kernel_sq(d2: f64) -> f64 {
    if d2 > 0.0 {
        0.5 * d2 * d2.ln()
    } else {
        0.0
    }
}

/// Fitted thin-plate spline.
#[derive(Debug, Clone, PartialEq)]
pub struct TpsModel {
    centers: Vec<[f64; 2]>,
    kernel_weights: Vec<f64>,
    affine: [f64; 3],
    lambda: f64,
    pub stats: FitStats,
}

impl TpsModel {
    /// Assembles a model from its parts. Only shapes and finiteness are checked;
    /// use [`TpsModel::side_condition_residual`] to inspect the side conditions.
    pub fn from_parts(
        centers: Vec<[f64; 2]>,
        kernel_weights: Vec<f64>,
        affine: [f64; 3],
        lambda: f64,
    ) -> Result<Self> {
        if centers.len() != kernel_weights.len() {
            return Err(param(format!(
                "{} centers but {} kernel weights",
                centers.len(),
                kernel_weights.len()
            )));
        }
        let finite = centers.iter().flatten().all(|x| x.is_finite())
            && kernel_weights.iter().all(|x| x.is_finite())
            && affine.iter().all(|x| x.is_finite());
        if !finite {
            return Err(param("model parameters must be finite"));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(param(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self {
            centers,
            kernel_weights,
            affine,
            lambda,
            stats: FitStats::default(),
        })
    }

    pub fn centers(&self) -> &[[f64; 2]] {
        &self.centers
    }

    pub fn kernel_weights(&self) -> &[f64] {
        &self.kernel_weights
    }

    pub fn affine(&self) -> [f64; 3] {
        self.affine
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Largest of `|Σcᵢ|`, `|Σcᵢmᵢ|`, `|Σcᵢnᵢ|`.
    pub fn side_condition_residual(&self) -> f64 {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for (c, x) in self.kernel_weights.iter().zip(&self.centers) {
            s0 += c;
            s1 += c * x[0];
            s2 += c * x[1];
        }
        s0.abs().max(s1.abs()).max(s2.abs())
    }

    /// Unclamped spline value.
    pub fn eval_raw(&self, m: f64, n: f64) -> f64 {
        let [a0, a1, a2] = self.affine;
        let bend: f64 = self
            .centers
            .iter()
            .zip(&self.kernel_weights)
            .map(|(x, c)| {
                let (dm, dn) = (m - x[0], n - x[1]);
                c * tps_kernel_sq(dm * dm + dn * dn)
            })
            .sum();
        bend + a0 + a1 * m + a2 * n
    }

    /// Horizontal speed, clamped below at zero.
    pub fn eval(&self, m: f64, n: f64) -> f64 {
        self.eval_raw(m, n).max(0.0)
    }
}

/// Evaluates a model at `(force_x_comp, force_y_comp)`, clamped at 0 m/s.
pub fn eval_tps(model: &TpsModel, force_x_comp: f64, force_y_comp: f64) -> f64 {
    model.eval(force_x_comp, force_y_comp)
}

/// Merges points whose coordinates coincide (within a relative 1e-9) by
/// averaging their targets.
fn merge_duplicates(data: &[CalibSample]) -> Vec<([f64; 2], f64)> {
    let scale = data
        .iter()
        .map(|s| s.force_x_comp.abs().max(s.force_y_comp.abs()))
        .fold(1.0_f64, f64::max);
    let tol2 = (1e-9 * scale).powi(2);
    let mut groups: Vec<([f64; 2], f64, usize)> = Vec::with_capacity(data.len());
    for s in data {
        let p = [s.force_x_comp, s.force_y_comp];
        let hit = groups.iter_mut().find(|(q, _, _)| {
            let (dm, dn) = (p[0] - q[0], p[1] - q[1]);
            dm * dm + dn * dn <= tol2
        });
        match hit {
            Some((_, sum, count)) => {
                *sum += s.wind_speed_h;
                *count += 1;
            }
            None => groups.push((p, s.wind_speed_h, 1)),
        }
    }
    groups
        .into_iter()
        .map(|(p, sum, count)| (p, sum / count as f64))
        .collect()
}

fn check_not_collinear(points: &[([f64; 2], f64)]) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::Fit(format!(
            "thin-plate spline needs at least 3 distinct centers, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (p, _)| (a + p[0] / n, b + p[1] / n));
    let mut cov = Matrix2::zeros();
    for (p, _) in points {
        let d = nalgebra::Vector2::new(p[0] - mx, p[1] - my);
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if hi <= 0.0 || lo <= 1e-12 * hi {
        return Err(Error::Fit(
            "thin-plate spline centers are collinear; the affine part is undetermined".into(),
        ));
    }
    Ok(())
}

/// Fits a regularized thin-plate spline to `dataset`.
pub fn fit_tps(dataset: &[CalibSample], lambda: f64) -> Result<TpsModel> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(param(format!("lambda must be >= 0, got {lambda}")));
    }
    for s in dataset {
        s.validate()?;
    }
    let points = merge_duplicates(dataset);
    check_not_collinear(&points)?;

    let n = points.len();
    let size = n + 3;
    let mut a = DMatrix::<f64>::zeros(size, size);
    let mut rhs = DVector::<f64>::zeros(size);
    for (i, (pi, vi)) in points.iter().enumerate() {
        for (j, (pj, _)) in points.iter().enumerate().skip(i + 1) {
            let (dm, dn) = (pi[0] - pj[0], pi[1] - pj[1]);
            let k = tps_kernel_sq(dm * dm + dn * dn);
            a[(i, j)] = k;
            a[(j, i)] = k;
        }
        a[(i, i)] = lambda;
        for (col, v) in [1.0, pi[0], pi[1]].into_iter().enumerate() {
            a[(i, n + col)] = v;
            a[(n + col, i)] = v;
        }
        rhs[i] = *vi;
    }

    let sol = a
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Fit("thin-plate spline system is singular".into()))?;
    let residual = (&a * &sol - &rhs).amax();
    let scale = rhs.amax().max(1.0);
    if !residual.is_finite() || residual > 1e-6 * scale {
        return Err(Error::Fit(format!(
            "thin-plate spline system is ill-conditioned (solve residual {residual:e})"
        )));
    }

    let mut model = TpsModel {
        centers: points.iter().map(|(p, _)| *p).collect(),
        kernel_weights: sol.rows(0, n).iter().copied().collect(),
        affine: [sol[n], sol[n + 1], sol[n + 2]],
        lambda,
        stats: FitStats::default(),
    };
    let sse: f64 = dataset
        .iter()
        .map(|s| (s.wind_speed_h - model.eval_raw(s.force_x_comp, s.force_y_comp)).powi(2))
        .sum();
    model.stats = FitStats {
        samples: dataset.len(),
        residual_rms: (sse / dataset.len() as f64).sqrt(),
    };
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample(m: f64, n: f64, v: f64) -> CalibSample {
        CalibSample {
            force_x_comp: m,
            force_y_comp: n,
            wind_speed_h: v,
        }
    }

    #[test]
    fn kernel_values() {
        assert_eq!(tps_kernel_sq(0.0), 0.0);
        assert_abs_diff_eq!(tps_kernel_sq(1.0), 0.0, epsilon = 1e-15);
        let e = std::f64::consts::E;
        // r = e → e²·ln e = e²
        assert_abs_diff_eq!(tps_kernel_sq(e * e), e * e, epsilon = 1e-12);
    }

    #[test]
    fn affine_triangle_has_no_bending() {
        let f = |m: f64, n: f64| 2.0 + 0.5 * m - n;
        let data = [(0.0, 0.0), (3.0, 0.5), (1.0, 2.0)].map(|(m, n)| sample(m, n, f(m, n)));
        let model = fit_tps(&data, 0.0).unwrap();
        for c in model.kernel_weights() {
            assert!(c.abs() < 1e-8);
        }
        let [a0, a1, a2] = model.affine();
        assert_abs_diff_eq!(a0, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(a1, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(a2, -1.0, epsilon = 1e-10);
    }

    #[test]
    fn pure_affine_model_evaluation() {
        let model = TpsModel::from_parts(vec![[1.0, 1.0]], vec![0.0], [0.0, 1.0, 0.0], 0.0).unwrap();
        assert_eq!(eval_tps(&model, 3.5, 99.0), 3.5);
    }

    #[test]
    fn single_center_at_distance_e() {
        let model = TpsModel::from_parts(vec![[0.0, 0.0]], vec![1.0], [0.0; 3], 0.0).unwrap();
        let e = std::f64::consts::E;
        assert_abs_diff_eq!(model.eval_raw(e, 0.0), 7.38905609893065, epsilon = 1e-12);
        assert_abs_diff_eq!(model.eval_raw(0.0, 0.0), 0.0);
    }

    #[test]
    fn interpolates_ten_points() {
        let pts = [
            (0.1, 0.2, 1.0),
            (1.3, -0.4, 2.5),
            (-0.8, 0.9, 0.7),
            (2.2, 1.1, 3.0),
            (-1.5, -1.2, 1.9),
            (0.4, 2.6, 2.2),
            (3.1, -2.0, 4.4),
            (-2.7, 0.3, 2.8),
            (1.9, 3.3, 3.7),
            (-0.2, -3.1, 3.3),
        ];
        let data: Vec<_> = pts.iter().map(|&(m, n, v)| sample(m, n, v)).collect();
        let model = fit_tps(&data, 0.0).unwrap();
        for s in &data {
            assert_abs_diff_eq!(
                model.eval_raw(s.force_x_comp, s.force_y_comp),
                s.wind_speed_h,
                epsilon = 1e-8
            );
        }
        assert!(model.side_condition_residual() < 1e-8);
        assert!(model.stats.residual_rms < 1e-8);
        assert_eq!(model.stats.samples, 10);
    }

    #[test]
    fn clamps_negative_output() {
        let model = TpsModel::from_parts(vec![], vec![], [-1.0, 0.0, 0.0], 0.0).unwrap();
        assert_eq!(model.eval(0.0, 0.0), 0.0);
        assert_eq!(model.eval_raw(0.0, 0.0), -1.0);
    }

    #[test]
    fn degenerate_inputs() {
        let line: Vec<_> = (0..5).map(|i| sample(i as f64, 2.0 * i as f64, 1.0)).collect();
        let err = fit_tps(&line, 0.0).unwrap_err();
        assert!(matches!(&err, Error::Fit(msg) if msg.contains("collinear")), "{err}");

        let two = [sample(0.0, 0.0, 1.0), sample(1.0, 0.0, 2.0), sample(1.0, 0.0, 4.0)];
        assert!(matches!(fit_tps(&two, 0.0), Err(Error::Fit(_))));

        assert!(fit_tps(&[sample(0.0, 0.0, -1.0)], 0.0).is_err());
        assert!(fit_tps(&line, -1.0).is_err());
    }

    #[test]
    fn duplicates_are_merged_by_average() {
        let data = [
            sample(0.0, 0.0, 1.0),
            sample(0.0, 0.0, 3.0),
            sample(1.0, 0.0, 2.0),
            sample(0.0, 1.0, 2.0),
        ];
        let model = fit_tps(&data, 0.0).unwrap();
        assert_eq!(model.centers().len(), 3);
        assert_abs_diff_eq!(model.eval_raw(0.0, 0.0), 2.0, epsilon = 1e-10);
    }
}
