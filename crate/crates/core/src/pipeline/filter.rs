//! Speed-scheduled exponential smoothing of the wind vector.
//!
//! `y ← y + α·(x − y)`. The step gain `α` is small at low wind speed (strong
//! smoothing, better signal-to-noise) and large at high wind speed (less lag).
//! Between the two knots `α` is linear in the raw horizontal speed.

use nalgebra::Vector3;

use crate::error::{param, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    /// Step gain at and below `low_speed_knot`.
    pub low_speed_gain: f64,
    /// Step gain at and above `high_speed_knot`.
    pub high_speed_gain: f64,
    /// m/s
    pub low_speed_knot: f64,
    /// m/s
    pub high_speed_knot: f64,
}

impl Default for FilterConfig {
    /// Tuned for 50 Hz.
    fn default() -> Self {
        Self {
            low_speed_gain: 0.02,
            high_speed_gain: 0.3,
            low_speed_knot: 1.0,
            high_speed_knot: 6.0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, g) in [
            ("low_speed_gain", self.low_speed_gain),
            ("high_speed_gain", self.high_speed_gain),
        ] {
            if !(g > 0.0 && g <= 1.0) {
                return Err(param(format!("filter {name} must be in (0, 1], got {g}")));
            }
        }
        if !(self.low_speed_knot.is_finite() && self.high_speed_knot.is_finite())
            || self.low_speed_knot >= self.high_speed_knot
        {
            return Err(param(format!(
                "filter knots must satisfy low < high, got {} and {}",
                self.low_speed_knot, self.high_speed_knot
            )));
        }
        if self.low_speed_gain >= self.high_speed_gain {
            return Err(param(
                "filter low_speed_gain must be smaller than high_speed_gain (more smoothing at low speed)",
            ));
        }
        Ok(())
    }

    /// Scheduled step gain for a raw horizontal speed.
    pub fn gain_for_speed(&self, speed: f64) -> f64 {
        if !(speed > self.low_speed_knot) {
            self.low_speed_gain
        } else if speed >= self.high_speed_knot {
            self.high_speed_gain
        } else {
            let u = (speed - self.low_speed_knot) / (self.high_speed_knot - self.low_speed_knot);
            self.low_speed_gain + u * (self.high_speed_gain - self.low_speed_gain)
        }
    }
}

/// One smoothing step with a fixed gain.
pub fn smoothing_step(prev: &Vector3<f64>, raw: &Vector3<f64>, alpha: f64) -> Vector3<f64> {
    prev + alpha * (raw - prev)
}

/// One smoothing step with the gain scheduled on the raw horizontal speed.
pub fn dynamic_filter_step(prev: &Vector3<f64>, raw: &Vector3<f64>, config: &FilterConfig) -> Vector3<f64> {
    let alpha = config.gain_for_speed(raw.x.hypot(raw.y));
    smoothing_step(prev, raw, alpha)
}

/// Stateful wrapper; the first input passes through unchanged.
#[derive(Debug, Clone)]
pub struct DynamicFilter {
    config: FilterConfig,
    prev: Option<Vector3<f64>>,
}

impl DynamicFilter {
    pub fn new(config: FilterConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, prev: None })
    }

    pub fn update(&mut self, raw: &Vector3<f64>) -> Vector3<f64> {
        let next = match &self.prev {
            Some(prev) => dynamic_filter_step(prev, raw, &self.config),
            None => *raw,
        };
        self.prev = Some(next);
        next
    }

    pub fn reset(&mut self) {
        self.prev = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fixed_point_and_pass_through() {
        let cfg = FilterConfig::default();
        let v = Vector3::new(0.3, -0.2, 0.1);
        assert_eq!(dynamic_filter_step(&v, &v, &cfg), v);
        let fast = FilterConfig { high_speed_gain: 1.0, ..cfg };
        let raw = Vector3::new(9.0, 0.0, 0.5);
        assert_eq!(dynamic_filter_step(&Vector3::zeros(), &raw, &fast), raw);
    }

    #[test]
    fn quarter_step() {
        let out = smoothing_step(&Vector3::zeros(), &Vector3::x(), 0.25);
        assert_abs_diff_eq!(out, Vector3::new(0.25, 0.0, 0.0));
    }

    #[test]
    fn schedule_shape() {
        let cfg = FilterConfig::default();
        assert_eq!(cfg.gain_for_speed(0.0), 0.02);
        assert_eq!(cfg.gain_for_speed(1.0), 0.02);
        assert_abs_diff_eq!(cfg.gain_for_speed(3.5), 0.16, epsilon = 1e-12);
        assert_eq!(cfg.gain_for_speed(6.0), 0.3);
        assert_eq!(cfg.gain_for_speed(40.0), 0.3);
        assert_eq!(cfg.gain_for_speed(f64::NAN), 0.02);
        let mut last = 0.0;
        for i in 0..100 {
            let g = cfg.gain_for_speed(i as f64 * 0.1);
            assert!(g >= last);
            last = g;
        }
    }

    #[test]
    fn config_validation() {
        let ok = FilterConfig::default();
        ok.validate().unwrap();
        assert!(FilterConfig { low_speed_gain: 0.0, ..ok }.validate().is_err());
        assert!(FilterConfig { high_speed_gain: 1.5, ..ok }.validate().is_err());
        assert!(FilterConfig { low_speed_knot: 7.0, ..ok }.validate().is_err());
        assert!(FilterConfig { low_speed_gain: 0.5, ..ok }.validate().is_err());
    }

    #[test]
    fn stateful_filter_starts_at_first_input() {
        let mut f = DynamicFilter::new(FilterConfig::default()).unwrap();
        let a = Vector3::new(0.5, 0.0, 0.0);
        assert_eq!(f.update(&a), a);
        let b = f.update(&Vector3::zeros());
        assert_abs_diff_eq!(b.x, 0.5 * 0.98, epsilon = 1e-15);
        f.reset();
        assert_eq!(f.update(&Vector3::zeros()), Vector3::zeros());
    }
}
