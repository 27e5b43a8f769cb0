use std::f64::consts::TAU;

use nalgebra::Vector3;

use crate::error::{param, Result};

/// Ground-truth wind velocity (the air's velocity in the inertial frame).
#[derive(Debug, Clone, PartialEq)]
pub enum WindFieldSpec {
    Constant(Vector3<f64>),
    /// `mean + amplitude·sin(2πt / period)`.
    Sinusoid {
        mean: Vector3<f64>,
        amplitude: Vector3<f64>,
        period: f64,
    },
    /// Piecewise constant: each `(t_start, velocity)` holds until the next
    /// breakpoint. Calm before the first breakpoint.
    Schedule(Vec<(f64, Vector3<f64>)>),
}

impl Default for WindFieldSpec {
    fn default() -> Self {
        Self::Constant(Vector3::zeros())
    }
}

impl WindFieldSpec {
    /// Horizontal wind of `speed` blowing towards heading `towards` (rad).
    pub fn horizontal(speed: f64, towards: f64) -> Self {
        let (s, c) = towards.sin_cos();
        Self::Constant(Vector3::new(speed * c, speed * s, 0.0))
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &Vector3<f64>| v.iter().all(|x| x.is_finite());
        match self {
            Self::Constant(v) if !finite(v) => Err(param("wind velocity must be finite")),
            Self::Sinusoid { mean, amplitude, period } => {
                if !(finite(mean) && finite(amplitude)) {
                    return Err(param("wind parameters must be finite"));
                }
                if !(period.is_finite() && *period > 0.0) {
                    return Err(param(format!("wind period must be > 0, got {period}")));
                }
                Ok(())
            }
            Self::Schedule(points) => {
                if points.iter().any(|(t, v)| !t.is_finite() || !finite(v)) {
                    return Err(param("wind schedule must be finite"));
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(param("wind schedule breakpoints must strictly increase"));
                }
                Ok(())
            }
            Self::Constant(_) => Ok(()),
        }
    }

    pub fn at(&self, t: f64, _position: &Vector3<f64>) -> Vector3<f64> {
        match self {
            Self::Constant(v) => *v,
            Self::Sinusoid { mean, amplitude, period } => mean + amplitude * (TAU * t / period).sin(),
            Self::Schedule(points) => points
                .iter()
                .take_while(|(start, _)| *start <= t)
                .last()
                .map_or_else(Vector3::zeros, |(_, v)| *v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn evaluation() {
        let p = Vector3::zeros();
        assert_eq!(WindFieldSpec::default().at(3.0, &p), Vector3::zeros());
        let s = WindFieldSpec::Sinusoid {
            mean: Vector3::x(),
            amplitude: Vector3::y(),
            period: 4.0,
        };
        assert_abs_diff_eq!(s.at(1.0, &p), Vector3::new(1.0, 1.0, 0.0), epsilon = 1e-12);
        let sched = WindFieldSpec::Schedule(vec![(1.0, Vector3::x()), (2.0, Vector3::y())]);
        assert_eq!(sched.at(0.5, &p), Vector3::zeros());
        assert_eq!(sched.at(1.0, &p), Vector3::x());
        assert_eq!(sched.at(5.0, &p), Vector3::y());
        assert_abs_diff_eq!(
            WindFieldSpec::horizontal(2.0, std::f64::consts::FRAC_PI_2).at(0.0, &p),
            Vector3::new(0.0, 2.0, 0.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn validation() {
        let bad = WindFieldSpec::Sinusoid {
            mean: Vector3::zeros(),
            amplitude: Vector3::zeros(),
            period: 0.0,
        };
        assert!(bad.validate().is_err());
        let bad = WindFieldSpec::Schedule(vec![(1.0, Vector3::x()), (1.0, Vector3::y())]);
        assert!(bad.validate().is_err());
        assert!(WindFieldSpec::Constant(Vector3::new(f64::NAN, 0.0, 0.0)).validate().is_err());
    }
}
