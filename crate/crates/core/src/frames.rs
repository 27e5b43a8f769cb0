//! Coordinate frames, the translational vehicle constants, and the thrust model.
//!
//! Three frames are used throughout the crate:
//!
//! - the inertial frame, with a **down-positive** z axis (gravity acts along +z);
//! - the body frame, attached to the vehicle, related to the inertial frame by
//!   [`FrameRotation`];
//! - the intermediate frame, which is the inertial frame yawed about z by the
//!   desired heading `psi_d`. Force-to-wind calibration is expressed there.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};

use crate::error::{param, Error, Result};

/// Standard gravitational acceleration used by [`VehicleParams::default`].
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Default thrust polynomial `(quadratic, linear, constant)` per rotor, in newtons.
pub const DEFAULT_THRUST_COEFFS: [f64; 3] = [207.0, 11.34, 0.01315];

/// Default rotor speed normalization: `1 / max_rpm = 1.047e-4`.
pub const DEFAULT_MAX_RPM: f64 = 1.0 / 1.047e-4;

/// Upper end of the normalized speed range covered by the thrust-stand data.
///
/// Speeds above this are extrapolated by the polynomial but are not rejected.
pub const THRUST_CALIBRATION_LIMIT: f64 = 0.38;

const ORTHO_TOL: f64 = 1e-9;

/// A proper rotation (orthonormal, determinant +1).
///
/// Used both for body-to-inertial attitude and for intermediate-to-inertial yaw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRotation(Rotation3<f64>);

impl FrameRotation {
    pub fn identity() -> Self {
        Self(Rotation3::identity())
    }

    /// Validates `m` as a rotation matrix: `mᵀm = I` and `det m = 1` within 1e-9.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if !m.iter().all(|x| x.is_finite()) {
            return Err(param("rotation matrix has non-finite entries"));
        }
        let gram = m.transpose() * m;
        let off = (gram - Matrix3::identity()).amax();
        if off > ORTHO_TOL {
            return Err(param(format!(
                "rotation matrix is not orthonormal (max |MᵀM - I| = {off:e})"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ORTHO_TOL {
            return Err(param(format!("rotation matrix determinant {det} is not +1")));
        }
        Ok(Self(Rotation3::from_matrix_unchecked(m)))
    }

    /// Z-Y-X Euler angles: yaw about z, then pitch about y, then roll about x.
    pub fn from_euler_zyx(roll: f64, pitch: f64, yaw: f64) -> Result<Self> {
        if !(roll.is_finite() && pitch.is_finite() && yaw.is_finite()) {
            return Err(param("Euler angles must be finite"));
        }
        Ok(Self(Rotation3::from_euler_angles(roll, pitch, yaw)))
    }

    /// Builds a rotation from a unit quaternion `(w, x, y, z)`; the input is renormalized.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let q = nalgebra::Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(param("attitude quaternion has zero or non-finite norm"));
        }
        Ok(Self(UnitQuaternion::from_quaternion(q).to_rotation_matrix()))
    }

    /// Quaternion `(w, x, y, z)` with non-negative `w`.
    pub fn to_quaternion(&self) -> [f64; 4] {
        let q = UnitQuaternion::from_rotation_matrix(&self.0);
        let (w, i, j, k) = (q.w, q.i, q.j, q.k);
        if w < 0.0 {
            [-w, -i, -j, -k]
        } else {
            [w, i, j, k]
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        self.0.matrix()
    }

    /// Third column: the body z axis expressed in the target frame.
    pub fn z_axis(&self) -> Vector3<f64> {
        self.0.matrix().column(2).into_owned()
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    /// Heading of the body x axis projected onto the horizontal plane.
    pub fn yaw(&self) -> f64 {
        self.0.euler_angles().2
    }
}

impl Default for FrameRotation {
    fn default() -> Self {
        Self::identity()
    }
}

/// Translational vehicle constants and the per-rotor thrust polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// m/s²
    pub gravity: f64,
    /// Per-rotor thrust `c2·ω² + c1·ω + c0` as `[c2, c1, c0]`, newtons.
    pub thrust_coeffs: [f64; 3],
    pub rotor_count: usize,
    /// RPM that maps to a normalized speed of 1.
    pub max_rpm: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 6.3,
            gravity: STANDARD_GRAVITY,
            thrust_coeffs: DEFAULT_THRUST_COEFFS,
            rotor_count: 4,
            max_rpm: DEFAULT_MAX_RPM,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(param(format!("mass must be > 0, got {}", self.mass)));
        }
        if !(self.gravity.is_finite() && self.gravity > 0.0) {
            return Err(param(format!("gravity must be > 0, got {}", self.gravity)));
        }
        if self.rotor_count < 1 {
            return Err(param("rotor_count must be >= 1"));
        }
        if !self.thrust_coeffs.iter().all(|c| c.is_finite()) {
            return Err(param("thrust coefficients must be finite"));
        }
        if !(self.max_rpm.is_finite() && self.max_rpm > 0.0) {
            return Err(param(format!("max_rpm must be > 0, got {}", self.max_rpm)));
        }
        Ok(())
    }

    /// Converts an RPM reading to the normalized speed used by the thrust model.
    pub fn normalize_rpm(&self, rpm: f64) -> f64 {
        rpm / self.max_rpm
    }

    /// Thrust of a single rotor at normalized speed `omega`, no range check.
    pub fn rotor_thrust(&self, omega: f64) -> f64 {
        let [c2, c1, c0] = self.thrust_coeffs;
        (c2 * omega + c1) * omega + c0
    }

    /// Total thrust when the envelope is used evenly: every rotor at `omega`.
    pub fn max_total_thrust(&self) -> f64 {
        self.rotor_count as f64 * self.rotor_thrust(1.0)
    }

    /// Inverts the per-rotor polynomial, taking the non-negative root.
    ///
    /// Returns `None` when `thrust` is not reachable for `omega ∈ [0, 1]`.
    pub fn rotor_speed_for_thrust(&self, thrust: f64) -> Option<f64> {
        let [c2, c1, c0] = self.thrust_coeffs;
        let omega = if c2.abs() < f64::EPSILON {
            if c1.abs() < f64::EPSILON {
                return None;
            }
            (thrust - c0) / c1
        } else {
            let disc = c1 * c1 - 4.0 * c2 * (c0 - thrust);
            if disc < 0.0 {
                return None;
            }
            (-c1 + disc.sqrt()) / (2.0 * c2)
        };
        (omega.is_finite() && (0.0..=1.0).contains(&omega)).then_some(omega)
    }
}

/// Total thrust `Σ (c2·ω² + c1·ω + c0)` over all rotors, newtons.
pub fn thrust_from_rotor_speeds(params: &VehicleParams, omegas: &[f64]) -> Result<f64> {
    if omegas.len() != params.rotor_count {
        return Err(param(format!(
            "expected {} rotor speeds, got {}",
            params.rotor_count,
            omegas.len()
        )));
    }
    let mut total = 0.0;
    for (index, &w) in omegas.iter().enumerate() {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::OutOfCalibrationRange { index, value: w });
        }
        total += params.rotor_thrust(w);
    }
    Ok(total)
}

/// Rotation about the inertial z axis by `psi_d`; maps intermediate-frame vectors
/// into the inertial frame.
pub fn yaw_rotation(psi_d: f64) -> Result<FrameRotation> {
    if !psi_d.is_finite() {
        return Err(param("yaw angle must be finite"));
    }
    Ok(FrameRotation(Rotation3::from_axis_angle(
        &Vector3::z_axis(),
        psi_d,
    )))
}

/// Expresses an inertial-frame vector in the intermediate frame yawed by `psi_d`.
pub fn to_intermediate_frame(v_inertial: &Vector3<f64>, psi_d: f64) -> Result<Vector3<f64>> {
    crate::error::ensure_finite3("vector", v_inertial)?;
    let (s, c) = psi_d.sin_cos();
    if !(s.is_finite() && c.is_finite()) {
        return Err(param("yaw angle must be finite"));
    }
    Ok(Vector3::new(
        c * v_inertial.x + s * v_inertial.y,
        -s * v_inertial.x + c * v_inertial.y,
        v_inertial.z,
    ))
}

/// Inverse of [`to_intermediate_frame`].
pub fn from_intermediate_frame(v_intermediate: &Vector3<f64>, psi_d: f64) -> Result<Vector3<f64>> {
    crate::error::ensure_finite3("vector", v_intermediate)?;
    Ok(yaw_rotation(psi_d)?.apply(v_intermediate))
}

/// One timestamped record of vehicle state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSample {
    /// s
    pub t: f64,
    /// Body to inertial.
    pub attitude: FrameRotation,
    /// Inertial acceleration, m/s².
    pub accel: Vector3<f64>,
    /// Inertial velocity, m/s.
    pub velocity: Vector3<f64>,
    /// Inertial position, m.
    pub position: Vector3<f64>,
    /// Normalized rotor speeds in [0, 1].
    pub rotor_norm_speeds: Vec<f64>,
    /// Desired yaw defining the intermediate frame, rad.
    pub desired_yaw: f64,
}

impl StateSample {
    /// Checks finiteness and the rotor speed range.
    pub fn validate(&self) -> Result<()> {
        if !self.t.is_finite() {
            return Err(param("sample time must be finite"));
        }
        crate::error::ensure_finite3("accel", &self.accel)?;
        crate::error::ensure_finite3("velocity", &self.velocity)?;
        crate::error::ensure_finite3("position", &self.position)?;
        if !self.desired_yaw.is_finite() {
            return Err(param("desired yaw must be finite"));
        }
        for (index, &w) in self.rotor_norm_speeds.iter().enumerate() {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::OutOfCalibrationRange { index, value: w });
            }
        }
        Ok(())
    }
}

/// Checks that sample times strictly increase.
pub fn check_monotonic<T>(items: &[T], time: impl Fn(&T) -> f64) -> Result<()> {
    for (i, pair) in items.windows(2).enumerate() {
        let (a, b) = (time(&pair[0]), time(&pair[1]));
        if !(b > a) {
            return Err(Error::Stream {
                index: i + 1,
                reason: format!("timestamp {b} does not follow {a}"),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn thrust_at_rest_is_constant_terms() {
        let p = VehicleParams::default();
        let t = thrust_from_rotor_speeds(&p, &[0.0; 4]).unwrap();
        assert_abs_diff_eq!(t, 0.0526, epsilon = 1e-12);
    }

    #[test]
    fn thrust_single_rotor_at_calibration_limit() {
        let p = VehicleParams::default();
        let t = thrust_from_rotor_speeds(&p, &[0.38, 0.0, 0.0, 0.0]).unwrap();
        // 207·0.1444 + 11.34·0.38 + 4·0.01315 = 29.8908 + 4.3092 + 0.0526
        assert_abs_diff_eq!(t, 34.2526, epsilon = 1e-9);
    }

    #[test]
    fn zero_polynomial_gives_zero_thrust() {
        let p = VehicleParams {
            thrust_coeffs: [0.0; 3],
            ..VehicleParams::default()
        };
        assert_eq!(thrust_from_rotor_speeds(&p, &[0.3, 0.9, 0.1, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn thrust_rejects_bad_inputs() {
        let p = VehicleParams::default();
        assert!(matches!(
            thrust_from_rotor_speeds(&p, &[0.1; 3]),
            Err(Error::Parameter(_))
        ));
        assert_eq!(
            thrust_from_rotor_speeds(&p, &[0.1, 1.2, 0.1, 0.1]),
            Err(Error::OutOfCalibrationRange { index: 1, value: 1.2 })
        );
        assert!(thrust_from_rotor_speeds(&p, &[0.1, -0.01, 0.1, 0.1]).is_err());
    }

    #[test]
    fn rpm_normalization_matches_default_scale() {
        let p = VehicleParams::default();
        assert_abs_diff_eq!(p.normalize_rpm(3650.0), 3650.0 * 1.047e-4, epsilon = 1e-12);
    }

    #[test]
    fn rotor_speed_inverse() {
        let p = VehicleParams::default();
        for &w in &[0.0, 0.05, 0.247, 0.38, 0.99] {
            let t = p.rotor_thrust(w);
            assert_abs_diff_eq!(p.rotor_speed_for_thrust(t).unwrap(), w, epsilon = 1e-12);
        }
        assert!(p.rotor_speed_for_thrust(p.rotor_thrust(1.0) + 1.0).is_none());
        assert!(p.rotor_speed_for_thrust(0.0).is_none());
    }

    #[test]
    fn yaw_rotation_cases() {
        assert_eq!(yaw_rotation(0.0).unwrap().matrix(), &Matrix3::identity());
        let v = yaw_rotation(FRAC_PI_2).unwrap().apply(&Vector3::x());
        assert_abs_diff_eq!(v, Vector3::y(), epsilon = 1e-12);
        let r = yaw_rotation(0.3).unwrap().compose(&yaw_rotation(-0.3).unwrap());
        assert_abs_diff_eq!(*r.matrix(), Matrix3::identity(), epsilon = 1e-12);
        assert!(yaw_rotation(f64::NAN).is_err());
        assert!(yaw_rotation(f64::INFINITY).is_err());
    }

    #[test]
    fn intermediate_frame_cases() {
        let down = Vector3::new(0.0, 0.0, -5.0);
        for psi in [0.0, 1.0, -2.5, PI] {
            assert_eq!(to_intermediate_frame(&down, psi).unwrap(), down);
        }
        let v = to_intermediate_frame(&Vector3::x(), FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(v, -Vector3::y(), epsilon = 1e-12);
        let w = Vector3::new(1.5, -2.0, 0.7);
        let back = yaw_rotation(0.8)
            .unwrap()
            .apply(&to_intermediate_frame(&w, 0.8).unwrap());
        assert_abs_diff_eq!(back, w, epsilon = 1e-12);
        assert!(to_intermediate_frame(&Vector3::new(f64::NAN, 0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn rotation_validation() {
        let mut m = Matrix3::identity();
        m[(0, 0)] = -1.0;
        assert!(FrameRotation::from_matrix(m).is_err(), "reflection accepted");
        m[(0, 0)] = 1.01;
        assert!(FrameRotation::from_matrix(m).is_err());
        let r = FrameRotation::from_euler_zyx(0.1, -0.2, 0.3).unwrap();
        assert!(FrameRotation::from_matrix(*r.matrix()).is_ok());
    }

    #[test]
    fn euler_zyx_convention() {
        let r = FrameRotation::from_euler_zyx(0.1, -0.2, 0.3).unwrap();
        let expected = Rotation3::from_axis_angle(&Vector3::z_axis(), 0.3)
            * Rotation3::from_axis_angle(&Vector3::y_axis(), -0.2)
            * Rotation3::from_axis_angle(&Vector3::x_axis(), 0.1);
        assert_abs_diff_eq!(*r.matrix(), *expected.matrix(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.yaw(), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn quaternion_round_trip() {
        let r = FrameRotation::from_euler_zyx(0.4, 0.1, -2.0).unwrap();
        let [w, x, y, z] = r.to_quaternion();
        let back = FrameRotation::from_quaternion(w, x, y, z).unwrap();
        assert_abs_diff_eq!(*back.matrix(), *r.matrix(), epsilon = 1e-12);
        assert!(FrameRotation::from_quaternion(0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn monotonic_check_reports_index() {
        let ts = [0.0, 0.1, 0.1, 0.3];
        assert_eq!(
            check_monotonic(&ts, |t| *t).unwrap_err(),
            Error::Stream {
                index: 2,
                reason: "timestamp 0.1 does not follow 0.1".into()
            }
        );
    }
}
