use nalgebra::Vector3;

use crate::error::{param, Result};
use crate::frames::to_intermediate_frame;

/// Quadratic drag parameters.
///
/// Areas and coefficients are given along the vehicle's heading axes:
/// forward, left/right, and vertical.
#[derive(Debug, Clone, PartialEq)]
pub struct DragSpec {
    /// kg/m³
    pub air_density: f64,
    /// m²
    pub area: Vector3<f64>,
    pub cd: Vector3<f64>,
    /// Horizontal `C_d·A` is scaled by `1 + anisotropy·cos 2β`, with `β` the
    /// airflow direction relative to the heading.
    pub anisotropy: f64,
}

impl Default for DragSpec {
    /// Vehicle-scale frontal areas with the high-drag barrel coefficient horizontally.
    fn default() -> Self {
        Self {
            air_density: 1.225,
            area: Vector3::new(0.12, 0.12, 0.25),
            cd: Vector3::new(1.47, 1.47, 1.0),
            anisotropy: 0.1,
        }
    }
}

impl DragSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.air_density.is_finite() && self.air_density > 0.0) {
            return Err(param(format!("air density must be > 0, got {}", self.air_density)));
        }
        if !self.area.iter().all(|a| a.is_finite() && *a > 0.0) {
            return Err(param("drag areas must be > 0"));
        }
        if !self.cd.iter().all(|c| c.is_finite() && *c > 0.0) {
            return Err(param("drag coefficients must be > 0"));
        }
        if !(self.anisotropy.is_finite() && (0.0..1.0).contains(&self.anisotropy)) {
            return Err(param(format!("anisotropy must be in [0, 1), got {}", self.anisotropy)));
        }
        Ok(())
    }
}

/// Drag force on the vehicle, N, inertial frame.
///
/// `relative_air_velocity` is the air's velocity relative to the vehicle
/// (wind minus ground velocity); the force points the same way.
/// Per heading axis: `½·ρ·‖v‖·v_axis·A_axis·C_d,axis`.
pub fn drag_force(spec: &DragSpec, relative_air_velocity: &Vector3<f64>, heading: f64) -> Vector3<f64> {
    let v = match to_intermediate_frame(relative_air_velocity, heading) {
        Ok(v) => v,
        Err(_) => return Vector3::repeat(f64::NAN),
    };
    let speed = v.norm();
    if speed == 0.0 {
        return Vector3::zeros();
    }
    let h2 = v.x * v.x + v.y * v.y;
    let shape = if h2 > 0.0 {
        1.0 + spec.anisotropy * (v.x * v.x - v.y * v.y) / h2
    } else {
        1.0
    };
    let q = 0.5 * spec.air_density * speed;
    let local = Vector3::new(
        q * v.x * spec.area.x * spec.cd.x * shape,
        q * v.y * spec.area.y * spec.cd.y * shape,
        q * v.z * spec.area.z * spec.cd.z,
    );
    let (s, c) = heading.sin_cos();
    Vector3::new(c * local.x - s * local.y, s * local.x + c * local.y, local.z)
}
