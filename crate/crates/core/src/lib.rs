//! Wind estimation for multirotor vehicles from onboard state alone.
//!
//! A force-only disturbance observer ([`dob`]) estimates the external force on
//! the airframe from logged acceleration, attitude, and rotor speeds. A
//! thin-plate spline and an odd polynomial ([`calibration`]) map that force to
//! horizontal and vertical air-relative speed, and [`pipeline`] turns the
//! result into a filtered wind vector. [`sim`] provides a quadrotor plant with
//! quadratic drag to generate calibration data and ground truth.
//!
//! The inertial frame is down-positive: gravity acts along `+e₃`.

pub mod calibration;
pub mod dob;
pub mod error;
pub mod frames;
pub mod pipeline;
pub mod sim;
pub mod workflow;

pub use calibration::{
    build_horizontal_dataset, build_vertical_dataset, deserialize_models, fit_tps,
    fit_vertical_poly, serialize_models, CalibSample, ModelSet, SweepProtocol, TpsModel,
    VerticalPolyModel,
};
pub use dob::{dob_run, dob_step, DobConfig, DobState, ForceEstimate};
pub use error::{Error, Result};
pub use frames::{FrameRotation, StateSample, VehicleParams};
pub use pipeline::{
    pipeline_run, wind_metrics, FilterConfig, WindEstimate, WindMetrics, WindPipeline, WindTriple,
};
pub use sim::{
    drag_force, generate_calibration_suite, simulate, DragSpec, NoiseSpec, ScenarioKind,
    ScenarioScript, SimOutput, TruthSample, WindFieldSpec,
};
