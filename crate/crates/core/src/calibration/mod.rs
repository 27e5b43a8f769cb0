//! Force-to-wind regression: dataset construction, the horizontal thin-plate
//! spline, the vertical polynomial, and the model document.

mod dataset;
mod document;
mod tps;
mod vertical;

pub use dataset::{
    build_horizontal_dataset, build_vertical_dataset, HorizontalDataset, SweepLabel,
    SweepProtocol, VerticalDataset, VerticalLabel, MIN_WINDOW_SAMPLES, TRANSIENT_TRIM,
};
pub use document::{deserialize_models, serialize_models, ModelSet, FORMAT_VERSION, SUPPORTED_VERSIONS};
pub use tps::{eval_tps, fit_tps, tps_kernel_sq, CalibSample, FitStats, TpsModel};
pub use vertical::{eval_vertical_poly, fit_vertical_poly, VerticalPolyModel};

/// Default thin-plate smoothing parameter (force in newtons).
pub const DEFAULT_LAMBDA: f64 = 1e-3;

/// Default vertical polynomial degree.
pub const DEFAULT_VERTICAL_DEGREE: usize = 3;
