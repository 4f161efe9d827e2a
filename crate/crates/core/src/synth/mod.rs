//! Anomaly synthesis and the parametric benchmark generator.

pub mod benchmark;
pub mod defect;
pub mod shapes;

pub use benchmark::{gen_benchmark, BenchmarkSpec, CategorySpec, GenStats};
pub use defect::{synthesize_anomaly, DefectSpec};
pub use shapes::{gen_shape, median_nn_spacing, Primitive, ShapeSpec};
