//! Open-set supervised anomaly detection for industrial point clouds.
//!
//! The pipeline scores a test cloud by its distance to two empirical
//! feature supports: a normal memory bank built from defect-free training
//! samples and an anomalous bank built from a few labeled defects plus
//! synthesized ones, refined by correspondence subsampling so the two
//! supports stop overlapping. Features are multi-scale fast point feature
//! histograms aggregated at farthest-point-sampled centers.
//!
//! Modules follow the pipeline order: [`geom`] (clouds, k-NN, normals,
//! FPS), [`features`] (descriptors), [`synth`] (defect synthesis and the
//! bundled benchmark generator), [`support`] (memory banks), [`scoring`]
//! (reweighted dual-distribution scores) and [`eval`] (splits, metrics,
//! reports). [`config::RunConfig`] carries every knob; all randomness
//! derives from its single master seed.

pub mod config;
pub mod error;
pub mod eval;
pub mod features;
pub mod geom;
pub mod rng;
pub mod synth;

pub use config::{RunConfig, Stage, Strategy};
pub use error::{Error, Result};
pub use features::{extract_features, FeatureMatrix};
pub use eval::{DatasetManifest, DefectKind};
pub use geom::{estimate_normals, farthest_point_sample, LabeledCloud, SpatialIndex};
pub use synth::{gen_benchmark, gen_shape, synthesize_anomaly, BenchmarkSpec, DefectSpec, ShapeSpec};
