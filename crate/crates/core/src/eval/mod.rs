//! Open-set split construction, metrics and report emission.

pub mod manifest;

pub use manifest::{DatasetManifest, DefectKind, ManifestRow, Role, Split};
