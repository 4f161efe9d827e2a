//! Per-point geometric descriptors and their aggregation into the
//! center-feature matrix consumed by bank construction and scoring.

pub mod aggregate;
pub mod fpfh;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geom::cloud::LabeledCloud;
use crate::geom::fps::farthest_point_sample;
use crate::geom::index::SpatialIndex;
use crate::geom::normals::estimate_normals;
use crate::rng::{derive_seed, fnv1a};

pub use aggregate::aggregate_at_centers;
pub use fpfh::{compute_fpfh, compute_multiscale_fpfh, compute_spfh, Spfh};

const FEAT_MAGIC: &[u8; 8] = b"PCADFEAT";
const FEAT_VERSION: u32 = 1;

/// Center-aggregated feature matrix of one cloud: G rows of dimension
/// C1 = 33 × |scales|.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Vec<Vec<f64>>,
    pub center_indices: Vec<usize>,
    pub scales: Vec<usize>,
    pub aggregation_m: usize,
    pub sample_id: String,
}

impl FeatureMatrix {
    pub fn g(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map(|r| r.len()).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.len() != self.center_indices.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rows but {} center indices",
                self.rows.len(),
                self.center_indices.len()
            )));
        }
        let dim = self.dim();
        if dim != 33 * self.scales.len() {
            return Err(Error::InvalidArgument(format!(
                "row dimension {dim} does not match 33 x {} scales",
                self.scales.len()
            )));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has dimension {} (expected {dim})",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has a non-finite or negative entry"
                )));
            }
        }
        Ok(())
    }
}

/// Full feature extraction for one cloud: estimate normals, compute
/// multi-scale descriptors, sample G centers by FPS, mean-pool the m
/// nearest points of each center. Pure in `(cloud, cfg)`; the FPS seed
/// derives from the master seed and the sample id, so reruns are
/// bit-identical.
pub fn extract_features(cloud: &LabeledCloud, cfg: &RunConfig) -> Result<FeatureMatrix> {
    cfg.validate()?;
    let with_normals = estimate_normals(cloud, cfg.normal_k)?;
    let per_point = compute_multiscale_fpfh(&with_normals, &cfg.scales)?;

    let g = cfg.centers_g.min(cloud.len());
    let fps_seed = derive_seed(cfg.seed, "fps", fnv1a(cloud.sample_id.as_bytes()));
    let centers = farthest_point_sample(cloud, g, fps_seed)?;

    let index = SpatialIndex::build(&cloud.points)?;
    let rows = aggregate_at_centers(&per_point, cloud, &index, &centers, cfg.aggregation_m)?;

    let fm = FeatureMatrix {
        rows,
        center_indices: centers,
        scales: cfg.scales.clone(),
        aggregation_m: cfg.aggregation_m,
        sample_id: cloud.sample_id.clone(),
    };
    fm.validate()?;
    Ok(fm)
}

/// Write the binary feature dump: magic, version, G, C1, G·C1 f32 values
/// row-major, then G u64 center indices. Values are quantized to f32.
pub fn save_features(fm: &FeatureMatrix, path: &Path) -> Result<()> {
    fm.validate()?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    w.write_all(FEAT_MAGIC).map_err(io)?;
    w.write_u32::<LittleEndian>(FEAT_VERSION).map_err(io)?;
    w.write_u64::<LittleEndian>(fm.g() as u64).map_err(io)?;
    w.write_u32::<LittleEndian>(fm.dim() as u32).map_err(io)?;
    for row in &fm.rows {
        for &v in row {
            w.write_f32::<LittleEndian>(v as f32).map_err(io)?;
        }
    }
    for &c in &fm.center_indices {
        w.write_u64::<LittleEndian>(c as u64).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Read a feature dump back. Row values are the stored f32s widened to f64.
pub fn load_features(path: &Path, sample_id: &str) -> Result<FeatureMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let trunc = |msg: &str| Error::Truncated {
        path: path.to_path_buf(),
        msg: msg.into(),
    };

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| trunc("missing magic"))?;
    if &magic != FEAT_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: String::from_utf8_lossy(FEAT_MAGIC).into_owned(),
        });
    }
    let version = r
        .read_u32::<LittleEndian>()
        .map_err(|_| trunc("missing version"))?;
    if version != FEAT_VERSION {
        return Err(Error::BadVersion {
            path: path.to_path_buf(),
            found: version,
            expected: FEAT_VERSION,
        });
    }
    let g = r.read_u64::<LittleEndian>().map_err(|_| trunc("missing G"))? as usize;
    let dim = r
        .read_u32::<LittleEndian>()
        .map_err(|_| trunc("missing C1"))? as usize;
    if dim % 33 != 0 || dim == 0 {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            msg: format!("C1={dim} is not a positive multiple of 33"),
        });
    }
    let mut rows = Vec::with_capacity(g);
    for i in 0..g {
        let mut row = Vec::with_capacity(dim);
        for _ in 0..dim {
            row.push(
                r.read_f32::<LittleEndian>()
                    .map_err(|_| trunc(&format!("row {i} cut short")))? as f64,
            );
        }
        rows.push(row);
    }
    let mut centers = Vec::with_capacity(g);
    for i in 0..g {
        centers.push(
            r.read_u64::<LittleEndian>()
                .map_err(|_| trunc(&format!("center index {i} missing")))? as usize,
        );
    }
    Ok(FeatureMatrix {
        rows,
        center_indices: centers,
        // Scale list is not persisted; reconstruct the implied count.
        scales: vec![0; dim / 33],
        aggregation_m: 0,
        sample_id: sample_id.to_string(),
    })
}
