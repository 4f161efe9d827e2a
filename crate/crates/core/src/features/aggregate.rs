//! Aggregation of per-point descriptors at sampled centers.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::cloud::LabeledCloud;
use crate::geom::index::SpatialIndex;

/// Mean-pool the per-point feature vectors of the `m` nearest points of
/// each center (the center itself is at distance zero, so it participates).
/// Rows are accumulated in ascending (distance, index) order so results are
/// scheduling-independent.
pub fn aggregate_at_centers(
    per_point: &[Vec<f64>],
    cloud: &LabeledCloud,
    index: &SpatialIndex,
    centers: &[usize],
    m: usize,
) -> Result<Vec<Vec<f64>>> {
    if m == 0 {
        return Err(Error::InvalidArgument("aggregation m must be >= 1".into()));
    }
    if m > cloud.len() {
        return Err(Error::InvalidArgument(format!(
            "aggregation m={m} exceeds point count {}",
            cloud.len()
        )));
    }
    if per_point.len() != cloud.len() {
        return Err(Error::InvalidArgument(format!(
            "{} feature rows for {} points",
            per_point.len(),
            cloud.len()
        )));
    }
    if let Some(&c) = centers.iter().find(|&&c| c >= cloud.len()) {
        return Err(Error::InvalidArgument(format!(
            "center index {c} out of range for cloud of {}",
            cloud.len()
        )));
    }
    let dim = per_point.first().map(|r| r.len()).unwrap_or(0);

    centers
        .par_iter()
        .map(|&c| {
            let neigh = index.knn(&cloud.points[c], m)?;
            let mut acc = vec![0.0f64; dim];
            for (i, _) in neigh {
                let row = &per_point[i];
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += v;
                }
            }
            let inv = 1.0 / m as f64;
            for a in &mut acc {
                *a *= inv;
            }
            Ok(acc)
        })
        .collect()
}
