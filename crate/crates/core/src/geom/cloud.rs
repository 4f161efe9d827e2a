use crate::error::{Error, Result};

/// A point cloud with optional unit normals and per-point binary labels.
///
/// Coordinates are in an arbitrary length unit, assumed consistent within a
/// dataset. All neighborhood parameters in this crate are point counts, not
/// metric radii, so the pipeline is unit-tolerant at the neighborhood level.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud {
    pub points: Vec<[f64; 3]>,
    pub normals: Option<Vec<[f64; 3]>>,
    /// 0 = normal, 1 = anomalous.
    pub labels: Option<Vec<u8>>,
    pub sample_id: String,
}

const UNIT_NORM_TOL: f64 = 1e-6;

impl LabeledCloud {
    pub fn new(points: Vec<[f64; 3]>, sample_id: impl Into<String>) -> Result<Self> {
        let cloud = LabeledCloud {
            points,
            normals: None,
            labels: None,
            sample_id: sample_id.into(),
        };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Check the structural invariants: non-empty finite points, unit
    /// normals of matching length, binary labels of matching length.
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "cloud {} has no points",
                self.sample_id
            )));
        }
        for (i, p) in self.points.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "cloud {}: non-finite coordinate at point {}",
                    self.sample_id, i
                )));
            }
        }
        if let Some(normals) = &self.normals {
            if normals.len() != self.points.len() {
                return Err(Error::InvalidArgument(format!(
                    "cloud {}: {} normals for {} points",
                    self.sample_id,
                    normals.len(),
                    self.points.len()
                )));
            }
            for (i, n) in normals.iter().enumerate() {
                let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                if !len.is_finite() || (len - 1.0).abs() > UNIT_NORM_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "cloud {}: normal {} has length {}",
                        self.sample_id, i, len
                    )));
                }
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.points.len() {
                return Err(Error::InvalidArgument(format!(
                    "cloud {}: {} labels for {} points",
                    self.sample_id,
                    labels.len(),
                    self.points.len()
                )));
            }
            if let Some(i) = labels.iter().position(|&l| l > 1) {
                return Err(Error::InvalidArgument(format!(
                    "cloud {}: label at point {} is not in {{0,1}}",
                    self.sample_id, i
                )));
            }
        }
        Ok(())
    }

    pub fn centroid(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for p in &self.points {
            c[0] += p[0];
            c[1] += p[1];
            c[2] += p[2];
        }
        let n = self.points.len() as f64;
        [c[0] / n, c[1] / n, c[2] / n]
    }

    /// Fraction of points labeled anomalous; 0 when unlabeled.
    pub fn anomaly_ratio(&self) -> f64 {
        match &self.labels {
            Some(l) => l.iter().filter(|&&v| v == 1).count() as f64 / l.len() as f64,
            None => 0.0,
        }
    }
}

#[inline]
pub fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[inline]
pub fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    dist2(a, b).sqrt()
}
