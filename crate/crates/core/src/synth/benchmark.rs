//! Labeled synthetic benchmark generation.
//!
//! Dataset layout: `out_dir/<category>/<split>/<normal|defect-kind>/<id>.xyz`
//! with `.labels` sidecars for anomalous and test samples, plus
//! `manifest.tsv` at the root. Every sample's randomness derives from
//! `(master seed, sample id)` only, so generation is order- and
//! thread-independent and reruns are byte-identical.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::manifest::{DatasetManifest, DefectKind, ManifestRow, Role, Split};
use crate::geom::io::save_cloud_xyz;
use crate::rng::{derive_seed, fnv1a, stream_rng};
use crate::synth::defect::{synthesize_anomaly, DefectSpec};
use crate::synth::shapes::{gen_shape_with_id, Primitive, ShapeSpec};
use rand::Rng;

/// Achieved anomaly point ratios are kept inside this band.
pub const RATIO_BAND: (f64, f64) = (0.005, 0.03);
/// Default requested ratio range, comfortably inside the band after
/// rounding to whole points.
pub const DEFAULT_RATIO_RANGE: (f64, f64) = (0.006, 0.026);

pub const MIN_BENCHMARK_POINTS: usize = 1000;

#[derive(Debug, Clone)]
pub struct CategorySpec {
    pub name: String,
    pub shape: ShapeSpec,
    pub defect_kinds: Vec<DefectKind>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub categories: Vec<CategorySpec>,
    pub normals_per_category: usize,
    pub anomalies_per_category: usize,
    /// Fraction of normal samples assigned to the train split.
    pub train_fraction: f64,
    /// Defect magnitude in multiples of the median nearest-neighbor spacing.
    pub magnitude: f64,
    /// Requested per-sample anomaly ratio range.
    pub ratio_range: (f64, f64),
    pub seed: u64,
}

impl BenchmarkSpec {
    /// Categories cycling through the five primitives.
    pub fn default_categories(count: usize, n_points: usize, noise_sigma: f64) -> Vec<CategorySpec> {
        (0..count)
            .map(|i| {
                let primitive = Primitive::ALL[i % Primitive::ALL.len()];
                CategorySpec {
                    name: format!("{}{}", primitive, i),
                    shape: ShapeSpec {
                        primitive,
                        n_points,
                        noise_sigma,
                        seed: 0, // per-sample seeds are derived, not taken from here
                    },
                    defect_kinds: DefectKind::ALL_DEFECTS.to_vec(),
                }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.categories.is_empty() {
            return Err(Error::InvalidArgument("no categories".into()));
        }
        for c in &self.categories {
            c.shape.validate()?;
            if c.shape.n_points < MIN_BENCHMARK_POINTS {
                return Err(Error::InvalidArgument(format!(
                    "category {}: benchmark clouds need >= {MIN_BENCHMARK_POINTS} points, got {}",
                    c.name, c.shape.n_points
                )));
            }
            if c.defect_kinds.is_empty() || c.defect_kinds.contains(&DefectKind::None) {
                return Err(Error::InvalidArgument(format!(
                    "category {}: defect kinds must be non-empty and not contain 'none'",
                    c.name
                )));
            }
        }
        if self.normals_per_category < 2 {
            return Err(Error::InvalidArgument(
                "need at least 2 normal samples per category (train and test)".into(),
            ));
        }
        if self.anomalies_per_category == 0 {
            return Err(Error::InvalidArgument(
                "need at least 1 anomalous sample per category".into(),
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train_fraction must lie in (0,1), got {}",
                self.train_fraction
            )));
        }
        if !(self.magnitude > 0.0) {
            return Err(Error::InvalidArgument("magnitude must be > 0".into()));
        }
        let (lo, hi) = self.ratio_range;
        if !(lo <= hi && lo >= RATIO_BAND.0 && hi <= RATIO_BAND.1) {
            return Err(Error::InvalidArgument(format!(
                "ratio range [{lo}, {hi}] must sit inside [{}, {}]",
                RATIO_BAND.0, RATIO_BAND.1
            )));
        }
        Ok(())
    }
}

/// Achieved ratios and counts, for the generation summary.
#[derive(Debug, Clone)]
pub struct GenStats {
    pub anomaly_ratios: Vec<(String, f64)>,
    pub n_samples: usize,
}

impl GenStats {
    pub fn ratio_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (_, r) in &self.anomaly_ratios {
            lo = lo.min(*r);
            hi = hi.max(*r);
        }
        (lo, hi)
    }

    pub fn mean_ratio(&self) -> f64 {
        if self.anomaly_ratios.is_empty() {
            return 0.0;
        }
        self.anomaly_ratios.iter().map(|(_, r)| r).sum::<f64>() / self.anomaly_ratios.len() as f64
    }
}

struct SampleJob {
    sample_id: String,
    category: String,
    split: Split,
    role: Role,
    kind: DefectKind,
    shape: ShapeSpec,
    rel_path: PathBuf,
    write_labels: bool,
}

/// Generate the dataset tree and manifest. Returns the manifest (also
/// written to `out_dir/manifest.tsv`) and achieved-ratio statistics.
pub fn gen_benchmark(spec: &BenchmarkSpec, out_dir: &Path) -> Result<(DatasetManifest, GenStats)> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let n_train =
        ((spec.normals_per_category as f64 * spec.train_fraction).round() as usize)
            .clamp(1, spec.normals_per_category - 1);

    let mut jobs: Vec<SampleJob> = Vec::new();
    for cat in &spec.categories {
        for i in 0..spec.normals_per_category {
            let sample_id = format!("{}_normal_{:03}", cat.name, i);
            let split = if i < n_train { Split::Train } else { Split::Test };
            let rel_path = PathBuf::from(&cat.name)
                .join(split.as_str())
                .join("normal")
                .join(format!("{sample_id}.xyz"));
            jobs.push(SampleJob {
                shape: ShapeSpec {
                    seed: derive_seed(spec.seed, "shape", fnv1a(sample_id.as_bytes())),
                    ..cat.shape.clone()
                },
                sample_id,
                category: cat.name.clone(),
                split,
                role: Role::Normal,
                kind: DefectKind::None,
                rel_path,
                write_labels: split == Split::Test,
            });
        }
        for j in 0..spec.anomalies_per_category {
            // Defect kinds round-robin so anomalies spread evenly.
            let kind = cat.defect_kinds[j % cat.defect_kinds.len()];
            let sample_id = format!("{}_{}_{:03}", cat.name, kind, j);
            let rel_path = PathBuf::from(&cat.name)
                .join(Split::Test.as_str())
                .join(kind.as_str())
                .join(format!("{sample_id}.xyz"));
            jobs.push(SampleJob {
                shape: ShapeSpec {
                    seed: derive_seed(spec.seed, "shape", fnv1a(sample_id.as_bytes())),
                    ..cat.shape.clone()
                },
                sample_id,
                category: cat.name.clone(),
                // Anomalies start in the test split; open-set fold
                // construction draws seen-kind samples into train.
                split: Split::Test,
                role: Role::Anomalous,
                kind,
                rel_path,
                write_labels: true,
            });
        }
    }

    let results: Vec<(ManifestRow, Option<(String, f64)>)> = jobs
        .par_iter()
        .map(|job| -> Result<(ManifestRow, Option<(String, f64)>)> {
            let abs = out_dir.join(&job.rel_path);
            if let Some(parent) = abs.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let base = gen_shape_with_id(&job.shape, &job.sample_id)?;
            let (cloud, ratio) = match job.role {
                Role::Normal => (base, None),
                Role::Anomalous => {
                    let id_hash = fnv1a(job.sample_id.as_bytes());
                    let mut ratio_rng = stream_rng(spec.seed, "ratio", id_hash);
                    let target_ratio =
                        ratio_rng.gen_range(spec.ratio_range.0..=spec.ratio_range.1);
                    let defect = DefectSpec {
                        kind: job.kind,
                        target_ratio,
                        magnitude: spec.magnitude,
                        seed: derive_seed(spec.seed, "defect", id_hash),
                    };
                    let cloud = synthesize_anomaly(&base, &defect)?;
                    let achieved = cloud.anomaly_ratio();
                    (cloud, Some((job.sample_id.clone(), achieved)))
                }
            };
            save_cloud_xyz(&cloud, &abs, job.write_labels)?;
            let label_path = if job.write_labels {
                Some(job.rel_path.with_extension("labels"))
            } else {
                None
            };
            Ok((
                ManifestRow {
                    sample_id: job.sample_id.clone(),
                    category: job.category.clone(),
                    split: job.split,
                    role: job.role,
                    defect_kind: job.kind,
                    cloud_path: job.rel_path.clone(),
                    label_path,
                },
                ratio,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(results.len());
    let mut ratios = Vec::new();
    for (row, ratio) in results {
        rows.push(row);
        if let Some(r) = ratio {
            ratios.push(r);
        }
    }
    let manifest = DatasetManifest::new(rows, out_dir);
    manifest.validate(true)?;
    manifest.save(&out_dir.join("manifest.tsv"))?;

    let stats = GenStats {
        n_samples: manifest.rows.len(),
        anomaly_ratios: ratios,
    };
    Ok((manifest, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn small_spec(seed: u64) -> BenchmarkSpec {
        BenchmarkSpec {
            categories: BenchmarkSpec::default_categories(3, 1000, 0.3),
            normals_per_category: 4,
            anomalies_per_category: 5,
            train_fraction: 0.5,
            magnitude: 2.0,
            ratio_range: DEFAULT_RATIO_RANGE,
            seed,
        }
    }

    #[test]
    fn row_count_matches_requested_sizes() {
        let dir = tempdir().unwrap();
        let (manifest, stats) = gen_benchmark(&small_spec(7), dir.path()).unwrap();
        assert_eq!(manifest.rows.len(), 3 * (4 + 5));
        assert_eq!(stats.n_samples, 27);
        assert_eq!(stats.anomaly_ratios.len(), 15);
        manifest.validate(true).unwrap();
    }

    #[test]
    fn achieved_ratios_inside_band() {
        let dir = tempdir().unwrap();
        let (_, stats) = gen_benchmark(&small_spec(11), dir.path()).unwrap();
        let (lo, hi) = stats.ratio_bounds();
        assert!(lo >= RATIO_BAND.0, "min ratio {lo}");
        assert!(hi <= RATIO_BAND.1, "max ratio {hi}");
    }

    #[test]
    fn rerun_is_byte_identical() {
        let d1 = tempdir().unwrap();
        let d2 = tempdir().unwrap();
        gen_benchmark(&small_spec(13), d1.path()).unwrap();
        gen_benchmark(&small_spec(13), d2.path()).unwrap();
        let m1 = std::fs::read(d1.path().join("manifest.tsv")).unwrap();
        let m2 = std::fs::read(d2.path().join("manifest.tsv")).unwrap();
        assert_eq!(m1, m2);

        // Spot-check one cloud and one label file byte for byte.
        let manifest = DatasetManifest::load(&d1.path().join("manifest.tsv")).unwrap();
        for row in manifest.rows.iter().take(6) {
            let a = std::fs::read(d1.path().join(&row.cloud_path)).unwrap();
            let b = std::fs::read(d2.path().join(&row.cloud_path)).unwrap();
            assert_eq!(a, b, "{}", row.sample_id);
        }
    }

    #[test]
    fn kinds_distributed_evenly() {
        let dir = tempdir().unwrap();
        let (manifest, _) = gen_benchmark(&small_spec(17), dir.path()).unwrap();
        let count = |k: DefectKind| {
            manifest
                .rows
                .iter()
                .filter(|r| r.category.starts_with("plane") && r.defect_kind == k)
                .count()
        };
        assert_eq!(count(DefectKind::Convex), 1);
        assert_eq!(count(DefectKind::Scar), 1);
        assert_eq!(count(DefectKind::Deformation), 1);
    }

    #[test]
    fn undersized_clouds_rejected() {
        let mut spec = small_spec(19);
        spec.categories = BenchmarkSpec::default_categories(1, 500, 0.3);
        let dir = tempdir().unwrap();
        assert!(gen_benchmark(&spec, dir.path()).is_err());
    }
}
