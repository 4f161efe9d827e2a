//! Local geometric defect synthesis on normal clouds.

use rand::Rng;

use crate::error::{Error, Result};
use crate::eval::manifest::DefectKind;
use crate::geom::cloud::{dist, LabeledCloud};
use crate::geom::index::SpatialIndex;
use crate::rng::seeded_rng;
use crate::synth::shapes::median_nn_spacing;

/// Fraction of points a synthesized defect may cover.
pub const MAX_TARGET_RATIO: f64 = 0.05;
/// Smallest meaningful defect region.
pub const MIN_REGION_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct DefectSpec {
    pub kind: DefectKind,
    /// Fraction of points to label anomalous, in (0, 0.05].
    pub target_ratio: f64,
    /// Peak displacement as a multiple of the median nearest-neighbor
    /// spacing.
    pub magnitude: f64,
    pub seed: u64,
}

impl DefectSpec {
    pub fn validate(&self) -> Result<()> {
        if self.kind == DefectKind::None {
            return Err(Error::InvalidArgument(
                "defect kind must not be 'none'".into(),
            ));
        }
        if !(self.target_ratio > 0.0 && self.target_ratio <= MAX_TARGET_RATIO) {
            return Err(Error::InvalidArgument(format!(
                "target_ratio must lie in (0, {MAX_TARGET_RATIO}], got {}",
                self.target_ratio
            )));
        }
        if !(self.magnitude > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "magnitude must be > 0, got {}",
                self.magnitude
            )));
        }
        Ok(())
    }
}

fn random_unit_tangent(normal: &[f64; 3], rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v = [
            rng.gen_range(-1.0..1.0f64),
            rng.gen_range(-1.0..1.0f64),
            rng.gen_range(-1.0..1.0f64),
        ];
        let d = v[0] * normal[0] + v[1] * normal[1] + v[2] * normal[2];
        let t = [v[0] - d * normal[0], v[1] - d * normal[1], v[2] - d * normal[2]];
        let len = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
        if len > 1e-6 {
            return [t[0] / len, t[1] / len, t[2] / len];
        }
    }
}

/// Synthesize one localized defect on a normal cloud.
///
/// A seeded point and its `round(target_ratio·N)` nearest points form the
/// region; every region point is labeled 1 and displaced by a kind-specific
/// field scaled by a Gaussian falloff `w(p) = exp(−d(p)²/(2σ_r²))` with
/// σ_r half the region radius:
///
/// - `convex` / `concave`: ± magnitude·w(p) along each point's own normal.
/// - `scratch`: the concave field restricted to a thin band (20% of the
///   region extent) around a seeded tangent line through the region seed.
/// - `scar`: the normal-direction field with per-point seeded sign flips.
/// - `deformation`: a smooth shear along one seeded tangent direction.
///
/// Unlabeled points do not move, and the point count never changes.
pub fn synthesize_anomaly(cloud: &LabeledCloud, spec: &DefectSpec) -> Result<LabeledCloud> {
    spec.validate()?;
    let normals = cloud.normals.as_deref().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "cloud {} has no normals; estimate them first",
            cloud.sample_id
        ))
    })?;
    let n = cloud.len();
    let r = (spec.target_ratio * n as f64).round() as usize;
    if r < MIN_REGION_POINTS {
        return Err(Error::InvalidArgument(format!(
            "defect region of {r} points is too small (need >= {MIN_REGION_POINTS}); \
             raise target_ratio or the cloud size"
        )));
    }

    let mut rng = seeded_rng(spec.seed);
    let seed_idx = rng.gen_range(0..n);
    let seed_point = cloud.points[seed_idx];
    let seed_normal = normals[seed_idx];

    let index = SpatialIndex::build(&cloud.points)?;
    let region = index.knn(&seed_point, r)?;
    let region_radius = region.last().map(|&(_, d)| d).unwrap_or(0.0);
    let sigma_r = region_radius / 2.0;

    let spacing = median_nn_spacing(&cloud.points)?;
    let peak = spec.magnitude * spacing;

    // Draw direction parameters before the per-point loop so the stream
    // layout is independent of region contents.
    let band_dir = random_unit_tangent(&seed_normal, &mut rng);
    let shear_dir = random_unit_tangent(&seed_normal, &mut rng);
    let band_half_width = 0.2 * region_radius; // 20% of the 2·radius extent

    let mut points = cloud.points.clone();
    let mut labels = vec![0u8; n];

    for &(i, d) in &region {
        labels[i] = 1;
        let w = if sigma_r > 0.0 {
            (-d * d / (2.0 * sigma_r * sigma_r)).exp()
        } else {
            1.0
        };
        let amp = peak * w;
        let n_i = normals[i];
        let delta = match spec.kind {
            DefectKind::Convex => [amp * n_i[0], amp * n_i[1], amp * n_i[2]],
            DefectKind::Concave => [-amp * n_i[0], -amp * n_i[1], -amp * n_i[2]],
            DefectKind::Scratch => {
                let rel = [
                    points[i][0] - seed_point[0],
                    points[i][1] - seed_point[1],
                    points[i][2] - seed_point[2],
                ];
                let along =
                    rel[0] * band_dir[0] + rel[1] * band_dir[1] + rel[2] * band_dir[2];
                let perp = [
                    rel[0] - along * band_dir[0],
                    rel[1] - along * band_dir[1],
                    rel[2] - along * band_dir[2],
                ];
                let perp_d = (perp[0] * perp[0] + perp[1] * perp[1] + perp[2] * perp[2]).sqrt();
                if perp_d <= band_half_width {
                    [-amp * n_i[0], -amp * n_i[1], -amp * n_i[2]]
                } else {
                    [0.0; 3]
                }
            }
            DefectKind::Scar => {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                [sign * amp * n_i[0], sign * amp * n_i[1], sign * amp * n_i[2]]
            }
            DefectKind::Deformation => {
                [amp * shear_dir[0], amp * shear_dir[1], amp * shear_dir[2]]
            }
            DefectKind::None => unreachable!("rejected by validate"),
        };
        points[i][0] += delta[0];
        points[i][1] += delta[1];
        points[i][2] += delta[2];
    }

    let out = LabeledCloud {
        points,
        normals: Some(normals.to_vec()),
        labels: Some(labels),
        sample_id: cloud.sample_id.clone(),
    };
    out.validate()?;
    debug_assert_eq!(out.len(), cloud.len());
    Ok(out)
}

/// Distance of each labeled point from its original position; test helper
/// exposed for diagnostics.
pub fn displacement_magnitudes(before: &LabeledCloud, after: &LabeledCloud) -> Vec<f64> {
    before
        .points
        .iter()
        .zip(&after.points)
        .map(|(a, b)| dist(a, b))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::shapes::{gen_shape, Primitive, ShapeSpec};

    fn plane(n: usize, seed: u64) -> LabeledCloud {
        gen_shape(&ShapeSpec {
            primitive: Primitive::Plane,
            n_points: n,
            noise_sigma: 0.0,
            seed,
        })
        .unwrap()
    }

    fn spec(kind: DefectKind, ratio: f64, magnitude: f64, seed: u64) -> DefectSpec {
        DefectSpec {
            kind,
            target_ratio: ratio,
            magnitude,
            seed,
        }
    }

    #[test]
    fn zero_magnitude_limit_keeps_coordinates() {
        let c = plane(2000, 1);
        let out = synthesize_anomaly(&c, &spec(DefectKind::Convex, 0.02, 1e-13, 5)).unwrap();
        for (a, b) in c.points.iter().zip(&out.points) {
            assert!(dist(a, b) < 1e-12);
        }
        let labeled = out.labels.as_ref().unwrap().iter().filter(|&&l| l == 1).count();
        assert_eq!(labeled, (0.02f64 * 2000.0).round() as usize);
    }

    #[test]
    fn convex_on_plane_lifts_points_up_to_peak() {
        let c = plane(3000, 2);
        let magnitude = 3.0;
        let out = synthesize_anomaly(&c, &spec(DefectKind::Convex, 0.02, magnitude, 9)).unwrap();
        let spacing = median_nn_spacing(&c.points).unwrap();
        let labels = out.labels.as_ref().unwrap();
        let mut max_z = 0.0f64;
        for (i, p) in out.points.iter().enumerate() {
            if labels[i] == 1 {
                assert!(p[2] > 0.0, "labeled point did not move up");
                max_z = max_z.max(p[2]);
            } else {
                assert_eq!(p[2], 0.0);
            }
        }
        // The seed point itself has w = 1, so the peak is magnitude·spacing.
        assert!((max_z - magnitude * spacing).abs() < 1e-9);
    }

    #[test]
    fn label_count_is_exact_and_points_unmoved_outside() {
        let c = plane(2500, 3);
        for kind in DefectKind::ALL_DEFECTS {
            let out = synthesize_anomaly(&c, &spec(kind, 0.013, 2.0, 11)).unwrap();
            let labels = out.labels.as_ref().unwrap();
            let labeled = labels.iter().filter(|&&l| l == 1).count();
            assert_eq!(labeled, (0.013f64 * 2500.0).round() as usize, "{kind}");
            for (i, (a, b)) in c.points.iter().zip(&out.points).enumerate() {
                if labels[i] == 0 {
                    assert_eq!(a, b, "{kind}: unlabeled point moved");
                }
            }
            assert_eq!(out.len(), c.len());
        }
    }

    #[test]
    fn concave_has_negative_normal_displacement() {
        let sphere = gen_shape(&ShapeSpec {
            primitive: Primitive::Sphere,
            n_points: 3000,
            noise_sigma: 0.0,
            seed: 4,
        })
        .unwrap();
        let out = synthesize_anomaly(&sphere, &spec(DefectKind::Concave, 0.02, 2.0, 13)).unwrap();
        let labels = out.labels.as_ref().unwrap();
        let normals = sphere.normals.as_ref().unwrap();
        for i in 0..sphere.len() {
            if labels[i] == 1 {
                let d = [
                    out.points[i][0] - sphere.points[i][0],
                    out.points[i][1] - sphere.points[i][1],
                    out.points[i][2] - sphere.points[i][2],
                ];
                let along = d[0] * normals[i][0] + d[1] * normals[i][1] + d[2] * normals[i][2];
                assert!(along < 0.0);
            }
        }
    }

    #[test]
    fn region_too_small_is_an_error() {
        let c = plane(100, 5);
        let err = synthesize_anomaly(&c, &spec(DefectKind::Convex, 0.05, 1.0, 1)).unwrap_err();
        assert!(err.to_string().contains("target_ratio"));
    }

    #[test]
    fn deterministic_under_seed() {
        let c = plane(1500, 6);
        let s = spec(DefectKind::Scar, 0.02, 2.0, 21);
        assert_eq!(
            synthesize_anomaly(&c, &s).unwrap(),
            synthesize_anomaly(&c, &s).unwrap()
        );
    }

    #[test]
    fn missing_normals_rejected() {
        let mut c = plane(1200, 7);
        c.normals = None;
        assert!(synthesize_anomaly(&c, &spec(DefectKind::Convex, 0.02, 1.0, 2)).is_err());
    }
}
