//! Parametric surface generators for the bundled benchmark.
//!
//! All primitives have fixed canonical dimensions (constants below) and are
//! sampled area-uniformly with a seeded generator; optional Gaussian noise
//! displaces each point along its analytic normal by
//! `noise_sigma × median nearest-neighbor spacing`.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geom::cloud::LabeledCloud;
use crate::geom::index::SpatialIndex;
use crate::rng::seeded_rng;

pub const PLANE_SIDE: f64 = 2.0;
pub const SPHERE_RADIUS: f64 = 1.0;
pub const CYLINDER_RADIUS: f64 = 0.5;
pub const CYLINDER_HEIGHT: f64 = 2.0;
pub const TORUS_MAJOR: f64 = 1.0;
pub const TORUS_MINOR: f64 = 0.3;
pub const WASHER_INNER: f64 = 0.45;
pub const WASHER_OUTER: f64 = 1.0;
pub const WASHER_THICKNESS: f64 = 0.12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Primitive {
    Plane,
    Sphere,
    Cylinder,
    Torus,
    Washer,
}

impl Primitive {
    pub const ALL: [Primitive; 5] = [
        Primitive::Plane,
        Primitive::Sphere,
        Primitive::Cylinder,
        Primitive::Torus,
        Primitive::Washer,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Primitive::Plane => "plane",
            Primitive::Sphere => "sphere",
            Primitive::Cylinder => "cylinder",
            Primitive::Torus => "torus",
            Primitive::Washer => "washer",
        }
    }

    pub fn parse(s: &str) -> Result<Primitive> {
        match s {
            "plane" => Ok(Primitive::Plane),
            "sphere" => Ok(Primitive::Sphere),
            "cylinder" => Ok(Primitive::Cylinder),
            "torus" => Ok(Primitive::Torus),
            "washer" => Ok(Primitive::Washer),
            other => Err(Error::InvalidArgument(format!(
                "unknown primitive {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Primitive {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpec {
    pub primitive: Primitive,
    pub n_points: usize,
    /// Surface noise as a multiple of the median nearest-neighbor spacing.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl ShapeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 8 {
            return Err(Error::InvalidArgument(format!(
                "shape needs at least 8 points, got {}",
                self.n_points
            )));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// One surface sample: position and outward unit normal.
fn sample_surface(p: Primitive, rng: &mut impl Rng) -> ([f64; 3], [f64; 3]) {
    match p {
        Primitive::Plane => {
            let h = PLANE_SIDE / 2.0;
            let x = rng.gen_range(-h..h);
            let y = rng.gen_range(-h..h);
            ([x, y, 0.0], [0.0, 0.0, 1.0])
        }
        Primitive::Sphere => {
            // Uniform direction via the normal-deviate trick.
            loop {
                let v: [f64; 3] = [
                    StandardNormal.sample(rng),
                    StandardNormal.sample(rng),
                    StandardNormal.sample(rng),
                ];
                let len = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                if len > 1e-12 {
                    let len = len.sqrt();
                    let n = [v[0] / len, v[1] / len, v[2] / len];
                    return (
                        [n[0] * SPHERE_RADIUS, n[1] * SPHERE_RADIUS, n[2] * SPHERE_RADIUS],
                        n,
                    );
                }
            }
        }
        Primitive::Cylinder => {
            let lateral_area = TAU * CYLINDER_RADIUS * CYLINDER_HEIGHT;
            let cap_area = std::f64::consts::PI * CYLINDER_RADIUS * CYLINDER_RADIUS;
            let total = lateral_area + 2.0 * cap_area;
            let pick = rng.gen_range(0.0..total);
            let theta = rng.gen_range(0.0..TAU);
            let (c, s) = (theta.cos(), theta.sin());
            if pick < lateral_area {
                let z = rng.gen_range(-CYLINDER_HEIGHT / 2.0..CYLINDER_HEIGHT / 2.0);
                ([CYLINDER_RADIUS * c, CYLINDER_RADIUS * s, z], [c, s, 0.0])
            } else {
                let r = CYLINDER_RADIUS * rng.gen_range(0.0f64..1.0).sqrt();
                let z_sign = if pick < lateral_area + cap_area { 1.0 } else { -1.0 };
                (
                    [r * c, r * s, z_sign * CYLINDER_HEIGHT / 2.0],
                    [0.0, 0.0, z_sign],
                )
            }
        }
        Primitive::Torus => {
            let u = rng.gen_range(0.0..TAU);
            // Rejection-sample the tube angle against the area density
            // (1 + (r/R) cos v) / (1 + r/R).
            let ratio = TORUS_MINOR / TORUS_MAJOR;
            let v = loop {
                let v = rng.gen_range(0.0..TAU);
                let accept = (1.0 + ratio * v.cos()) / (1.0 + ratio);
                if rng.gen_range(0.0..1.0) < accept {
                    break v;
                }
            };
            let (cu, su) = (u.cos(), u.sin());
            let (cv, sv) = (v.cos(), v.sin());
            let ring = TORUS_MAJOR + TORUS_MINOR * cv;
            (
                [ring * cu, ring * su, TORUS_MINOR * sv],
                [cv * cu, cv * su, sv],
            )
        }
        Primitive::Washer => {
            let face_area = std::f64::consts::PI * (WASHER_OUTER * WASHER_OUTER - WASHER_INNER * WASHER_INNER);
            let outer_rim = TAU * WASHER_OUTER * WASHER_THICKNESS;
            let inner_rim = TAU * WASHER_INNER * WASHER_THICKNESS;
            let total = 2.0 * face_area + outer_rim + inner_rim;
            let pick = rng.gen_range(0.0..total);
            let theta = rng.gen_range(0.0..TAU);
            let (c, s) = (theta.cos(), theta.sin());
            let half_t = WASHER_THICKNESS / 2.0;
            if pick < 2.0 * face_area {
                // Annular face; radial density proportional to r.
                let u = rng.gen_range(0.0f64..1.0);
                let r = (WASHER_INNER * WASHER_INNER
                    + u * (WASHER_OUTER * WASHER_OUTER - WASHER_INNER * WASHER_INNER))
                    .sqrt();
                let z_sign = if pick < face_area { 1.0 } else { -1.0 };
                ([r * c, r * s, z_sign * half_t], [0.0, 0.0, z_sign])
            } else if pick < 2.0 * face_area + outer_rim {
                let z = rng.gen_range(-half_t..half_t);
                ([WASHER_OUTER * c, WASHER_OUTER * s, z], [c, s, 0.0])
            } else {
                let z = rng.gen_range(-half_t..half_t);
                // Inner rim faces the hole.
                ([WASHER_INNER * c, WASHER_INNER * s, z], [-c, -s, 0.0])
            }
        }
    }
}

/// Median distance to the nearest other point.
pub fn median_nn_spacing(points: &[[f64; 3]]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(
            "spacing needs at least 2 points".into(),
        ));
    }
    let index = SpatialIndex::build(points)?;
    let mut nn: Vec<f64> = points
        .iter()
        .map(|p| {
            // Second hit: the first is the point itself (or a duplicate at
            // distance zero, which gives the same spacing).
            index.knn(p, 2).expect("n >= 2")[1].1
        })
        .collect();
    nn.sort_by(f64::total_cmp);
    Ok(nn[nn.len() / 2])
}

/// Generate a labeled-normal cloud (all labels 0) with analytic normals.
pub fn gen_shape(spec: &ShapeSpec) -> Result<LabeledCloud> {
    gen_shape_with_id(spec, spec.primitive.as_str())
}

pub fn gen_shape_with_id(spec: &ShapeSpec, sample_id: &str) -> Result<LabeledCloud> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed);
    let mut points = Vec::with_capacity(spec.n_points);
    let mut normals = Vec::with_capacity(spec.n_points);
    for _ in 0..spec.n_points {
        let (p, n) = sample_surface(spec.primitive, &mut rng);
        points.push(p);
        normals.push(n);
    }

    if spec.noise_sigma > 0.0 {
        let spacing = median_nn_spacing(&points)?;
        let scale = spec.noise_sigma * spacing;
        for (p, n) in points.iter_mut().zip(&normals) {
            let z: f64 = StandardNormal.sample(&mut rng);
            let d = scale * z;
            p[0] += d * n[0];
            p[1] += d * n[1];
            p[2] += d * n[2];
        }
    }

    let cloud = LabeledCloud {
        points,
        normals: Some(normals),
        labels: Some(vec![0; spec.n_points]),
        sample_id: sample_id.to_string(),
    };
    cloud.validate()?;
    Ok(cloud)
}
