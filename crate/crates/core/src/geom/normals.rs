//! Normal estimation by local covariance analysis.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::cloud::LabeledCloud;
use crate::geom::index::SpatialIndex;

/// Estimate unit normals from the covariance of each point's k-nearest
/// neighborhood (the point itself is part of its own neighborhood).
///
/// The normal is the smallest-eigenvalue eigenvector, flipped so that
/// `normal · (centroid − p) ≤ 0`, i.e. pointing away from the cloud
/// centroid. A neighborhood with exactly zero covariance yields (0,0,1).
pub fn estimate_normals(cloud: &LabeledCloud, k_neighbors: usize) -> Result<LabeledCloud> {
    if k_neighbors < 3 {
        return Err(Error::InvalidArgument(format!(
            "normal estimation requires k >= 3, got {k_neighbors}"
        )));
    }
    if cloud.len() < k_neighbors {
        return Err(Error::InvalidArgument(format!(
            "normal estimation requires at least {k_neighbors} points, cloud {} has {}",
            cloud.sample_id,
            cloud.len()
        )));
    }
    let index = SpatialIndex::build(&cloud.points)?;
    let centroid = cloud.centroid();

    let normals: Vec<[f64; 3]> = cloud
        .points
        .par_iter()
        .map(|p| {
            let neigh = index
                .knn(p, k_neighbors)
                .expect("k validated against point count");
            normal_of_neighborhood(&cloud.points, &neigh, p, &centroid)
        })
        .collect();

    let mut out = cloud.clone();
    out.normals = Some(normals);
    Ok(out)
}

fn normal_of_neighborhood(
    points: &[[f64; 3]],
    neigh: &[(usize, f64)],
    p: &[f64; 3],
    centroid: &[f64; 3],
) -> [f64; 3] {
    let k = neigh.len() as f64;
    let mut mean = Vector3::zeros();
    for &(i, _) in neigh {
        mean += Vector3::from(points[i]);
    }
    mean /= k;

    let mut cov = Matrix3::zeros();
    for &(i, _) in neigh {
        let d = Vector3::from(points[i]) - mean;
        cov += d * d.transpose();
    }
    cov /= k;

    if cov == Matrix3::zeros() {
        return [0.0, 0.0, 1.0];
    }

    let eig = cov.symmetric_eigen();
    let mut min_i = 0;
    for i in 1..3 {
        if eig.eigenvalues[i] < eig.eigenvalues[min_i] {
            min_i = i;
        }
    }
    let mut n = eig.eigenvectors.column(min_i).into_owned();
    let len = n.norm();
    if !len.is_finite() || len == 0.0 {
        return [0.0, 0.0, 1.0];
    }
    n /= len;

    let to_centroid = Vector3::from(*centroid) - Vector3::from(*p);
    let dot = n.dot(&to_centroid);
    if dot > 0.0 {
        n = -n;
    } else if dot == 0.0 {
        // Sign is otherwise arbitrary; pin it to the last nonzero component.
        for a in (0..3).rev() {
            if n[a] != 0.0 {
                if n[a] < 0.0 {
                    n = -n;
                }
                break;
            }
        }
    }
    [n[0], n[1], n[2]]
}
