//! Point feature histograms.
//!
//! The per-point descriptor is a 33-bin histogram of Darboux-frame angles
//! between a point and its k nearest neighbors (11 bins per angle), followed
//! by a distance-weighted smoothing pass over the neighborhood. Multi-scale
//! descriptors concatenate one 33-block per neighbor count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::cloud::{dist, LabeledCloud};
use crate::geom::index::SpatialIndex;

pub const HIST_BINS: usize = 11;
pub const SPFH_DIM: usize = 3 * HIST_BINS;

/// Pairs closer than this, or with a Darboux v-axis shorter than this, are
/// skipped as degenerate.
pub const DEGENERATE_EPS: f64 = 1e-12;

/// A 33-bin signature plus a flag marking neighborhoods where every pair
/// was degenerate (the signature is then all zeros).
#[derive(Debug, Clone, PartialEq)]
pub struct Spfh {
    pub hist: [f64; SPFH_DIM],
    pub degenerate: bool,
}

#[inline]
fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Histogram bin for `v` over `[lo, hi]`: half-open bins with the final bin
/// closed; values outside the range (floating fuzz on dot products) clamp.
#[inline]
fn bin_of(v: f64, lo: f64, hi: f64) -> usize {
    let t = (v - lo) / (hi - lo) * HIST_BINS as f64;
    (t as isize).clamp(0, HIST_BINS as isize - 1) as usize
}

/// SPFH of point `s` over an explicit neighbor index list.
///
/// For each neighbor t: u = n_s, v = normalize(d̂ × u), w = u × v with
/// d̂ = (p_t − p_s)/‖p_t − p_s‖; the binned angles are α = v·n_t,
/// φ = u·d̂, θ = atan2(w·n_t, u·n_t). Each 11-bin sub-histogram is
/// normalized to sum to 100.
pub fn spfh_from_neighbors(
    points: &[[f64; 3]],
    normals: &[[f64; 3]],
    s: usize,
    neighbors: &[u32],
) -> Spfh {
    let p_s = &points[s];
    let u = &normals[s];
    let mut hist = [0.0f64; SPFH_DIM];
    let mut pairs = 0usize;

    for &t in neighbors {
        let t = t as usize;
        let d = sub(&points[t], p_s);
        let len = norm(&d);
        if len <= DEGENERATE_EPS {
            continue;
        }
        let dhat = [d[0] / len, d[1] / len, d[2] / len];
        let v_raw = cross(&dhat, u);
        let v_len = norm(&v_raw);
        if v_len <= DEGENERATE_EPS {
            continue;
        }
        let v = [v_raw[0] / v_len, v_raw[1] / v_len, v_raw[2] / v_len];
        let w = cross(u, &v);
        let n_t = &normals[t];

        let alpha = dot(&v, n_t);
        let phi = dot(u, &dhat);
        let theta = f64::atan2(dot(&w, n_t), dot(u, n_t));

        hist[bin_of(alpha, -1.0, 1.0)] += 1.0;
        hist[HIST_BINS + bin_of(phi, -1.0, 1.0)] += 1.0;
        hist[2 * HIST_BINS + bin_of(theta, -std::f64::consts::PI, std::f64::consts::PI)] += 1.0;
        pairs += 1;
    }

    if pairs == 0 {
        return Spfh {
            hist,
            degenerate: true,
        };
    }
    let scale = 100.0 / pairs as f64;
    for v in &mut hist {
        *v *= scale;
    }
    Spfh {
        hist,
        degenerate: false,
    }
}

fn require_normals<'a>(cloud: &'a LabeledCloud) -> Result<&'a [[f64; 3]]> {
    cloud
        .normals
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("cloud {} has no normals", cloud.sample_id)))
}

fn check_scale(cloud: &LabeledCloud, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("neighbor count must be >= 1".into()));
    }
    if k > cloud.len() - 1 {
        return Err(Error::InvalidArgument(format!(
            "neighbor count {k} exceeds {} available neighbors of cloud {}",
            cloud.len() - 1,
            cloud.sample_id
        )));
    }
    Ok(())
}

/// Neighbor lists for all points: for each point, its `k` nearest neighbors
/// excluding the point itself, ascending by (distance, index). Stored as a
/// flat arena with stride `k`.
pub(crate) struct NeighborArena {
    pub k: usize,
    pub flat: Vec<u32>,
}

impl NeighborArena {
    pub fn build(index: &SpatialIndex, k: usize) -> NeighborArena {
        let n = index.len();
        let flat: Vec<u32> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let neigh = index
                    .knn(&index.points()[i], k + 1)
                    .expect("k+1 <= point count by precondition");
                let mut out = Vec::with_capacity(k);
                for (j, _) in neigh {
                    if j != i {
                        out.push(j as u32);
                        if out.len() == k {
                            break;
                        }
                    }
                }
                debug_assert_eq!(out.len(), k);
                out
            })
            .collect();
        NeighborArena { k, flat }
    }

    #[inline]
    pub fn of(&self, i: usize, k: usize) -> &[u32] {
        debug_assert!(k <= self.k);
        &self.flat[i * self.k..i * self.k + k]
    }
}

/// SPFH of a single point over its `k_neighbors` nearest neighbors.
pub fn compute_spfh(cloud: &LabeledCloud, point: usize, k_neighbors: usize) -> Result<Spfh> {
    let normals = require_normals(cloud)?;
    check_scale(cloud, k_neighbors)?;
    if point >= cloud.len() {
        return Err(Error::InvalidArgument(format!(
            "point index {point} out of range for cloud of {}",
            cloud.len()
        )));
    }
    let index = SpatialIndex::build(&cloud.points)?;
    let neigh = index.knn(&cloud.points[point], k_neighbors + 1)?;
    let ids: Vec<u32> = neigh
        .into_iter()
        .filter(|&(j, _)| j != point)
        .take(k_neighbors)
        .map(|(j, _)| j as u32)
        .collect();
    Ok(spfh_from_neighbors(&cloud.points, normals, point, &ids))
}

fn fpfh_pass(
    points: &[[f64; 3]],
    spfh: &[Spfh],
    arena: &NeighborArena,
    k: usize,
    out: &mut [Vec<f64>],
) {
    out.par_iter_mut().enumerate().for_each(|(i, row)| {
        let mut acc = spfh[i].hist;
        let inv_k = 1.0 / k as f64;
        for &t in arena.of(i, k) {
            let t = t as usize;
            let w = dist(&points[i], &points[t]);
            if w <= DEGENERATE_EPS {
                continue;
            }
            let scale = inv_k / w;
            let h = &spfh[t].hist;
            for b in 0..SPFH_DIM {
                acc[b] += scale * h[b];
            }
        }
        row.extend_from_slice(&acc);
    });
}

/// FPFH for every point at a single scale:
/// `FPFH(p) = SPFH(p) + (1/k) Σ_t SPFH(t)/‖p_t − p‖`, zero-distance
/// neighbors skipped in the weighted sum.
pub fn compute_fpfh(cloud: &LabeledCloud, k_neighbors: usize) -> Result<Vec<Vec<f64>>> {
    compute_multiscale_fpfh(cloud, &[k_neighbors])
}

/// Concatenated FPFH blocks, one per scale in listed order. Each point's
/// scale-k neighbor set is the k-prefix of its sorted neighbor list, so all
/// scales share one query pass.
pub fn compute_multiscale_fpfh(cloud: &LabeledCloud, scales: &[usize]) -> Result<Vec<Vec<f64>>> {
    let normals = require_normals(cloud)?;
    if scales.is_empty() {
        return Err(Error::InvalidArgument("scales must be non-empty".into()));
    }
    for &s in scales {
        check_scale(cloud, s)?;
    }
    let k_max = *scales.iter().max().unwrap();
    let index = SpatialIndex::build(&cloud.points)?;
    let arena = NeighborArena::build(&index, k_max);

    let n = cloud.len();
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(SPFH_DIM * scales.len()); n];
    for &k in scales {
        let spfh: Vec<Spfh> = (0..n)
            .into_par_iter()
            .map(|i| spfh_from_neighbors(&cloud.points, normals, i, arena.of(i, k)))
            .collect();
        fpfh_pass(&cloud.points, &spfh, &arena, k, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn plane_cloud(n_side: usize) -> LabeledCloud {
        let mut pts = Vec::new();
        for i in 0..n_side {
            for j in 0..n_side {
                pts.push([i as f64 * 0.1, j as f64 * 0.1, 0.0]);
            }
        }
        let n = pts.len();
        let mut c = LabeledCloud::new(pts, "plane").unwrap();
        c.normals = Some(vec![[0.0, 0.0, 1.0]; n]);
        c
    }

    fn random_cloud_with_normals(n: usize, seed: u64) -> LabeledCloud {
        let mut rng = crate::rng::seeded_rng(seed);
        let pts: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]
            })
            .collect();
        let normals: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                loop {
                    let v = [
                        rng.gen_range(-1.0..1.0f64),
                        rng.gen_range(-1.0..1.0f64),
                        rng.gen_range(-1.0..1.0f64),
                    ];
                    let len = norm(&v);
                    if len > 0.1 {
                        return [v[0] / len, v[1] / len, v[2] / len];
                    }
                }
            })
            .collect();
        let mut c = LabeledCloud::new(pts, format!("rand{seed}")).unwrap();
        c.normals = Some(normals);
        c
    }

    /// Direct-formula SPFH oracle: brute-force neighbors, scalar loops.
    fn oracle_spfh(points: &[[f64; 3]], normals: &[[f64; 3]], s: usize, k: usize) -> [f64; 33] {
        let mut order: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != s)
            .map(|(i, p)| (dist(p, &points[s]), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order.truncate(k);

        let mut hist = [0.0f64; 33];
        let mut pairs = 0usize;
        for &(_, t) in &order {
            let d = sub(&points[t], &points[s]);
            let len = norm(&d);
            if len <= DEGENERATE_EPS {
                continue;
            }
            let dhat = [d[0] / len, d[1] / len, d[2] / len];
            let u = normals[s];
            let v_raw = cross(&dhat, &u);
            let v_len = norm(&v_raw);
            if v_len <= DEGENERATE_EPS {
                continue;
            }
            let v = [v_raw[0] / v_len, v_raw[1] / v_len, v_raw[2] / v_len];
            let w = cross(&u, &v);
            let alpha = dot(&v, &normals[t]);
            let phi = dot(&u, &dhat);
            let theta = f64::atan2(dot(&w, &normals[t]), dot(&u, &normals[t]));
            hist[bin_of(alpha, -1.0, 1.0)] += 1.0;
            hist[11 + bin_of(phi, -1.0, 1.0)] += 1.0;
            hist[22 + bin_of(theta, -std::f64::consts::PI, std::f64::consts::PI)] += 1.0;
            pairs += 1;
        }
        if pairs > 0 {
            for v in &mut hist {
                *v *= 100.0 / pairs as f64;
            }
        }
        hist
    }

    #[test]
    fn plane_mass_sits_in_zero_bins() {
        let c = plane_cloud(8);
        let s = 27;
        let f = compute_spfh(&c, s, 8).unwrap();
        assert!(!f.degenerate);
        // α = φ = θ = 0 for in-plane displacements with identical normals.
        let zero_bin = bin_of(0.0, -1.0, 1.0);
        let theta_zero = bin_of(0.0, -std::f64::consts::PI, std::f64::consts::PI);
        for block in 0..3 {
            let h = &f.hist[block * 11..block * 11 + 11];
            let sum: f64 = h.iter().sum();
            assert!((sum - 100.0).abs() < 1e-9);
            let expect = if block < 2 { zero_bin } else { theta_zero };
            assert!((h[expect] - 100.0).abs() < 1e-9, "block {block}: {h:?}");
        }
    }

    #[test]
    fn spfh_matches_direct_oracle() {
        let c = random_cloud_with_normals(200, 4);
        let normals = c.normals.as_deref().unwrap();
        for s in [0usize, 7, 99, 150] {
            let got = compute_spfh(&c, s, 10).unwrap();
            let want = oracle_spfh(&c.points, normals, s, 10);
            for b in 0..33 {
                assert!((got.hist[b] - want[b]).abs() < 1e-6, "point {s} bin {b}");
            }
        }
    }

    #[test]
    fn coincident_neighborhood_is_degenerate() {
        let mut pts = vec![[5.0, 5.0, 5.0]; 4];
        pts.push([5.0, 5.0, 5.0]);
        let n = pts.len();
        let mut c = LabeledCloud::new(pts, "dup").unwrap();
        c.normals = Some(vec![[0.0, 0.0, 1.0]; n]);
        let f = compute_spfh(&c, 0, 3).unwrap();
        assert!(f.degenerate);
        assert!(f.hist.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fpfh_collapses_for_identical_spfh_and_unit_distances() {
        // Octahedron vertices around each point are hard to arrange; instead
        // use a segment of unit-spaced collinear points where k=2 neighbors
        // sit at distance 1 except at the ends, and check the formula
        // directly on an interior slice via the k=1 instantiation below.
        // Here: all SPFH equal and distances 1 → FPFH = 2·SPFH.
        let pts = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0],
        ];
        let mut c = LabeledCloud::new(pts, "sq").unwrap();
        c.normals = Some(vec![[0.0, 0.0, 1.0]; 4]);
        // Unit square: each point's 2 nearest neighbors are at distance 1,
        // and by symmetry all SPFH vectors are identical.
        let per_point = compute_fpfh(&c, 2).unwrap();
        let s0 = compute_spfh(&c, 0, 2).unwrap();
        for (b, &v) in per_point[0].iter().enumerate() {
            assert!((v - 2.0 * s0.hist[b]).abs() < 1e-9, "bin {b}");
        }
    }

    #[test]
    fn fpfh_k1_instantiation() {
        let pts = vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [100.0, 0.0, 0.0]];
        let mut c = LabeledCloud::new(pts, "k1").unwrap();
        c.normals = Some(vec![[0.0, 0.0, 1.0]; 3]);
        let per_point = compute_fpfh(&c, 1).unwrap();
        let s0 = compute_spfh(&c, 0, 1).unwrap();
        let s1 = compute_spfh(&c, 1, 1).unwrap();
        // Point 0's single neighbor is point 1 at distance 2.
        for b in 0..33 {
            let want = s0.hist[b] + s1.hist[b] / 2.0;
            assert!((per_point[0][b] - want).abs() < 1e-9, "bin {b}");
        }
    }

    #[test]
    fn fpfh_matches_direct_reference() {
        let c = random_cloud_with_normals(200, 9);
        let normals = c.normals.as_deref().unwrap();
        let k = 10;
        let got = compute_fpfh(&c, k).unwrap();

        // O(N·k²)-style reference: recompute every SPFH from scratch.
        for s in [3usize, 77, 191] {
            let mut order: Vec<(f64, usize)> = c
                .points
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != s)
                .map(|(i, p)| (dist(p, &c.points[s]), i))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            order.truncate(k);

            let mut want = oracle_spfh(&c.points, normals, s, k);
            for &(w, t) in &order {
                if w <= DEGENERATE_EPS {
                    continue;
                }
                let h = oracle_spfh(&c.points, normals, t, k);
                for b in 0..33 {
                    want[b] += h[b] / (w * k as f64);
                }
            }
            for b in 0..33 {
                assert!((got[s][b] - want[b]).abs() < 1e-6, "point {s} bin {b}");
            }
        }
    }

    #[test]
    fn multiscale_blocks_equal_single_scale_runs() {
        let c = random_cloud_with_normals(300, 12);
        let multi = compute_multiscale_fpfh(&c, &[8, 16, 32]).unwrap();
        for (bi, &k) in [8usize, 16, 32].iter().enumerate() {
            let single = compute_fpfh(&c, k).unwrap();
            for i in (0..c.len()).step_by(37) {
                assert_eq!(
                    &multi[i][bi * 33..bi * 33 + 33],
                    single[i].as_slice(),
                    "point {i} scale {k}"
                );
            }
        }
    }

    #[test]
    fn scale_exceeding_cloud_is_an_error() {
        let c = random_cloud_with_normals(50, 1);
        assert!(compute_multiscale_fpfh(&c, &[2000]).is_err());
        assert!(compute_multiscale_fpfh(&c, &[49]).is_ok());
        assert!(compute_multiscale_fpfh(&c, &[50]).is_err());
    }

    #[test]
    fn missing_normals_is_an_error() {
        let c = LabeledCloud::new(vec![[0.0; 3], [1.0, 0.0, 0.0]], "nn").unwrap();
        assert!(compute_fpfh(&c, 1).is_err());
    }
}
