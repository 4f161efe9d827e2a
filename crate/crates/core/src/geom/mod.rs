//! Point-cloud representation, I/O, spatial indexing, normal estimation
//! and farthest point sampling.

pub mod cloud;
pub mod fps;
pub mod index;
pub mod io;
pub mod normals;

pub use cloud::{dist, dist2, LabeledCloud};
pub use fps::{farthest_point_sample, farthest_point_sample_points};
pub use index::{brute_force_knn, SpatialIndex};
pub use io::{load_cloud, load_scores, save_cloud_xyz, save_scores, CloudFormat};
pub use normals::estimate_normals;
