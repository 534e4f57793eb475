//! Comparison classifiers: Gaussian Parzen PNN, its k-medians reduction,
//! k-nearest neighbours and nearest centroid.

mod centroid;
mod kmedians;
mod knn;
mod pnn;

pub use centroid::CentroidModel;
pub use kmedians::{kmedians, l1_distance, KMedians, DEFAULT_MAX_ITERS};
pub use knn::KnnModel;
pub use pnn::{GaussianPnnModel, ReducedPnnModel};

/// splitmix64 finalizer, used to derive independent seeds.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
