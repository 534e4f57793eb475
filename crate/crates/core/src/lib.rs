//! Nonparametric classification with a probabilistic neural network whose
//! Gaussian pattern units are replaced by complex exponential (Fejér kernel)
//! activations.
//!
//! Features are L2-normalized so every coordinate lies in `[-1, 1]`. Per class
//! and per feature the density is a Fejér-smoothed Fourier series whose
//! coefficients are computed once at training time; classification is a
//! naive-Bayes MAP decision over the product of per-feature densities and
//! costs `O(C D J)` independent of the number of training instances.
//!
//! The crate also contains the classical Gaussian Parzen network and other
//! instance-based baselines, and a harness for repeated stratified
//! random-subsampling benchmarks.
//!
//! All estimators are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the double-precision instantiation used by the CLI.

pub mod baselines;
pub mod bench;
pub mod classifier;
pub mod density;
pub mod error;
pub mod features;
pub mod fejer_pnn;
pub mod kernels;
pub mod model_file;
pub mod pca;
pub mod scalar;

pub use classifier::{Classifier, Prediction};
pub use error::{Error, Result};
pub use features::{l2_normalize, load_dataset, ClassLabel, Dataset, NormalizedFeature};
pub use fejer_pnn::{FejerPnnModel, TrainOptions};
pub use kernels::{Cutoff, SmoothingSigma};
pub use scalar::Scalar;

pub type Dataset64 = Dataset<f64>;
pub type Feature64 = NormalizedFeature<f64>;
pub type FejerPnn64 = FejerPnnModel<f64>;
pub type FejerPnn32 = FejerPnnModel<f32>;
pub type GaussianPnn64 = baselines::GaussianPnnModel<f64>;
pub type ReducedPnn64 = baselines::ReducedPnnModel<f64>;
pub type Knn64 = baselines::KnnModel<f64>;
pub type Centroid64 = baselines::CentroidModel<f64>;
pub type Pca64 = pca::PcaTransform<f64>;
