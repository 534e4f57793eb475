use crate::classifier::{check_dim, Classifier, Prediction};
use crate::error::{Error, Result};
use crate::features::{Dataset, NormalizedFeature};
use crate::kernels::squared_euclidean;
use crate::scalar::Scalar;

/// Nearest-centroid (Rocchio) classifier. Centroids are plain class means and
/// are not re-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidModel<T> {
    labels: Vec<String>,
    counts: Vec<usize>,
    centroids: Vec<Vec<T>>,
    dim: usize,
}

impl<T: Scalar> CentroidModel<T> {
    pub fn train(ds: &Dataset<T>) -> Result<Self> {
        if ds.is_empty() || ds.classes().iter().any(|c| c.is_empty()) {
            return Err(Error::EmptyDataset);
        }
        let centroids = ds
            .classes()
            .iter()
            .map(|c| {
                let mut mean = vec![T::zero(); ds.dim()];
                for x in &c.instances {
                    for (m, &v) in mean.iter_mut().zip(x.as_slice()) {
                        *m = *m + v;
                    }
                }
                let n = T::from_usize_lossy(c.len());
                mean.iter_mut().for_each(|m| *m = *m / n);
                mean
            })
            .collect();
        Ok(CentroidModel { labels: ds.labels(), counts: ds.class_sizes(), centroids, dim: ds.dim() })
    }

    pub fn from_centroids(labels: Vec<String>, counts: Vec<usize>, centroids: Vec<Vec<T>>) -> Result<Self> {
        let dim = centroids.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
        if let Some(bad) = centroids.iter().find(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        Ok(CentroidModel { labels, counts, centroids, dim })
    }

    pub fn centroids(&self) -> &[Vec<T>] {
        &self.centroids
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.counts
    }

    /// Scores are negated Euclidean distances.
    pub fn predict(&self, x: &NormalizedFeature<T>) -> Result<Prediction<T>> {
        check_dim(self.dim, x.dim())?;
        let scores = self.centroids.iter().map(|c| -squared_euclidean(x.as_slice(), c).sqrt()).collect();
        Ok(Prediction::from_scores(scores))
    }
}

impl<T: Scalar> Classifier<T> for CentroidModel<T> {
    fn labels(&self) -> Vec<&str> {
        self.labels.iter().map(String::as_str).collect()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, x: &NormalizedFeature<T>) -> Result<Prediction<T>> {
        CentroidModel::predict(self, x)
    }
}
