use crate::classifier::{check_dim, Classifier, Prediction};
use crate::error::{Error, Result};
use crate::features::{Dataset, NormalizedFeature};
use crate::kernels::squared_euclidean;
use crate::scalar::Scalar;

/// Brute-force k-nearest-neighbour vote with Euclidean distance.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel<T> {
    labels: Vec<String>,
    /// Row-major instances.
    data: Vec<T>,
    targets: Vec<usize>,
    dim: usize,
    k: usize,
}

impl<T: Scalar> KnnModel<T> {
    pub fn train(ds: &Dataset<T>, k: usize) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if k == 0 || k > ds.len() {
            return Err(Error::Parameter(format!("k = {k} outside 1..={}", ds.len())));
        }
        let mut data = Vec::with_capacity(ds.len() * ds.dim());
        let mut targets = Vec::with_capacity(ds.len());
        for (c, x) in ds.iter() {
            data.extend_from_slice(x.as_slice());
            targets.push(c);
        }
        Ok(KnnModel { labels: ds.labels(), data, targets, dim: ds.dim(), k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Vote counts per class. Ties in the count go to the class whose voters
    /// are closer in summed distance, then to the smaller class index.
    pub fn predict(&self, x: &NormalizedFeature<T>) -> Result<Prediction<T>> {
        check_dim(self.dim, x.dim())?;
        let xs = x.as_slice();
        let mut dist: Vec<(T, usize)> =
            self.data.chunks_exact(self.dim).map(|p| squared_euclidean(xs, p)).zip(0..).collect();
        let by_distance =
            |a: &(T, usize), b: &(T, usize)| a.0.partial_cmp(&b.0).expect("finite distance").then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, by_distance);
            dist.truncate(self.k);
        }
        let n = self.labels.len();
        let mut votes = vec![0usize; n];
        let mut summed = vec![T::zero(); n];
        for &(d2, i) in &dist {
            let c = self.targets[i];
            votes[c] += 1;
            summed[c] = summed[c] + d2.sqrt();
        }
        let mut best = 0;
        for c in 1..n {
            if votes[c] > votes[best] || (votes[c] == votes[best] && summed[c] < summed[best]) {
                best = c;
            }
        }
        let scores = votes.into_iter().map(T::from_usize_lossy).collect();
        Ok(Prediction { class: best, scores })
    }

    /// `(label, rows)` per class, for serialization.
    pub fn export(&self) -> Vec<(&str, Vec<&[T]>)> {
        let mut out: Vec<(&str, Vec<&[T]>)> = self.labels.iter().map(|l| (l.as_str(), Vec::new())).collect();
        for (p, &c) in self.data.chunks_exact(self.dim).zip(&self.targets) {
            out[c].1.push(p);
        }
        out
    }
}

impl<T: Scalar> Classifier<T> for KnnModel<T> {
    fn labels(&self) -> Vec<&str> {
        self.labels.iter().map(String::as_str).collect()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, x: &NormalizedFeature<T>) -> Result<Prediction<T>> {
        KnnModel::predict(self, x)
    }
}
