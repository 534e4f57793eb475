use crate::classifier::{check_dim, Classifier, Prediction};
use crate::error::{Error, Result};
use crate::features::{ClassLabel, Dataset, NormalizedFeature};
use crate::kernels::{squared_euclidean, SmoothingSigma};
use crate::scalar::{cst, Scalar};

use super::kmedians::{kmedians, DEFAULT_MAX_ITERS};
use super::mix64;

/// Pattern neurons of one class.
#[derive(Debug, Clone, PartialEq)]
struct PatternClass<T> {
    label: ClassLabel,
    /// Training instances of the class (prior weight).
    count: usize,
    /// Row-major pattern vectors.
    patterns: Vec<T>,
}

impl<T> PatternClass<T> {
    fn n_patterns(&self, dim: usize) -> usize {
        self.patterns.len() / dim
    }
}

/// Shared scoring for the full and reduced Parzen networks:
/// `log(R_c / R) + log((1/n_c) sum_p K(x, p))`, evaluated with a running
/// log-sum-exp so large `D` or small `sigma` cannot underflow.
#[derive(Debug, Clone, PartialEq)]
struct PatternLayer<T> {
    classes: Vec<PatternClass<T>>,
    sigma: SmoothingSigma<T>,
    dim: usize,
    total: usize,
    with_norm_const: bool,
}

impl<T: Scalar> PatternLayer<T> {
    fn scores(&self, x: &NormalizedFeature<T>) -> Result<Vec<T>> {
        check_dim(self.dim, x.dim())?;
        let s = self.sigma.get();
        let two = cst::<T>(2.0);
        let inv_2s2 = T::one() / (two * s * s);
        let log_norm = if self.with_norm_const {
            -cst::<T>(self.dim as f64 / 2.0) * (two * T::PI() * s * s).ln()
        } else {
            T::zero()
        };
        let log_total = T::from_usize_lossy(self.total).ln();
        let xs = x.as_slice();
        Ok(self
            .classes
            .iter()
            .map(|class| {
                let mut max = T::neg_infinity();
                let mut sum = T::zero();
                for p in class.patterns.chunks_exact(self.dim) {
                    let v = -squared_euclidean(xs, p) * inv_2s2;
                    if v > max {
                        sum = sum * (max - v).exp() + T::one();
                        max = v;
                    } else {
                        sum = sum + (v - max).exp();
                    }
                }
                let n = T::from_usize_lossy(class.n_patterns(self.dim));
                let prior = T::from_usize_lossy(class.count).ln() - log_total;
                prior + max + sum.ln() - n.ln() + log_norm
            })
            .collect())
    }

    fn labels(&self) -> Vec<&str> {
        self.classes.iter().map(|c| c.label.label.as_str()).collect()
    }
}

fn flatten<T: Scalar>(xs: &[NormalizedFeature<T>]) -> Vec<T> {
    xs.iter().flat_map(|x| x.as_slice().iter().copied()).collect()
}

fn check_dataset<T: Scalar>(ds: &Dataset<T>) -> Result<()> {
    if ds.is_empty() || ds.classes().iter().any(|c| c.is_empty()) {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

/// Classical probabilistic neural network: one Gaussian pattern neuron per
/// training instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPnnModel<T> {
    layer: PatternLayer<T>,
}

impl<T: Scalar> GaussianPnnModel<T> {
    /// Memorizes the training set.
    pub fn train(ds: &Dataset<T>, sigma: T) -> Result<Self> {
        check_dataset(ds)?;
        let sigma = SmoothingSigma::new(sigma)?;
        let classes = ds
            .classes()
            .iter()
            .map(|c| PatternClass { label: c.label.clone(), count: c.len(), patterns: flatten(&c.instances) })
            .collect();
        Ok(GaussianPnnModel {
            layer: PatternLayer { classes, sigma, dim: ds.dim(), total: ds.len(), with_norm_const: true },
        })
    }

    pub fn sigma(&self) -> T {
        self.layer.sigma.get()
    }

    pub fn stored_instances(&self) -> usize {
        self.layer.classes.iter().map(|c| c.n_patterns(self.layer.dim)).sum()
    }

    /// Stored patterns of class `c`, one slice per instance.
    pub fn patterns(&self, c: usize) -> impl Iterator<Item = &[T]> {
        self.layer.classes[c].patterns.chunks_exact(self.layer.dim)
    }

    /// Same model with or without the `(2 pi sigma^2)^(-D/2)` factor.
    pub fn with_normalization(mut self, on: bool) -> Self {
        self.layer.with_norm_const = on;
        self
    }

    pub fn scores(&self, x: &NormalizedFeature<T>) -> Result<Vec<T>> {
        self.layer.scores(x)
    }

    pub fn predict(&self, x: &NormalizedFeature<T>) -> Result<Prediction<T>> {
        self.scores(x).map(Prediction::from_scores)
    }

    /// `(label, count, patterns)` per class, for serialization.
    pub fn export(&self) -> Vec<(&str, usize, &[T])> {
        self.layer.classes.iter().map(|c| (c.label.label.as_str(), c.count, c.patterns.as_slice())).collect()
    }

    pub fn dim(&self) -> usize {
        self.layer.dim
    }
}

impl<T: Scalar> Classifier<T> for GaussianPnnModel<T> {
    fn labels(&self) -> Vec<&str> {
        self.layer.labels()
    }

    fn dim(&self) -> usize {
        self.layer.dim
    }

    fn predict(&self, x: &NormalizedFeature<T>) -> Result<Prediction<T>> {
        GaussianPnnModel::predict(self, x)
    }
}

/// Parzen network over at most `k` k-medians centroids per class. Priors stay
/// proportional to the original class sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedPnnModel<T> {
    layer: PatternLayer<T>,
}

impl<T: Scalar> ReducedPnnModel<T> {
    pub fn train(ds: &Dataset<T>, k: usize, sigma: T, seed: u64) -> Result<Self> {
        check_dataset(ds)?;
        if k == 0 {
            return Err(Error::Parameter("centroid count must be at least 1".into()));
        }
        let sigma = SmoothingSigma::new(sigma)?;
        let classes = ds
            .classes()
            .iter()
            .map(|c| {
                let points: Vec<&[T]> = c.instances.iter().map(|x| x.as_slice()).collect();
                let fit = kmedians(&points, k, mix64(seed ^ c.label.index as u64), DEFAULT_MAX_ITERS)?;
                Ok(PatternClass { label: c.label.clone(), count: c.len(), patterns: fit.centroids.concat() })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ReducedPnnModel {
            layer: PatternLayer { classes, sigma, dim: ds.dim(), total: ds.len(), with_norm_const: true },
        })
    }

    /// Rebuilds a model from stored centroids and original class sizes.
    pub fn from_centroids(
        labels: Vec<String>,
        counts: Vec<usize>,
        centroids: Vec<Vec<Vec<T>>>,
        sigma: T,
    ) -> Result<Self> {
        let sigma = SmoothingSigma::new(sigma)?;
        let dim = centroids.first().and_then(|c| c.first()).map(Vec::len).ok_or(Error::EmptyDataset)?;
        let mut classes = Vec::with_capacity(labels.len());
        for (index, ((label, count), cents)) in labels.into_iter().zip(counts).zip(centroids).enumerate() {
            if cents.is_empty() || count == 0 {
                return Err(Error::EmptyDataset);
            }
            if let Some(bad) = cents.iter().find(|c| c.len() != dim) {
                return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
            }
            classes.push(PatternClass { label: ClassLabel { label, index }, count, patterns: cents.concat() });
        }
        let total = classes.iter().map(|c| c.count).sum();
        Ok(ReducedPnnModel { layer: PatternLayer { classes, sigma, dim, total, with_norm_const: true } })
    }

    pub fn sigma(&self) -> T {
        self.layer.sigma.get()
    }

    pub fn centroids(&self, c: usize) -> impl Iterator<Item = &[T]> {
        self.layer.classes[c].patterns.chunks_exact(self.layer.dim)
    }

    pub fn centroid_counts(&self) -> Vec<usize> {
        self.layer.classes.iter().map(|c| c.n_patterns(self.layer.dim)).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.layer.classes.iter().map(|c| c.count).collect()
    }

    pub fn export(&self) -> Vec<(&str, usize, &[T])> {
        self.layer.classes.iter().map(|c| (c.label.label.as_str(), c.count, c.patterns.as_slice())).collect()
    }

    pub fn scores(&self, x: &NormalizedFeature<T>) -> Result<Vec<T>> {
        self.layer.scores(x)
    }

    pub fn predict(&self, x: &NormalizedFeature<T>) -> Result<Prediction<T>> {
        self.scores(x).map(Prediction::from_scores)
    }
}

impl<T: Scalar> Classifier<T> for ReducedPnnModel<T> {
    fn labels(&self) -> Vec<&str> {
        self.layer.labels()
    }

    fn dim(&self) -> usize {
        self.layer.dim
    }

    fn predict(&self, x: &NormalizedFeature<T>) -> Result<Prediction<T>> {
        ReducedPnnModel::predict(self, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::KnnModel;
    use crate::features::l2_normalize;
    use crate::kernels::gaussian_parzen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn feat(v: &[f64]) -> NormalizedFeature<f64> {
        NormalizedFeature::from_bounded(v.to_vec()).unwrap()
    }

    fn two_clusters() -> Dataset<f64> {
        let rows =
            (0..10).map(|i| if i < 5 { ("A".to_string(), feat(&[-0.5])) } else { ("B".to_string(), feat(&[0.5])) });
        Dataset::from_labeled(rows).unwrap()
    }

    fn random_ds(rng: &mut ChaCha8Rng, c: usize, d: usize, r: usize) -> Dataset<f64> {
        let rows = (0..c).flat_map(|k| {
            let center: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            (0..r)
                .map(|_| {
                    let v: Vec<f64> = center.iter().map(|m| m + rng.random_range(-0.3..0.3)).collect();
                    (format!("c{k}"), l2_normalize(&v).unwrap())
                })
                .collect::<Vec<_>>()
        });
        Dataset::from_labeled(rows.collect::<Vec<_>>()).unwrap()
    }

    /// Direct MAP evaluation with the plain Gaussian kernel.
    fn direct_scores(ds: &Dataset<f64>, x: &NormalizedFeature<f64>, sigma: f64) -> Vec<f64> {
        let s = SmoothingSigma::new(sigma).unwrap();
        let total = ds.len() as f64;
        ds.classes()
            .iter()
            .map(|c| {
                let k: f64 = c.instances.iter().map(|y| gaussian_parzen(x, y, s).unwrap()).sum();
                (c.len() as f64 / total) * k / c.len() as f64
            })
            .collect()
    }

    #[test]
    fn memorizes_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ds = random_ds(&mut rng, 3, 4, 7);
        let m = GaussianPnnModel::train(&ds, 0.2).unwrap();
        assert_eq!(m.stored_instances(), ds.len());
        for (c, class) in ds.classes().iter().enumerate() {
            let stored: Vec<&[f64]> = m.patterns(c).collect();
            let orig: Vec<&[f64]> = class.instances.iter().map(|x| x.as_slice()).collect();
            assert_eq!(stored, orig);
        }
        assert!(GaussianPnnModel::train(&ds, 0.0).is_err());
        assert!(GaussianPnnModel::train(&ds, -0.1).is_err());
    }

    #[test]
    fn two_clusters_direct_evaluation() {
        let ds = two_clusters();
        let m = GaussianPnnModel::train(&ds, 0.1).unwrap();
        let x = feat(&[0.4]);
        let direct = direct_scores(&ds, &x, 0.1);
        assert!(direct[1] > direct[0]);
        let p = m.predict(&x).unwrap();
        assert_eq!(p.class, 1);
        for (s, d) in p.scores.iter().zip(&direct) {
            assert!((s - d.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn coincident_query_wins() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ds = random_ds(&mut rng, 4, 6, 5);
        let m = GaussianPnnModel::train(&ds, 0.01).unwrap();
        for (c, x) in ds.iter() {
            assert_eq!(m.predict(x).unwrap().class, c);
        }
    }

    #[test]
    fn small_sigma_acts_as_nearest_neighbour() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ds = random_ds(&mut rng, 5, 8, 10);
        let pnn = GaussianPnnModel::train(&ds, 1e-3).unwrap();
        let nn = KnnModel::train(&ds, 1).unwrap();
        let mut checked = 0;
        for _ in 0..200 {
            let v: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = l2_normalize(&v).unwrap();
            let mut d: Vec<f64> = ds.iter().map(|(_, y)| squared_euclidean(x.as_slice(), y.as_slice())).collect();
            d.sort_by(f64::total_cmp);
            if d[1] - d[0] < 1e-3 {
                continue;
            }
            checked += 1;
            assert_eq!(pnn.predict(&x).unwrap().class, nn.predict(&x).unwrap().class);
        }
        assert!(checked > 150);
    }

    #[test]
    fn normalization_constant_does_not_change_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let ds = random_ds(&mut rng, 3, 5, 4);
            let sigma = rng.random_range(0.05..1.0);
            let with = GaussianPnnModel::train(&ds, sigma).unwrap();
            let without = with.clone().with_normalization(false);
            let v: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = l2_normalize(&v).unwrap();
            assert_eq!(with.predict(&x).unwrap().class, without.predict(&x).unwrap().class);
        }
    }

    #[test]
    fn duplicating_training_set_keeps_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ds = random_ds(&mut rng, 3, 4, 6);
        let doubled = Dataset::from_labeled(
            ds.iter()
                .chain(ds.iter())
                .map(|(c, x)| (ds.classes()[c].label.label.clone(), x.clone()))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let a = GaussianPnnModel::train(&ds, 0.3).unwrap();
        let b = GaussianPnnModel::train(&doubled, 0.3).unwrap();
        for _ in 0..100 {
            let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = l2_normalize(&v).unwrap();
            let (pa, pb) = (a.predict(&x).unwrap(), b.predict(&x).unwrap());
            assert_eq!(pa.class, pb.class);
            for (s, t) in pa.scores.iter().zip(&pb.scores) {
                assert!((s - t).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn high_dimension_does_not_underflow() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ds = random_ds(&mut rng, 2, 1024, 3);
        let m = GaussianPnnModel::train(&ds, 0.01).unwrap();
        let (_, x) = ds.iter().nth(4).unwrap();
        let p = m.predict(x).unwrap();
        assert!(p.scores.iter().all(|s| s.is_finite()));
        assert_eq!(p.class, 1);
    }

    #[test]
    fn reduced_with_large_k_matches_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ds = random_ds(&mut rng, 3, 5, 6);
        let full = GaussianPnnModel::train(&ds, 0.25).unwrap();
        let reduced = ReducedPnnModel::train(&ds, 6, 0.25, 42).unwrap();
        assert_eq!(reduced.centroid_counts(), vec![6, 6, 6]);
        for _ in 0..100 {
            let v: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = l2_normalize(&v).unwrap();
            assert_eq!(full.predict(&x).unwrap().class, reduced.predict(&x).unwrap().class);
        }
    }

    #[test]
    fn reduced_single_centroid_is_class_median() {
        let rows = [("A", 0.1), ("A", 0.3), ("A", 0.9), ("B", -0.2), ("B", -0.6), ("B", -0.7), ("B", 0.0)];
        let ds = Dataset::from_labeled(rows.iter().map(|(l, v)| (l.to_string(), feat(&[*v])))).unwrap();
        let m = ReducedPnnModel::train(&ds, 1, 0.2, 0).unwrap();
        assert_eq!(m.centroids(0).collect::<Vec<_>>(), vec![&[0.3][..]]);
        assert_eq!(m.centroids(1).collect::<Vec<_>>(), vec![&[-0.4][..]]);
        let x = feat(&[0.05]);
        let s = m.scores(&x).unwrap();
        let direct = |count: f64, c: f64| {
            (count / 7.0f64).ln() + (-(0.05 - c) * (0.05 - c) / (2.0 * 0.04))
                - 0.5 * (2.0 * std::f64::consts::PI * 0.04).ln()
        };
        assert!((s[0] - direct(3.0, 0.3)).abs() < 1e-12);
        assert!((s[1] - direct(4.0, -0.4)).abs() < 1e-12);
    }

    #[test]
    fn reduced_two_clusters() {
        let m = ReducedPnnModel::train(&two_clusters(), 1, 0.1, 9).unwrap();
        assert_eq!(m.predict(&feat(&[0.4])).unwrap().class, 1);
        assert_eq!(m.class_counts(), vec![5, 5]);
    }
}
