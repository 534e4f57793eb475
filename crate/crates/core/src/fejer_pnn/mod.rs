//! Probabilistic neural network with complex exponential activations.
//!
//! Each class keeps, per feature dimension, the triangularly weighted real and
//! imaginary parts of its empirical Fourier coefficients:
//!
//! ```text
//! W_cos[j][d] = (J+1-j) / ((J+1) R_c) * sum_r cos(j pi x_rd)
//! W_sin[j][d] = (J+1-j) / ((J+1) R_c) * sum_r sin(j pi x_rd)
//! ```
//!
//! and `W_cos[0][d] = 1`. A query is scored by
//! `log R_c + sum_d log(W_cos[0][d]/2 + sum_j W_cos[j][d] cos(j pi x_d) + W_sin[j][d] sin(j pi x_d))`,
//! so prediction costs `O(C D J)` regardless of the training set size.

mod io;

pub use io::{load_model, read_model, save_model, write_model, MODEL_HEADER};

use rayon::prelude::*;

use crate::classifier::{check_dim, Classifier, Prediction};
use crate::error::{Error, Result};
use crate::features::{ClassLabel, Dataset, NormalizedFeature};
use crate::kernels::{fill_trig_basis, Cutoff};
use crate::scalar::{cst, Scalar};

/// Densities are clamped to this floor before taking the logarithm.
pub const DENSITY_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrainOptions {
    /// Sets `W_cos[0][d] = 1 / R_c` as printed in the original algorithm
    /// listing instead of the self-consistent value 1.
    pub table1_literal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights<T> {
    pub label: ClassLabel,
    count: usize,
    /// `dim` blocks of `2J + 1` values: `W_cos[0..=J]` then `W_sin[1..=J]`.
    weights: Vec<T>,
}

impl<T> ClassWeights<T> {
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FejerPnnModel<T> {
    cutoff: Cutoff,
    dim: usize,
    classes: Vec<ClassWeights<T>>,
}

#[inline]
fn triangular<T: Scalar>(j: usize, jn: usize) -> T {
    T::from_usize_lossy(jn + 1 - j) / T::from_usize_lossy(jn + 1)
}

impl<T: Scalar> FejerPnnModel<T> {
    pub fn train(ds: &Dataset<T>, cutoff: Cutoff) -> Result<Self> {
        Self::train_with(ds, cutoff, TrainOptions::default())
    }

    /// Single pass over the training set. Classes are processed in parallel;
    /// within a class instances are summed in dataset order.
    pub fn train_with(ds: &Dataset<T>, cutoff: Cutoff, opts: TrainOptions) -> Result<Self> {
        if ds.is_empty() || ds.classes().iter().any(|c| c.is_empty()) {
            return Err(Error::EmptyDataset);
        }
        let jn = cutoff.get();
        let dim = ds.dim();
        let stride = 2 * jn + 1;
        let classes = ds
            .classes()
            .par_iter()
            .map(|class| {
                let mut weights = vec![T::zero(); dim * stride];
                let mut cos_buf = vec![T::zero(); jn];
                let mut sin_buf = vec![T::zero(); jn];
                for x in &class.instances {
                    for (d, &v) in x.as_slice().iter().enumerate() {
                        fill_trig_basis(v, &mut cos_buf, &mut sin_buf);
                        let block = &mut weights[d * stride..(d + 1) * stride];
                        for j in 0..jn {
                            block[1 + j] = block[1 + j] + cos_buf[j];
                            block[jn + 1 + j] = block[jn + 1 + j] + sin_buf[j];
                        }
                    }
                }
                let count = class.len();
                let r = T::from_usize_lossy(count);
                let w0 = if opts.table1_literal { T::one() / r } else { T::one() };
                for block in weights.chunks_exact_mut(stride) {
                    block[0] = w0;
                    for j in 1..=jn {
                        let scale = triangular::<T>(j, jn) / r;
                        block[j] = block[j] * scale;
                        block[jn + j] = block[jn + j] * scale;
                    }
                }
                ClassWeights { label: class.label.clone(), count, weights }
            })
            .collect();
        Ok(FejerPnnModel { cutoff, dim, classes })
    }

    pub(crate) fn from_parts(cutoff: Cutoff, dim: usize, classes: Vec<ClassWeights<T>>) -> Self {
        FejerPnnModel { cutoff, dim, classes }
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[ClassWeights<T>] {
        &self.classes
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.count).collect()
    }

    /// Number of stored weights, `C * D * (2J + 1)`.
    pub fn weight_count(&self) -> usize {
        self.classes.iter().map(|c| c.weights.len()).sum()
    }

    fn stride(&self) -> usize {
        2 * self.cutoff.get() + 1
    }

    /// `W_cos[j][d]` of class `c`, `j` in `0..=J`.
    pub fn w_cos(&self, c: usize, j: usize, d: usize) -> T {
        self.classes[c].weights[d * self.stride() + j]
    }

    /// `W_sin[j][d]` of class `c`, `j` in `1..=J`.
    pub fn w_sin(&self, c: usize, j: usize, d: usize) -> T {
        assert!(j >= 1, "W_sin is indexed from 1");
        self.classes[c].weights[d * self.stride() + self.cutoff.get() + j]
    }

    /// Per-dimension density estimate of class `c` at `value`, without the floor.
    pub fn feature_density(&self, c: usize, d: usize, value: T) -> T {
        let jn = self.cutoff.get();
        let mut cos_buf = vec![T::zero(); jn];
        let mut sin_buf = vec![T::zero(); jn];
        fill_trig_basis(value, &mut cos_buf, &mut sin_buf);
        let block = &self.classes[c].weights[d * self.stride()..(d + 1) * self.stride()];
        series_value(block, &cos_buf, &sin_buf)
    }

    /// Log-likelihood scores `log R_c + sum_d log f_d(x_d | c)`.
    pub fn scores(&self, x: &NormalizedFeature<T>) -> Result<Vec<T>> {
        check_dim(self.dim, x.dim())?;
        let jn = self.cutoff.get();
        let stride = self.stride();
        let floor = cst::<T>(DENSITY_FLOOR);
        let mut cos_buf = vec![T::zero(); jn];
        let mut sin_buf = vec![T::zero(); jn];
        let mut scores: Vec<T> = self.classes.iter().map(|c| T::from_usize_lossy(c.count).ln()).collect();
        for (d, &v) in x.as_slice().iter().enumerate() {
            fill_trig_basis(v, &mut cos_buf, &mut sin_buf);
            for (score, class) in scores.iter_mut().zip(&self.classes) {
                let block = &class.weights[d * stride..(d + 1) * stride];
                let density = series_value(block, &cos_buf, &sin_buf);
                *score = *score + density.max(floor).ln();
            }
        }
        Ok(scores)
    }

    pub fn predict(&self, x: &NormalizedFeature<T>) -> Result<Prediction<T>> {
        self.scores(x).map(Prediction::from_scores)
    }

    /// Adds one instance of class `label` in `O(D J)`.
    ///
    /// Unknown labels are rejected unless `create` is set, in which case a new
    /// class with zero weights and `R_c = 0` is inserted at its sorted position
    /// before the update.
    pub fn update(&mut self, x: &NormalizedFeature<T>, label: &str, create: bool) -> Result<()> {
        check_dim(self.dim, x.dim())?;
        let c = match self.classes.binary_search_by(|c| c.label.label.as_str().cmp(label)) {
            Ok(c) => c,
            Err(pos) if create => {
                if label.is_empty() || label.contains([',', '\n', '\r']) {
                    return Err(Error::Parameter(format!("invalid class label `{label}`")));
                }
                let class = ClassWeights {
                    label: ClassLabel { label: label.to_string(), index: pos },
                    count: 0,
                    weights: vec![T::zero(); self.dim * self.stride()],
                };
                self.classes.insert(pos, class);
                for (i, c) in self.classes.iter_mut().enumerate() {
                    c.label.index = i;
                }
                pos
            }
            Err(_) => return Err(Error::UnknownClass(label.to_string())),
        };
        let jn = self.cutoff.get();
        let stride = self.stride();
        let class = &mut self.classes[c];
        let r = T::from_usize_lossy(class.count);
        let r1 = r + T::one();
        let keep = r / r1;
        let mut cos_buf = vec![T::zero(); jn];
        let mut sin_buf = vec![T::zero(); jn];
        for (d, &v) in x.as_slice().iter().enumerate() {
            fill_trig_basis(v, &mut cos_buf, &mut sin_buf);
            let block = &mut class.weights[d * stride..(d + 1) * stride];
            block[0] = keep * block[0] + T::one() / r1;
            for j in 1..=jn {
                let w = triangular::<T>(j, jn) / r1;
                block[j] = keep * block[j] + w * cos_buf[j - 1];
                block[jn + j] = keep * block[jn + j] + w * sin_buf[j - 1];
            }
        }
        class.count += 1;
        Ok(())
    }
}

#[inline]
fn series_value<T: Scalar>(block: &[T], cos_buf: &[T], sin_buf: &[T]) -> T {
    let jn = cos_buf.len();
    let mut out = block[0] / cst(2.0);
    for j in 0..jn {
        out = out + block[1 + j] * cos_buf[j] + block[jn + 1 + j] * sin_buf[j];
    }
    out
}

impl<T: Scalar> Classifier<T> for FejerPnnModel<T> {
    fn labels(&self) -> Vec<&str> {
        self.classes.iter().map(|c| c.label.label.as_str()).collect()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, x: &NormalizedFeature<T>) -> Result<Prediction<T>> {
        FejerPnnModel::predict(self, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{density_canonical, fourier_coeffs};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cut(j: usize) -> Cutoff {
        Cutoff::new(j).unwrap()
    }

    fn feat(v: &[f64]) -> NormalizedFeature<f64> {
        NormalizedFeature::from_bounded(v.to_vec()).unwrap()
    }

    fn ds(rows: &[(&str, &[f64])]) -> Dataset<f64> {
        Dataset::from_labeled(rows.iter().map(|(l, v)| (l.to_string(), feat(v)))).unwrap()
    }

    fn random_ds(rng: &mut ChaCha8Rng, c: usize, d: usize, max_r: usize) -> Dataset<f64> {
        let mut rows = Vec::new();
        for k in 0..c {
            let r = rng.random_range(1..=max_r);
            let center: Vec<f64> = (0..d).map(|_| rng.random_range(-0.6..0.6)).collect();
            for _ in 0..r {
                let v: Vec<f64> =
                    center.iter().map(|m| (m + rng.random_range(-0.4..0.4f64)).clamp(-1.0, 1.0)).collect();
                rows.push((format!("class{k}"), feat(&v)));
            }
        }
        Dataset::from_labeled(rows).unwrap()
    }

    #[test]
    fn single_instance_at_origin() {
        let m = FejerPnnModel::train(&ds(&[("a", &[0.0, 0.0, 0.0])]), cut(2)).unwrap();
        for d in 0..3 {
            assert_eq!(m.w_cos(0, 0, d), 1.0);
            assert_abs_diff_eq!(m.w_cos(0, 1, d), 2.0 / 3.0, epsilon = 1e-15);
            assert_abs_diff_eq!(m.w_cos(0, 2, d), 1.0 / 3.0, epsilon = 1e-15);
            assert_eq!(m.w_sin(0, 1, d), 0.0);
            assert_eq!(m.w_sin(0, 2, d), 0.0);
        }
    }

    #[test]
    fn symmetric_pair_cancels() {
        let m = FejerPnnModel::train(&ds(&[("a", &[-0.5]), ("a", &[0.5])]), cut(1)).unwrap();
        assert_abs_diff_eq!(m.w_cos(0, 1, 0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.w_sin(0, 1, 0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn weights_match_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let data = random_ds(&mut rng, 3, 4, 20);
        let j = cut(7);
        let m = FejerPnnModel::train(&data, j).unwrap();
        for (c, class) in data.classes().iter().enumerate() {
            for d in 0..4 {
                let samples: Vec<f64> = class.instances.iter().map(|x| x.as_slice()[d]).collect();
                let coeffs = fourier_coeffs(&samples, j).unwrap();
                assert_eq!(m.w_cos(c, 0, d), 1.0);
                for k in 1..=7 {
                    let w = (8 - k) as f64 / 8.0;
                    assert_abs_diff_eq!(m.w_cos(c, k, d), w * coeffs.a()[k], epsilon = 1e-12);
                    assert_abs_diff_eq!(m.w_sin(c, k, d), w * coeffs.b()[k], epsilon = 1e-12);
                    assert!(m.w_cos(c, k, d).abs() <= w + 1e-12);
                }
            }
        }
        assert_eq!(m.weight_count(), 3 * 4 * 15);
    }

    #[test]
    fn table1_literal_zero_weight() {
        let data = ds(&[("a", &[0.1]), ("a", &[0.2]), ("a", &[0.3]), ("b", &[0.0])]);
        let m = FejerPnnModel::train_with(&data, cut(2), TrainOptions { table1_literal: true }).unwrap();
        assert_abs_diff_eq!(m.w_cos(0, 0, 0), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(m.w_cos(1, 0, 0), 1.0);
    }

    #[test]
    fn single_class_always_wins() {
        let m = FejerPnnModel::train(&ds(&[("only", &[0.2, -0.3])]), cut(3)).unwrap();
        for v in [[0.9, 0.9], [-1.0, 1.0], [0.0, 0.0]] {
            assert_eq!(m.predict(&feat(&v)).unwrap().class, 0);
        }
    }

    #[test]
    fn two_clusters_query_near_b() {
        let mut rows: Vec<(&str, &[f64])> = vec![("A", &[-0.5]); 5];
        rows.extend(vec![("B", &[0.5][..]); 5]);
        let data = ds(&rows);
        let m = FejerPnnModel::train(&data, cut(3)).unwrap();
        let fa = density_canonical(0.4, &[-0.5; 5], cut(3)).unwrap();
        let fb = density_canonical(0.4, &[0.5; 5], cut(3)).unwrap();
        assert!(fb > fa);
        assert_eq!(m.predict(&feat(&[0.4])).unwrap().class, 1);
    }

    #[test]
    fn prior_breaks_equal_densities() {
        let mut rows: Vec<(&str, &[f64])> = Vec::new();
        for _ in 0..2 {
            rows.extend([
                ("A", &[0.1, 0.4][..]),
                ("A", &[-0.3, 0.2]),
                ("A", &[0.6, -0.1]),
                ("A", &[0.0, 0.0]),
                ("A", &[0.2, 0.9]),
            ]);
        }
        rows.extend([
            ("B", &[0.1, 0.4][..]),
            ("B", &[-0.3, 0.2]),
            ("B", &[0.6, -0.1]),
            ("B", &[0.0, 0.0]),
            ("B", &[0.2, 0.9]),
        ]);
        let m = FejerPnnModel::train(&ds(&rows), cut(4)).unwrap();
        let p = m.predict(&feat(&[0.3, -0.5])).unwrap();
        assert_eq!(p.class, 0);
        assert_abs_diff_eq!(p.scores[0] - p.scores[1], 2f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn dimension_mismatch() {
        let m = FejerPnnModel::train(&ds(&[("a", &[0.2, -0.3])]), cut(3)).unwrap();
        assert!(matches!(m.predict(&feat(&[0.1])), Err(Error::DimensionMismatch { .. })));
        let mut m = m;
        assert!(matches!(m.update(&feat(&[0.1]), "a", false), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn update_keeps_zero_weight_fixed() {
        let mut m = FejerPnnModel::train(&ds(&[("a", &[0.2]), ("a", &[0.7])]), cut(4)).unwrap();
        m.update(&feat(&[-0.4]), "a", false).unwrap();
        assert_eq!(m.w_cos(0, 0, 0), 1.0);
        assert_eq!(m.class_counts(), vec![3]);
    }

    #[test]
    fn update_with_duplicate_instance_is_noop() {
        let mut m = FejerPnnModel::train(&ds(&[("a", &[0.3, -0.8])]), cut(5)).unwrap();
        let before = m.clone();
        m.update(&feat(&[0.3, -0.8]), "a", false).unwrap();
        for (x, y) in m.classes()[0].weights().iter().zip(before.classes()[0].weights()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn update_matches_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data = random_ds(&mut rng, 3, 5, 15);
        let extra: Vec<(String, NormalizedFeature<f64>)> = (0..6)
            .map(|i| {
                let v: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
                (format!("class{}", i % 3), feat(&v))
            })
            .collect();
        let mut m = FejerPnnModel::train(&data, cut(6)).unwrap();
        for (l, x) in &extra {
            m.update(x, l, false).unwrap();
        }
        let all: Vec<_> = data
            .iter()
            .map(|(c, x)| (data.classes()[c].label.label.clone(), x.clone()))
            .chain(extra.iter().cloned())
            .collect();
        let batch = FejerPnnModel::train(&Dataset::from_labeled(all).unwrap(), cut(6)).unwrap();
        assert_eq!(m.class_counts(), batch.class_counts());
        for (a, b) in m.classes().iter().zip(batch.classes()) {
            for (x, y) in a.weights().iter().zip(b.weights()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn update_unknown_class() {
        let mut m = FejerPnnModel::train(&ds(&[("b", &[0.2])]), cut(2)).unwrap();
        assert_eq!(m.update(&feat(&[0.1]), "a", false), Err(Error::UnknownClass("a".into())));
        m.update(&feat(&[0.1]), "a", true).unwrap();
        assert_eq!(Classifier::labels(&m), vec!["a", "b"]);
        assert_eq!(m.classes()[0].label.index, 0);
        assert_eq!(m.classes()[1].label.index, 1);
        assert_eq!(m.class_counts(), vec![1, 1]);
        let fresh = FejerPnnModel::train(&ds(&[("a", &[0.1])]), cut(2)).unwrap();
        for (x, y) in m.classes()[0].weights().iter().zip(fresh.classes()[0].weights()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn scores_match_canonical_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let data = random_ds(&mut rng, 3, 4, 12);
            let j = cut(rng.random_range(1..=10));
            let m = FejerPnnModel::train(&data, j).unwrap();
            for _ in 0..10 {
                let q: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                let scores = m.scores(&feat(&q)).unwrap();
                for (c, class) in data.classes().iter().enumerate() {
                    let mut oracle = (class.len() as f64).ln();
                    for (d, &qd) in q.iter().enumerate() {
                        let s: Vec<f64> = class.instances.iter().map(|x| x.as_slice()[d]).collect();
                        oracle += density_canonical(qd, &s, j).unwrap().max(DENSITY_FLOOR).ln();
                    }
                    assert!((scores[c] - oracle).abs() < 1e-8, "{} vs {}", scores[c], oracle);
                }
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let data: Dataset<f32> = Dataset::from_labeled(vec![
            ("a".to_string(), NormalizedFeature::from_bounded(vec![-0.5f32]).unwrap()),
            ("b".to_string(), NormalizedFeature::from_bounded(vec![0.5f32]).unwrap()),
        ])
        .unwrap();
        let m = FejerPnnModel::train(&data, cut(3)).unwrap();
        assert_eq!(m.predict(&NormalizedFeature::from_bounded(vec![0.4f32]).unwrap()).unwrap().class, 1);
    }
}
