//! One-dimensional Fourier-series density estimation on `[-1, 1]` and cut-off
//! selection.
//!
//! The estimate of a sample `x_1..x_R` is the Fejér-kernel average
//! `f(x) = (1 / 2R) sum_r F_{J+1}(x - x_r)`, whose equivalent series form is
//! `A_0 / 2 + sum_{j=1}^J (J+1-j)/(J+1) (A_j cos(j pi x) + B_j sin(j pi x))`
//! with `A_j`, `B_j` the empirical cosine and sine moments of the sample.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::kernels::{fejer, fill_trig_basis, Cutoff};
use crate::scalar::{cst, Scalar};

/// Criterion values closer than this are treated as ties in [`hart_cutoff`].
const HART_TIE_EPS: f64 = 1e-12;

/// Empirical trigonometric moments `A_j = mean cos(j pi x_r)` and
/// `B_j = mean sin(j pi x_r)` for `j = 0..=J`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients<T> {
    a: Vec<T>,
    b: Vec<T>,
    count: usize,
}

impl<T: Scalar> FourierCoefficients<T> {
    pub fn cutoff(&self) -> Cutoff {
        Cutoff::new(self.a.len() - 1).expect("coefficients always hold j = 0..=J with J >= 1")
    }

    pub fn a(&self) -> &[T] {
        &self.a
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// Accumulates the moment sums of `samples` into `a[1..]`, `b[1..]`.
/// `cos_buf`/`sin_buf` are scratch buffers of length `J`.
pub(crate) fn accumulate_moments<T: Scalar>(
    samples: impl IntoIterator<Item = T>,
    a: &mut [T],
    b: &mut [T],
    cos_buf: &mut [T],
    sin_buf: &mut [T],
) -> usize {
    let mut n = 0;
    for x in samples {
        fill_trig_basis(x, cos_buf, sin_buf);
        for j in 0..cos_buf.len() {
            a[j + 1] = a[j + 1] + cos_buf[j];
            b[j + 1] = b[j + 1] + sin_buf[j];
        }
        n += 1;
    }
    n
}

pub fn fourier_coeffs<T: Scalar>(samples: &[T], cutoff: Cutoff) -> Result<FourierCoefficients<T>> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let jn = cutoff.get();
    let mut a = vec![T::zero(); jn + 1];
    let mut b = vec![T::zero(); jn + 1];
    let mut cos_buf = vec![T::zero(); jn];
    let mut sin_buf = vec![T::zero(); jn];
    let n = accumulate_moments(samples.iter().copied(), &mut a, &mut b, &mut cos_buf, &mut sin_buf);
    let inv = T::one() / T::from_usize_lossy(n);
    for j in 1..=jn {
        a[j] = a[j] * inv;
        b[j] = b[j] * inv;
    }
    a[0] = T::one();
    Ok(FourierCoefficients { a, b, count: n })
}

/// Kernel-sum form of the estimate, `(1 / 2R) sum_r fejer(x, x_r, J)`.
/// Costs `O(R)` per query; used as the reference for the series form.
pub fn density_canonical<T: Scalar>(x: T, samples: &[T], cutoff: Cutoff) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let sum: T = samples.iter().map(|&s| fejer(x, s, cutoff)).sum();
    Ok(sum / (cst::<T>(2.0) * T::from_usize_lossy(samples.len())))
}

/// Series form of the estimate, `O(J)` per query.
pub fn density_noncanonical<T: Scalar>(x: T, coeffs: &FourierCoefficients<T>) -> T {
    let jn = coeffs.a.len() - 1;
    let mut cos_buf = vec![T::zero(); jn];
    let mut sin_buf = vec![T::zero(); jn];
    fill_trig_basis(x, &mut cos_buf, &mut sin_buf);
    let denom = T::from_usize_lossy(jn + 1);
    let mut out = coeffs.a[0] / cst(2.0);
    for j in 1..=jn {
        let w = T::from_usize_lossy(jn + 1 - j) / denom;
        out = out + w * (coeffs.a[j] * cos_buf[j - 1] + coeffs.b[j] * sin_buf[j - 1]);
    }
    out
}

/// Hart's data-driven cut-off: the `J` in `1..=j_max` maximizing
/// `sum_{j=1}^J (A_j^2 + B_j^2) - 2J / (R + 1)`. Ties go to the smaller `J`.
pub fn hart_cutoff<T: Scalar>(samples: &[T], j_max: Cutoff) -> Result<Cutoff> {
    let c = fourier_coeffs(samples, j_max)?;
    let penalty = cst::<T>(2.0) / T::from_usize_lossy(samples.len() + 1);
    let mut best = (1usize, T::neg_infinity());
    let mut energy = T::zero();
    for j in 1..=j_max.get() {
        energy = energy + c.a[j] * c.a[j] + c.b[j] * c.b[j];
        let crit = energy - penalty * T::from_usize_lossy(j);
        if crit > best.1 + cst(HART_TIE_EPS) {
            best = (j, crit);
        }
    }
    Cutoff::new(best.0)
}

/// Lower median of the per-pair optima.
pub fn median_cutoff(values: &[Cutoff]) -> Result<Cutoff> {
    if values.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    Ok(v[(v.len() - 1) / 2])
}

/// `ceil(2 max((R/C)^(1/3), 1))`, computed in integers as the smallest `n >= 2`
/// with `n^3 C >= 8 R`.
pub fn fixed_cutoff(total: usize, n_classes: usize) -> Cutoff {
    let (r, c) = (total.max(1) as u128, n_classes.max(1) as u128);
    let mut n: u128 = 2;
    while n * n * n * c < 8 * r {
        n += 1;
    }
    Cutoff::new(n as usize).expect("n >= 2")
}

/// Per-(class, dimension) Hart optima and their shared median.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffSelection {
    /// `(class index, dimension, J*)`, class-major.
    pub per_pair: Vec<(usize, usize, Cutoff)>,
    pub global: Cutoff,
}

/// Runs [`hart_cutoff`] on every (class, dimension) pair of `ds` in parallel
/// and takes the lower median over all pairs.
pub fn select_cutoff<T: Scalar>(ds: &Dataset<T>, j_max: Cutoff) -> Result<CutoffSelection> {
    let dim = ds.dim();
    let pairs: Vec<(usize, usize)> = (0..ds.n_classes()).flat_map(|c| (0..dim).map(move |d| (c, d))).collect();
    let per_pair = pairs
        .par_iter()
        .map(|&(c, d)| {
            let samples: Vec<T> = ds.classes()[c].instances.iter().map(|x| x.as_slice()[d]).collect();
            hart_cutoff(&samples, j_max).map(|j| (c, d, j))
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<Cutoff> = per_pair.iter().map(|p| p.2).collect();
    let global = median_cutoff(&values)?;
    Ok(CutoffSelection { per_pair, global })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cut(j: usize) -> Cutoff {
        Cutoff::new(j).unwrap()
    }

    /// Hart criterion evaluated from scratch for a single `J`, with direct cos/sin.
    fn criterion(samples: &[f64], j: usize) -> f64 {
        let r = samples.len() as f64;
        (1..=j)
            .map(|k| {
                let a = samples.iter().map(|x| (k as f64 * std::f64::consts::PI * x).cos()).sum::<f64>() / r;
                let b = samples.iter().map(|x| (k as f64 * std::f64::consts::PI * x).sin()).sum::<f64>() / r;
                a * a + b * b
            })
            .sum::<f64>()
            - 2.0 * j as f64 / (r + 1.0)
    }

    #[test]
    fn coefficient_examples() {
        let c = fourier_coeffs(&[0.0f64], cut(4)).unwrap();
        assert!(c.a().iter().all(|&v| v == 1.0));
        assert!(c.b().iter().all(|&v| v == 0.0));

        let c = fourier_coeffs(&[-0.5f64, 0.5], cut(1)).unwrap();
        assert_eq!(c.a()[0], 1.0);
        assert_abs_diff_eq!(c.a()[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.b()[1], 0.0, epsilon = 1e-15);

        let c = fourier_coeffs(&[1.0f64], cut(2)).unwrap();
        assert_abs_diff_eq!(c.a()[1], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.a()[2], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.b()[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.b()[2], 0.0, epsilon = 1e-15);
        assert_eq!(c.count(), 1);

        assert_eq!(fourier_coeffs::<f64>(&[], cut(2)), Err(Error::EmptySample));
    }

    #[test]
    fn canonical_examples() {
        assert_abs_diff_eq!(density_canonical(0.3f64, &[0.3], cut(4)).unwrap(), 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(density_canonical(0.0f64, &[-0.5, 0.5], cut(1)).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(density_canonical::<f64>(0.0, &[], cut(1)), Err(Error::EmptySample));
    }

    #[test]
    fn noncanonical_examples() {
        let c = fourier_coeffs(&[-0.5f64, 0.5], cut(1)).unwrap();
        assert_abs_diff_eq!(density_noncanonical(0.0, &c), 0.5, epsilon = 1e-15);
        let c = fourier_coeffs(&[0.0f64], cut(4)).unwrap();
        assert_abs_diff_eq!(density_noncanonical(0.0, &c), 2.5, epsilon = 1e-15);
    }

    #[test]
    fn forms_agree_on_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let r = rng.random_range(1..=50);
            let j = cut(rng.random_range(1..=12));
            let samples: Vec<f64> = (0..r).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let c = fourier_coeffs(&samples, j).unwrap();
            for _ in 0..20 {
                let x = rng.random_range(-1.0..=1.0);
                let diff = density_noncanonical(x, &c) - density_canonical(x, &samples, j).unwrap();
                assert!(diff.abs() < 1e-9, "{diff}");
            }
        }
    }

    #[test]
    fn hart_identical_samples_takes_max() {
        let samples = [0.37f64; 10];
        for j in 1..8 {
            assert!(criterion(&samples, j + 1) > criterion(&samples, j));
        }
        assert_eq!(hart_cutoff(&samples, cut(8)).unwrap(), cut(8));
    }

    #[test]
    fn hart_single_sample_ties_to_one() {
        for &x in &[0.0f64, 0.31, -0.77, 1.0] {
            for j in 1..=4 {
                assert!(criterion(&[x], j).abs() < 1e-12);
            }
            assert_eq!(hart_cutoff(&[x], cut(4)).unwrap(), cut(1));
        }
    }

    #[test]
    fn hart_uniform_samples_pick_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ones = 0;
        for _ in 0..20 {
            let samples: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
            let j = hart_cutoff(&samples, cut(8)).unwrap();
            let oracle = (1..=8)
                .max_by(|&a, &b| criterion(&samples, a).total_cmp(&criterion(&samples, b)).then(b.cmp(&a)))
                .unwrap();
            assert_eq!(j.get(), oracle);
            ones += (j.get() == 1) as usize;
        }
        assert!(ones >= 15, "{ones}");
    }

    #[test]
    fn median_examples() {
        let m = |v: &[usize]| median_cutoff(&v.iter().map(|&j| cut(j)).collect::<Vec<_>>()).unwrap().get();
        assert_eq!(m(&[3]), 3);
        assert_eq!(m(&[9, 1, 5]), 5);
        assert_eq!(m(&[8, 2, 6, 4]), 4);
        assert_eq!(median_cutoff(&[]), Err(Error::EmptySelection));
    }

    #[test]
    fn fixed_rule_examples() {
        assert_eq!(fixed_cutoff(250, 10).get(), 6);
        assert_eq!(fixed_cutoff(25, 1).get(), 6);
        assert_eq!(fixed_cutoff(10, 10).get(), 2);
        assert_eq!(fixed_cutoff(3, 10).get(), 2);
        assert_eq!(fixed_cutoff(80, 10).get(), 4);
        assert_eq!(fixed_cutoff(100, 10).get(), 5);
        // compare with floating evaluation away from exact cubes
        for r in 1..2000 {
            let v = 2.0 * (r as f64 / 7.0).cbrt().max(1.0);
            if (v - v.round()).abs() > 1e-9 {
                assert_eq!(fixed_cutoff(r, 7).get(), v.ceil() as usize);
            }
        }
    }

    #[test]
    fn selection_over_dataset() {
        use crate::features::NormalizedFeature;
        let rows = (0..12).map(|i| {
            let v = if i % 2 == 0 { vec![0.5, 0.5] } else { vec![0.1 * i as f64 - 0.6, 0.2] };
            (format!("c{}", i % 2), NormalizedFeature::from_bounded(v).unwrap())
        });
        let ds = Dataset::from_labeled(rows).unwrap();
        let sel = select_cutoff(&ds, cut(6)).unwrap();
        assert_eq!(sel.per_pair.len(), 4);
        // class 0 is constant in both dimensions
        assert_eq!(sel.per_pair[0].2, cut(6));
        assert_eq!(sel.per_pair[1].2, cut(6));
        let vals: Vec<_> = sel.per_pair.iter().map(|p| p.2).collect();
        assert_eq!(sel.global, median_cutoff(&vals).unwrap());
    }

    proptest! {
        #[test]
        fn coefficients_are_bounded(samples in prop::collection::vec(-1.0f64..=1.0, 1..40), j in 1usize..16) {
            let c = fourier_coeffs(&samples, cut(j)).unwrap();
            prop_assert_eq!(c.a()[0], 1.0);
            prop_assert_eq!(c.b()[0], 0.0);
            for k in 0..=j {
                prop_assert!(c.a()[k].abs() <= 1.0 + 1e-12 && c.b()[k].abs() <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn hart_is_permutation_invariant(mut samples in prop::collection::vec(-1.0f64..=1.0, 1..40), seed in any::<u64>()) {
            let before = hart_cutoff(&samples, cut(10)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..samples.len()).rev() {
                samples.swap(i, rng.random_range(0..=i));
            }
            prop_assert_eq!(before, hart_cutoff(&samples, cut(10)).unwrap());
        }

        #[test]
        fn noncanonical_is_nonnegative(samples in prop::collection::vec(-1.0f64..=1.0, 1..30), j in 1usize..12, x in -1.0f64..=1.0) {
            let c = fourier_coeffs(&samples, cut(j)).unwrap();
            prop_assert!(density_noncanonical(x, &c) >= -1e-9);
        }
    }
}
