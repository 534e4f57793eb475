//! Kernel and basis-function evaluations.
//!
//! Every function here is pure. The Dirichlet and Fejér kernels take scalar
//! feature values in `[-1, 1]` and depend on them only through `x - y`.

use crate::error::{Error, Result};
use crate::features::NormalizedFeature;
use crate::scalar::{cst, Scalar};

/// Below this magnitude `sin(pi * delta / 2)` is treated as zero and the
/// kernels return their analytic limits.
const SINGULARITY_EPS: f64 = 1e-12;

/// Truncation order `J` of the trigonometric series, always at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cutoff(usize);

impl Cutoff {
    pub fn new(j: usize) -> Result<Self> {
        if j == 0 {
            return Err(Error::Parameter("cut-off must be at least 1".into()));
        }
        Ok(Cutoff(j))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for Cutoff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Gaussian bandwidth, strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SmoothingSigma<T>(T);

impl<T: Scalar> SmoothingSigma<T> {
    pub fn new(sigma: T) -> Result<Self> {
        if !sigma.is_finite() || sigma <= T::zero() {
            return Err(Error::Parameter(format!("sigma must be positive and finite, got {sigma}")));
        }
        Ok(SmoothingSigma(sigma))
    }

    #[inline]
    pub fn get(self) -> T {
        self.0
    }
}

/// Log of the Gaussian Parzen kernel, `-D/2 log(2 pi sigma^2) - |x - y|^2 / (2 sigma^2)`.
pub fn log_gaussian_parzen<T: Scalar>(x: &[T], y: &[T], sigma: SmoothingSigma<T>) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let s2 = sigma.get() * sigma.get();
    let two = cst::<T>(2.0);
    let dist2 = squared_euclidean(x, y);
    let log_norm = -cst::<T>(x.len() as f64 / 2.0) * (two * T::PI() * s2).ln();
    Ok(log_norm - dist2 / (two * s2))
}

/// Gaussian Parzen kernel `(2 pi sigma^2)^(-D/2) exp(-|x - y|^2 / (2 sigma^2))`.
///
/// Underflows to zero for large `D` or distant points; classifiers work with
/// [`log_gaussian_parzen`] instead.
pub fn gaussian_parzen<T: Scalar>(
    x: &NormalizedFeature<T>,
    y: &NormalizedFeature<T>,
    sigma: SmoothingSigma<T>,
) -> Result<T> {
    log_gaussian_parzen(x.as_slice(), y.as_slice(), sigma).map(T::exp)
}

#[inline]
pub(crate) fn squared_euclidean<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| {
        let d = a - b;
        acc + d * d
    })
}

/// Dirichlet kernel `sin((J + 1/2) pi (x - y)) / sin(pi (x - y) / 2)`.
///
/// Returns the limit `2J + 1` where the denominator vanishes. Can be negative.
pub fn dirichlet<T: Scalar>(x: T, y: T, cutoff: Cutoff) -> T {
    let j = cst::<T>(cutoff.get() as f64);
    let half = cst::<T>(0.5);
    let delta = x - y;
    let den = (half * T::PI() * delta).sin();
    if den.abs() < cst(SINGULARITY_EPS) {
        return cst::<T>(2.0) * j + T::one();
    }
    ((j + half) * T::PI() * delta).sin() / den
}

/// Fejér kernel `(1/(J+1)) (1 - cos((J+1) pi (x - y))) / (1 - cos(pi (x - y)))`.
///
/// Evaluated through the equivalent squared-sine ratio
/// `sin^2((J+1) pi delta / 2) / ((J+1) sin^2(pi delta / 2))`, which avoids the
/// cancellation in `1 - cos` for small `delta`. Returns `J + 1` at the
/// removable singularities. Never negative.
pub fn fejer<T: Scalar>(x: T, y: T, cutoff: Cutoff) -> T {
    let n = cst::<T>((cutoff.get() + 1) as f64);
    let half_angle = cst::<T>(0.5) * T::PI() * (x - y);
    let den = half_angle.sin();
    if den.abs() < cst(SINGULARITY_EPS) {
        return n;
    }
    let num = (n * half_angle).sin();
    (num * num) / (n * den * den)
}

/// Values of `cos(j pi x)` and `sin(j pi x)` for `j = 1..=J`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigBasisTable<T> {
    cosines: Vec<T>,
    sines: Vec<T>,
}

impl<T: Scalar> TrigBasisTable<T> {
    pub fn cutoff(&self) -> usize {
        self.cosines.len()
    }

    /// `cos(j pi x)`, `j` is 1-based.
    #[inline]
    pub fn cos(&self, j: usize) -> T {
        self.cosines[j - 1]
    }

    /// `sin(j pi x)`, `j` is 1-based.
    #[inline]
    pub fn sin(&self, j: usize) -> T {
        self.sines[j - 1]
    }

    pub fn cosines(&self) -> &[T] {
        &self.cosines
    }

    pub fn sines(&self) -> &[T] {
        &self.sines
    }
}

/// Builds the basis table for `x` by angle-addition recursion.
///
/// Only `cos(pi x)` and `sin(pi x)` are evaluated with library calls.
pub fn trig_basis<T: Scalar>(x: T, cutoff: Cutoff) -> TrigBasisTable<T> {
    let mut cosines = vec![T::zero(); cutoff.get()];
    let mut sines = vec![T::zero(); cutoff.get()];
    fill_trig_basis(x, &mut cosines, &mut sines);
    TrigBasisTable { cosines, sines }
}

/// In-place variant of [`trig_basis`]: `cosines[j-1] = cos(j pi x)` and
/// `sines[j-1] = sin(j pi x)` for `j = 1..=cosines.len()`.
///
/// # Panics
/// If the two buffers differ in length.
#[inline]
pub fn fill_trig_basis<T: Scalar>(x: T, cosines: &mut [T], sines: &mut [T]) {
    assert_eq!(cosines.len(), sines.len());
    if cosines.is_empty() {
        return;
    }
    let (s1, c1) = (T::PI() * x).sin_cos();
    cosines[0] = c1;
    sines[0] = s1;
    for j in 1..cosines.len() {
        let (c, s) = (cosines[j - 1], sines[j - 1]);
        cosines[j] = c * c1 - s * s1;
        sines[j] = c * s1 + s * c1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cut(j: usize) -> Cutoff {
        Cutoff::new(j).unwrap()
    }

    #[test]
    fn cutoff_rejects_zero() {
        assert!(Cutoff::new(0).is_err());
        assert_eq!(cut(3).get(), 3);
    }

    #[test]
    fn sigma_must_be_positive() {
        assert!(SmoothingSigma::new(0.0f64).is_err());
        assert!(SmoothingSigma::new(-1.0f64).is_err());
        assert!(SmoothingSigma::new(f64::NAN).is_err());
    }

    #[test]
    fn gaussian_closed_forms() {
        let one = SmoothingSigma::new(1.0).unwrap();
        let a = NormalizedFeature::from_bounded(vec![0.0]).unwrap();
        let b = NormalizedFeature::from_bounded(vec![1.0]).unwrap();
        assert_abs_diff_eq!(gaussian_parzen(&a, &a, one).unwrap(), 0.398_942_280_401_432_7, epsilon = 1e-15);
        assert_abs_diff_eq!(
            gaussian_parzen(&a, &b, one).unwrap(),
            (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            epsilon = 1e-15
        );
        let x = NormalizedFeature::from_bounded(vec![0.6, 0.8, 0.0]).unwrap();
        let s = SmoothingSigma::new(0.3).unwrap();
        let expected = (2.0 * std::f64::consts::PI * 0.09f64).powf(-1.5);
        assert_abs_diff_eq!(gaussian_parzen(&x, &x, s).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_dimension_mismatch() {
        let a = NormalizedFeature::from_bounded(vec![0.0]).unwrap();
        let b = NormalizedFeature::from_bounded(vec![0.0, 1.0]).unwrap();
        let s = SmoothingSigma::new(1.0).unwrap();
        assert!(matches!(gaussian_parzen(&a, &b, s), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dirichlet_examples() {
        assert_eq!(dirichlet(0.2f64, 0.2, cut(3)), 7.0);
        assert_abs_diff_eq!(dirichlet(0.5f64, -0.5, cut(1)), -1.0, epsilon = 1e-15);
        // delta = 2 is also a removable singularity
        assert_eq!(dirichlet(1.0f64, -1.0, cut(4)), 9.0);
    }

    #[test]
    fn fejer_examples() {
        assert_eq!(fejer(-0.1f64, -0.1, cut(5)), 6.0);
        assert_abs_diff_eq!(fejer(0.5f64, 0.0, cut(1)), 1.0, epsilon = 1e-15);
        assert_eq!(fejer(-1.0f64, 1.0, cut(2)), 3.0);
        // zero where (J+1) delta is a nonzero even integer
        assert_abs_diff_eq!(fejer(0.5f64, -0.5, cut(1)), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn fejer_is_symmetric() {
        for &(x, y) in &[(0.3f64, -0.71), (0.999, -0.999), (0.1, 0.1 + 1e-9)] {
            for j in 1..20 {
                assert_eq!(fejer(x, y, cut(j)), fejer(y, x, cut(j)));
            }
        }
    }

    #[test]
    fn trig_basis_examples() {
        let t = trig_basis(0.0f64, cut(5));
        assert!(t.cosines().iter().all(|&c| c == 1.0));
        assert!(t.sines().iter().all(|&s| s == 0.0));

        let t = trig_basis(0.5f64, cut(2));
        assert_abs_diff_eq!(t.cos(1), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.cos(2), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.sin(1), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.sin(2), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn trig_basis_works_in_single_precision() {
        let t = trig_basis(0.25f32, cut(8));
        for j in 1..=8 {
            let direct = (j as f32 * std::f32::consts::PI * 0.25).cos();
            assert!((t.cos(j) - direct).abs() < 1e-5);
        }
    }
}
