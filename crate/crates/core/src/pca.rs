//! Principal component projection applied before classification.
//!
//! The decomposition runs in `f64` through a thin SVD of the centered data
//! matrix, which avoids forming the `D x D` covariance when `R < D`.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::features::{l2_normalize, Dataset, NormalizedFeature};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaTransform<T> {
    mean: Vec<T>,
    /// `target_dim` rows of length `D`, row-major.
    projection: Vec<T>,
    /// Sample-covariance eigenvalue of each retained row.
    variances: Vec<T>,
    dim: usize,
    target_dim: usize,
}

impl<T: Scalar> PcaTransform<T> {
    /// Builds a transform from explicit parts. Rows are not checked for
    /// orthonormality.
    pub fn from_parts(mean: Vec<T>, rows: Vec<Vec<T>>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || rows.is_empty() || rows.len() > dim {
            return Err(Error::Dimension(format!("{} projection rows for input dimension {dim}", rows.len())));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
        }
        let target_dim = rows.len();
        Ok(PcaTransform { mean, projection: rows.concat(), variances: vec![T::zero(); target_dim], dim, target_dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn row(&self, k: usize) -> &[T] {
        &self.projection[k * self.dim..(k + 1) * self.dim]
    }

    pub fn variances(&self) -> &[T] {
        &self.variances
    }

    /// `projection * (v - mean)` without re-normalization.
    pub fn project(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok((0..self.target_dim)
            .map(|k| {
                self.row(k)
                    .iter()
                    .zip(v.iter().zip(&self.mean))
                    .fold(T::zero(), |acc, (&p, (&x, &m))| acc + p * (x - m))
            })
            .collect())
    }

    /// Projects and re-normalizes to unit length.
    pub fn apply(&self, v: &NormalizedFeature<T>) -> Result<NormalizedFeature<T>> {
        l2_normalize(&self.project(v.as_slice())?)
    }

    pub fn apply_dataset(&self, ds: &Dataset<T>) -> Result<Dataset<T>> {
        ds.try_map(|x| self.apply(x))
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "PCA v1")?;
        writeln!(w, "dim {} target {}", self.dim, self.target_dim)?;
        writeln!(w, "mean {}", join(&self.mean))?;
        for k in 0..self.target_dim {
            writeln!(w, "{}", join(self.row(k)))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = |what: &str| -> Result<String> {
            lines.next().transpose()?.ok_or_else(|| Error::Format(format!("PCA file truncated before {what}")))
        };
        let header = next("header")?;
        if header.trim_end() != "PCA v1" {
            return Err(Error::Version(header));
        }
        let shape = next("shape")?;
        let parts: Vec<&str> = shape.split_whitespace().collect();
        let (dim, target_dim) = match parts.as_slice() {
            ["dim", d, "target", k] => (parse_usize(d)?, parse_usize(k)?),
            _ => return Err(Error::Format(format!("bad PCA shape line `{shape}`"))),
        };
        let mean_line = next("mean")?;
        let mean = parse_values::<T>(
            mean_line.strip_prefix("mean ").ok_or_else(|| Error::Format("missing mean line".into()))?,
            dim,
        )?;
        let rows =
            (0..target_dim).map(|_| parse_values::<T>(&next("projection row")?, dim)).collect::<Result<Vec<_>>>()?;
        PcaTransform::from_parts(mean, rows)
    }
}

fn join<T: Scalar>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Format(format!("invalid integer `{s}`")))
}

fn parse_values<T: Scalar>(line: &str, n: usize) -> Result<Vec<T>> {
    let v = line
        .split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| Error::Format(format!("invalid number `{t}`"))))
        .collect::<Result<Vec<T>>>()?;
    if v.len() != n {
        return Err(Error::Format(format!("expected {n} values, found {}", v.len())));
    }
    Ok(v)
}

/// Fits a PCA with `target_dim` components on every instance of `ds`.
///
/// Rows are the leading eigenvectors of the sample covariance (denominator
/// `R - 1`) in descending eigenvalue order, each signed so that its
/// largest-magnitude entry is non-negative.
pub fn fit_pca<T: Scalar>(ds: &Dataset<T>, target_dim: usize) -> Result<PcaTransform<T>> {
    let (r, d) = (ds.len(), ds.dim());
    if target_dim == 0 || target_dim > d.min(r) {
        return Err(Error::Dimension(format!(
            "target dimension {target_dim} outside 1..={} (D = {d}, R = {r})",
            d.min(r)
        )));
    }
    let mut mean = vec![0.0f64; d];
    for (_, x) in ds.iter() {
        for (m, &v) in mean.iter_mut().zip(x.as_slice()) {
            *m += v.to_f64_lossy();
        }
    }
    mean.iter_mut().for_each(|m| *m /= r as f64);

    let rows: Vec<&NormalizedFeature<T>> = ds.iter().map(|(_, x)| x).collect();
    let centered = DMatrix::from_fn(r, d, |i, j| rows[i].as_slice()[j].to_f64_lossy() - mean[j]);
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));

    let denom = (r.max(2) - 1) as f64;
    let mut projection = Vec::with_capacity(target_dim * d);
    let mut variances = Vec::with_capacity(target_dim);
    for &k in order.iter().take(target_dim) {
        let row = v_t.row(k);
        let pivot = row.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        projection.extend(row.iter().map(|&x| T::from_f64_lossy(sign * x)));
        let s = svd.singular_values[k];
        variances.push(T::from_f64_lossy(s * s / denom));
    }
    Ok(PcaTransform {
        mean: mean.into_iter().map(T::from_f64_lossy).collect(),
        projection,
        variances,
        dim: d,
        target_dim,
    })
}
