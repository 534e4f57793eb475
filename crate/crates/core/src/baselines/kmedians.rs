//! Coordinate-wise k-medians with L1 assignment and farthest-point seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{cst, Scalar};

pub const DEFAULT_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KMedians<T> {
    pub centroids: Vec<Vec<T>>,
    /// Centroid index of every input point.
    pub assignments: Vec<usize>,
    /// Sum of L1 distances to the assigned centroid, recorded after every
    /// assignment step.
    pub objective: Vec<T>,
    pub iterations: usize,
}

pub fn l1_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + (x - y).abs())
}

fn nearest<T: Scalar>(p: &[T], centroids: &[Vec<T>]) -> (usize, T) {
    let mut best = (0, l1_distance(p, &centroids[0]));
    for (i, c) in centroids.iter().enumerate().skip(1) {
        let d = l1_distance(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn median<T: Scalar>(values: &mut [T]) -> T {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / cst(2.0)
    }
}

/// Partitions `points` into at most `k` clusters.
///
/// The first seed is drawn uniformly from `points` using `seed`; further seeds
/// are the points farthest (in L1) from all seeds chosen so far. Iterates
/// assignment and median updates until assignments stop changing or
/// `max_iters` is reached. A cluster that loses all its points is moved to the
/// point farthest from its current centroid. With `k >= points.len()` every
/// point is its own centroid.
pub fn kmedians<T: Scalar>(points: &[&[T]], k: usize, seed: u64, max_iters: usize) -> Result<KMedians<T>> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
    }
    let n = points.len();
    if k >= n {
        let centroids: Vec<Vec<T>> = points.iter().map(|p| p.to_vec()).collect();
        return Ok(KMedians { centroids, assignments: (0..n).collect(), objective: vec![T::zero()], iterations: 0 });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..n);
    let mut centroids = vec![points[first].to_vec()];
    let mut min_dist: Vec<T> = points.iter().map(|p| l1_distance(p, &centroids[0])).collect();
    while centroids.len() < k {
        let far = farthest(&min_dist);
        centroids.push(points[far].to_vec());
        for (m, p) in min_dist.iter_mut().zip(points) {
            *m = m.min(l1_distance(p, &centroids[centroids.len() - 1]));
        }
    }

    let mut assignments = vec![usize::MAX; n];
    let mut dists = vec![T::zero(); n];
    let mut objective = Vec::new();
    let mut iterations = 0;
    let mut coord = Vec::with_capacity(n);
    for _ in 0..max_iters.max(1) {
        iterations += 1;
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            changed |= assignments[i] != c;
            assignments[i] = c;
            dists[i] = d;
        }
        objective.push(dists.iter().copied().sum());
        if !changed {
            break;
        }
        let mut sizes = vec![0usize; k];
        assignments.iter().for_each(|&a| sizes[a] += 1);
        for (c, centroid) in centroids.iter_mut().enumerate() {
            if sizes[c] == 0 {
                continue;
            }
            for (j, slot) in centroid.iter_mut().enumerate() {
                coord.clear();
                coord.extend(points.iter().zip(&assignments).filter(|(_, &a)| a == c).map(|(p, _)| p[j]));
                *slot = median(&mut coord);
            }
        }
        // Re-seed empty clusters, each to a distinct far point.
        for c in (0..k).filter(|&c| sizes[c] == 0) {
            let far = farthest(&dists);
            centroids[c] = points[far].to_vec();
            dists[far] = T::neg_infinity();
        }
    }
    Ok(KMedians { centroids, assignments, objective, iterations })
}

fn farthest<T: Scalar>(d: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in d.iter().enumerate() {
        if v > d[best] {
            best = i;
        }
    }
    best
}
