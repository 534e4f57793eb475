use crate::error::Result;
use crate::features::NormalizedFeature;
use crate::scalar::Scalar;

/// Outcome of a single classification.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    /// Index of the winning class in sorted label order.
    pub class: usize,
    /// Per-class decision values; `class` is their argmax.
    pub scores: Vec<T>,
}

impl<T: Scalar> Prediction<T> {
    /// Argmax of `scores`, smallest index on ties.
    pub fn from_scores(scores: Vec<T>) -> Self {
        Prediction { class: argmax(&scores), scores }
    }
}

pub(crate) fn argmax<T: Scalar>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// A trained model that maps a feature vector to one of its classes.
pub trait Classifier<T: Scalar>: Send + Sync {
    fn labels(&self) -> Vec<&str>;

    fn dim(&self) -> usize;

    fn predict(&self, x: &NormalizedFeature<T>) -> Result<Prediction<T>>;
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(crate::error::Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
