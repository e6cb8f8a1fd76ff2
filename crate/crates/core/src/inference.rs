//! Applying learned coefficients to probability vectors.

use crate::data::ProbabilityDataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `coefficients[n] * probs[n]`, optionally renormalized to sum to one.
pub fn reweight<T: Scalar>(probs: &[T], coefficients: &[T], renormalize: bool) -> Result<Vec<T>> {
    if probs.len() != coefficients.len() {
        return Err(Error::DimensionMismatch {
            expected: probs.len(),
            actual: coefficients.len(),
        });
    }
    let mut out: Vec<T> = probs
        .iter()
        .zip(coefficients)
        .map(|(&p, &c)| c * p)
        .collect();
    if renormalize {
        let sum: T = out.iter().copied().sum();
        if sum > T::zero() {
            out.iter_mut().for_each(|v| *v = *v / sum);
        }
    }
    Ok(out)
}

/// `(true class, value)` per sample, where value is the (reweighted)
/// probability of the sample's own label. Sample order is preserved.
pub fn true_class_values<T: Scalar>(
    dataset: &ProbabilityDataset<T>,
    coefficients: Option<&[T]>,
    renormalize: bool,
) -> Result<Vec<(usize, T)>> {
    dataset
        .iter()
        .map(|(p, y)| match coefficients {
            None => Ok((y, p[y])),
            Some(c) => Ok((y, reweight(p, c, renormalize)?[y])),
        })
        .collect()
}
