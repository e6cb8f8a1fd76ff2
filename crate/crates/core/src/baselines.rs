//! Reference corrections to compare against: none, and batch calibration.

use serde::{Deserialize, Serialize};

use crate::anneal::{anneal, AnnealSchedule};
use crate::data::ProbabilityDataset;
use crate::error::{Error, Result};
use crate::metrics::{argmax, ClassAccuracyReport, ConfusionMatrix};
use crate::objective::ObjectiveConfig;
use crate::scalar::Scalar;
use crate::weights::{WeightScale, WeightSelection};

#[derive(Debug, Clone, PartialEq)]
pub struct BatchCalibration<T> {
    /// Component-wise mean probability vector of the batch.
    pub prior: Vec<T>,
    /// `p_m - prior`, row-major; entries may be negative.
    pub scores: Vec<T>,
    pub predictions: Vec<usize>,
}

/// Subtract the batch-mean probability vector from every sample and take
/// the argmax. Labels are not used.
pub fn batch_calibrate<T: Scalar>(dataset: &ProbabilityDataset<T>) -> BatchCalibration<T> {
    let n = dataset.num_classes();
    let m = T::of_usize(dataset.len());
    let mut prior = vec![T::zero(); n];
    for (p, _) in dataset.iter() {
        for (acc, &v) in prior.iter_mut().zip(p) {
            *acc = *acc + v;
        }
    }
    prior.iter_mut().for_each(|v| *v = *v / m);

    let mut scores = Vec::with_capacity(dataset.len() * n);
    let mut predictions = Vec::with_capacity(dataset.len());
    for (p, _) in dataset.iter() {
        let start = scores.len();
        scores.extend(p.iter().zip(&prior).map(|(&a, &b)| a - b));
        predictions.push(argmax(&scores[start..]));
    }
    BatchCalibration {
        prior,
        scores,
        predictions,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow<T> {
    pub method: String,
    pub accuracy: T,
    pub cobias: T,
    pub cobias_single: Option<T>,
    pub worst_class_accuracy: T,
}

impl<T: Scalar> MethodRow<T> {
    pub fn from_confusion(method: &str, cm: &ConfusionMatrix) -> Self {
        let rep = ClassAccuracyReport::<T>::from_confusion(cm);
        Self {
            method: method.to_string(),
            accuracy: rep.overall,
            cobias: rep.cobias,
            cobias_single: rep.cobias_single,
            worst_class_accuracy: rep.worst_class(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport<T> {
    pub rows: Vec<MethodRow<T>>,
    pub dnip_selection: WeightSelection,
}

/// Identity, batch calibration and DNIP on the test set. DNIP weights are
/// learned from the optimization set alone.
pub fn compare_methods<T: Scalar>(
    optimization: &ProbabilityDataset<T>,
    test: &ProbabilityDataset<T>,
    scale: &WeightScale<T>,
    config: &ObjectiveConfig<T>,
    schedule: &AnnealSchedule,
) -> Result<ComparisonReport<T>> {
    if optimization.num_classes() != test.num_classes() {
        return Err(Error::DimensionMismatch {
            expected: optimization.num_classes(),
            actual: test.num_classes(),
        });
    }
    let n = test.num_classes();
    let identity = crate::metrics::confusion(test, None)?;
    let bc = batch_calibrate(test);
    let calibrated = ConfusionMatrix::from_pairs(n, test.labels(), &bc.predictions);
    let outcome = anneal(optimization, scale, config, schedule)?;
    let coefs = outcome.selection.coefficients(scale);
    let dnip = crate::metrics::confusion(test, Some(&coefs))?;
    Ok(ComparisonReport {
        rows: vec![
            MethodRow::from_confusion("identity", &identity),
            MethodRow::from_confusion("batch_calibration", &calibrated),
            MethodRow::from_confusion("dnip", &dnip),
        ],
        dnip_selection: outcome.selection,
    })
}
