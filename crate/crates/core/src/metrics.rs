//! Predictions, confusion matrices and the class-accuracy imbalance metrics.
//!
//! Accuracy of class `i` is `counts[i][i] / row_total[i]`; a class with no
//! true samples has undefined accuracy and is left out of COBias and
//! COBias-single with a warning.

use serde::{Deserialize, Serialize};

use crate::data::ProbabilityDataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default add-mu smoothing constant for the PMI term.
pub const DEFAULT_MU: f64 = 1e-3;

/// Index of the largest score; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Argmax of `coefficients[n] * probs[n]` without length checks.
#[inline]
pub(crate) fn weighted_argmax<T: Scalar>(probs: &[T], coefficients: &[T]) -> usize {
    let mut best = 0;
    let mut best_score = coefficients[0] * probs[0];
    for n in 1..probs.len() {
        let s = coefficients[n] * probs[n];
        if s > best_score {
            best = n;
            best_score = s;
        }
    }
    best
}

/// Reweighted prediction; `None` means every coefficient is 1.
pub fn predict<T: Scalar>(probs: &[T], coefficients: Option<&[T]>) -> Result<usize> {
    match coefficients {
        None => Ok(argmax(probs)),
        Some(c) if c.len() != probs.len() => Err(Error::DimensionMismatch {
            expected: probs.len(),
            actual: c.len(),
        }),
        Some(c) => Ok(weighted_argmax(probs, c)),
    }
}

/// Predictions for every sample of a dataset.
pub fn predictions<T: Scalar>(
    dataset: &ProbabilityDataset<T>,
    coefficients: Option<&[T]>,
) -> Result<Vec<usize>> {
    check_coefficients(dataset, coefficients)?;
    Ok(match coefficients {
        None => dataset.iter().map(|(p, _)| argmax(p)).collect(),
        Some(c) => dataset.iter().map(|(p, _)| weighted_argmax(p, c)).collect(),
    })
}

fn check_coefficients<T: Scalar>(
    dataset: &ProbabilityDataset<T>,
    coefficients: Option<&[T]>,
) -> Result<()> {
    match coefficients {
        Some(c) if c.len() != dataset.num_classes() => Err(Error::DimensionMismatch {
            expected: dataset.num_classes(),
            actual: c.len(),
        }),
        _ => Ok(()),
    }
}

/// `counts[i][j]` = samples of true class `i` predicted as `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u64>>", into = "Vec<Vec<u64>>")]
pub struct ConfusionMatrix {
    n: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            counts: vec![0; n * n],
        }
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidConfig(
                "confusion matrix must be square".into(),
            ));
        }
        Ok(Self {
            n,
            counts: rows.into_iter().flatten().collect(),
        })
    }

    /// Tally true/predicted label pairs.
    pub fn from_pairs(n: usize, labels: &[usize], predicted: &[usize]) -> Self {
        let mut cm = Self::zeros(n);
        for (&y, &p) in labels.iter().zip(predicted) {
            cm.add(y, p);
        }
        cm
    }

    #[inline]
    pub(crate) fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.n + predicted] += 1;
    }

    #[inline]
    pub(crate) fn remove(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.n + predicted] -= 1;
    }

    pub fn num_classes(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.n + predicted]
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        &self.counts[truth * self.n..(truth + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.n).map(<[u64]>::to_vec).collect()
    }

    /// Row sums: true samples per class.
    pub fn class_totals(&self) -> Vec<u64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Column sums: predictions per class.
    pub fn prediction_totals(&self) -> Vec<u64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j)).sum())
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }
}

impl TryFrom<Vec<Vec<u64>>> for ConfusionMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<u64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<ConfusionMatrix> for Vec<Vec<u64>> {
    fn from(cm: ConfusionMatrix) -> Self {
        cm.rows()
    }
}

pub fn confusion<T: Scalar>(
    dataset: &ProbabilityDataset<T>,
    coefficients: Option<&[T]>,
) -> Result<ConfusionMatrix> {
    let predicted = predictions(dataset, coefficients)?;
    Ok(ConfusionMatrix::from_pairs(
        dataset.num_classes(),
        dataset.labels(),
        &predicted,
    ))
}

/// Per-class accuracy; `None` for classes with no true samples.
pub fn per_class_accuracy<T: Scalar>(cm: &ConfusionMatrix) -> Vec<Option<T>> {
    (0..cm.num_classes())
        .map(|i| {
            let total: u64 = cm.row(i).iter().sum();
            (total > 0).then(|| T::of(cm.get(i, i) as f64) / T::of(total as f64))
        })
        .collect()
}

pub fn overall_accuracy<T: Scalar>(cm: &ConfusionMatrix) -> T {
    let total = cm.total();
    if total == 0 {
        return T::zero();
    }
    T::of(cm.correct() as f64) / T::of(total as f64)
}

/// Mean absolute pairwise difference of the given class accuracies.
pub fn cobias<T: Scalar>(accuracies: &[T]) -> Result<T> {
    let n = accuracies.len();
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "COBias needs at least 2 classes, got {n}"
        )));
    }
    let mut sum = T::zero();
    for i in 0..n - 1 {
        for j in i + 1..n {
            sum = sum + (accuracies[i] - accuracies[j]).abs();
        }
    }
    let pairs = T::of_usize(n * (n - 1) / 2);
    Ok(sum / pairs)
}

/// COBias over the classes whose accuracy is defined. Fewer than two
/// defined classes leaves no pair to compare and yields zero.
pub fn cobias_defined<T: Scalar>(accuracies: &[Option<T>]) -> T {
    let defined: Vec<T> = accuracies.iter().flatten().copied().collect();
    if defined.len() < accuracies.len() {
        log::warn!(
            "{} class(es) have no true samples and are excluded from COBias",
            accuracies.len() - defined.len()
        );
    }
    cobias(&defined).unwrap_or_else(|_| T::zero())
}

/// For each true class, the other class that receives most of its
/// mispredictions (lowest index on ties); `None` for error-free rows.
pub fn odd_class(cm: &ConfusionMatrix) -> Vec<Option<usize>> {
    (0..cm.num_classes())
        .map(|i| {
            let mut best: Option<(usize, u64)> = None;
            for (j, &c) in cm.row(i).iter().enumerate() {
                if j == i || c == 0 {
                    continue;
                }
                if best.is_none_or(|(_, b)| c > b) {
                    best = Some((j, c));
                }
            }
            best.map(|(j, _)| j)
        })
        .collect()
}

/// Mean of `|A[odd_i] - A[i]|` over classes with an odd class and defined
/// accuracies on both ends.
pub fn cobias_single<T: Scalar>(per_class: &[Option<T>], odd: &[Option<usize>]) -> Result<T> {
    if per_class.len() != odd.len() {
        return Err(Error::DimensionMismatch {
            expected: per_class.len(),
            actual: odd.len(),
        });
    }
    let mut sum = T::zero();
    let mut terms = 0usize;
    for (i, o) in odd.iter().enumerate() {
        let Some(j) = *o else { continue };
        match (per_class[i], per_class.get(j).copied().flatten()) {
            (Some(a_i), Some(a_j)) => {
                sum = sum + (a_j - a_i).abs();
                terms += 1;
            }
            _ => log::warn!("class {i} or its odd class {j} has undefined accuracy; skipped"),
        }
    }
    if terms == 0 {
        return Err(Error::InvalidConfig(
            "COBias-single undefined: no class has an odd class".into(),
        ));
    }
    Ok(sum / T::of_usize(terms))
}

/// Smoothed PMI between "predicted j" and "labelled j" for every class.
///
/// Each ratio is `(count + mu) / (M + mu * N)`, so the smoothed ratios of a
/// full partition still sum to one. Natural log.
pub fn pmi_from_confusion<T: Scalar>(cm: &ConfusionMatrix, mu: T) -> Result<Vec<T>> {
    let n = cm.num_classes();
    let mut out = Vec::with_capacity(n);
    pmi_into(cm, mu, &mut out)?;
    Ok(out)
}

pub(crate) fn pmi_into<T: Scalar>(cm: &ConfusionMatrix, mu: T, out: &mut Vec<T>) -> Result<()> {
    let n = cm.num_classes();
    out.clear();
    let denom = T::of(cm.total() as f64) + mu * T::of_usize(n);
    for j in 0..n {
        let joint = cm.get(j, j);
        let predicted: u64 = (0..n).map(|i| cm.get(i, j)).sum();
        let truth: u64 = cm.row(j).iter().sum();
        if mu == T::zero() && (joint == 0 || predicted == 0 || truth == 0) {
            return Err(Error::PmiDomain { class: j });
        }
        let f = |c: u64| (T::of(c as f64) + mu) / denom;
        out.push((f(joint) / (f(predicted) * f(truth))).ln());
    }
    Ok(())
}

pub fn pmi_vector<T: Scalar>(
    dataset: &ProbabilityDataset<T>,
    coefficients: Option<&[T]>,
    mu: T,
) -> Result<Vec<T>> {
    if mu < T::zero() || !mu.is_finite() {
        return Err(Error::InvalidConfig(format!("mu must be >= 0, got {mu}")));
    }
    pmi_from_confusion(&confusion(dataset, coefficients)?, mu)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracyReport<T> {
    /// `None` marks a class with no true samples.
    pub per_class: Vec<Option<T>>,
    pub overall: T,
    pub cobias: T,
    /// `None` when no class has a misprediction.
    pub cobias_single: Option<T>,
    pub odd_class: Vec<Option<usize>>,
}

impl<T: Scalar> ClassAccuracyReport<T> {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Self {
        let per_class = per_class_accuracy(cm);
        let odd = odd_class(cm);
        let cobias_single = cobias_single(&per_class, &odd).ok();
        Self {
            overall: overall_accuracy(cm),
            cobias: cobias_defined(&per_class),
            cobias_single,
            odd_class: odd,
            per_class,
        }
    }

    /// Lowest defined per-class accuracy.
    pub fn worst_class(&self) -> T {
        self.per_class
            .iter()
            .flatten()
            .copied()
            .fold(T::one(), T::min)
    }
}

/// Everything `evaluate` prints: confusion matrix, accuracy report, PMI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport<T> {
    pub num_samples: usize,
    pub num_classes: usize,
    pub confusion: ConfusionMatrix,
    pub accuracy: ClassAccuracyReport<T>,
    pub mu: T,
    pub pmi: Vec<T>,
}

impl<T: Scalar> MetricsReport<T> {
    pub fn compute(
        dataset: &ProbabilityDataset<T>,
        coefficients: Option<&[T]>,
        mu: T,
    ) -> Result<Self> {
        let cm = confusion(dataset, coefficients)?;
        Self::from_confusion(cm, mu)
    }

    pub fn from_confusion(cm: ConfusionMatrix, mu: T) -> Result<Self> {
        Ok(Self {
            num_samples: cm.total() as usize,
            num_classes: cm.num_classes(),
            accuracy: ClassAccuracyReport::from_confusion(&cm),
            pmi: pmi_from_confusion(&cm, mu)?,
            mu,
            confusion: cm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ProbabilityDataset;

    fn table1() -> ConfusionMatrix {
        ConfusionMatrix::from_rows(vec![
            vec![1093, 64, 126, 3],
            vec![9, 1247, 14, 0],
            vec![25, 4, 1167, 8],
            vec![156, 27, 822, 235],
        ])
        .unwrap()
    }

    #[test]
    fn predict_examples() {
        let p = [0.5, 0.3, 0.2];
        assert_eq!(predict(&p, Some(&[0.4, 1.0, 1.0])).unwrap(), 1);
        assert_eq!(predict(&[0.5, 0.5], None).unwrap(), 0);
        for c in [0.001, 0.5, 3.0, 1e6] {
            assert_eq!(predict(&[0.1, 0.9], Some(&[c, c])).unwrap(), 1);
        }
        assert!(predict(&p, Some(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn confusion_counts_pairs() {
        let ds =
            ProbabilityDataset::new(2, vec![(vec![0.6, 0.4], 0), (vec![0.55, 0.45], 1)]).unwrap();
        let cm = confusion(&ds, None).unwrap();
        assert_eq!(cm.rows(), vec![vec![1, 0], vec![1, 0]]);
    }

    #[test]
    fn table1_totals_and_accuracy() {
        let cm = table1();
        assert_eq!(cm.class_totals(), vec![1286, 1270, 1204, 1240]);
        assert_eq!(cm.prediction_totals(), vec![1283, 1342, 2129, 246]);
        assert_eq!(cm.total(), 5000);
        assert_eq!(overall_accuracy::<f64>(&cm), 3742.0 / 5000.0);
    }

    #[test]
    fn cobias_examples() {
        // six pairs of the rounded table accuracies sum to 2.49
        let v = cobias::<f64>(&[0.85, 0.98, 0.97, 0.19]).unwrap();
        assert!((v - 0.415).abs() < 1e-12, "{v}");
        assert_eq!(cobias(&[0.3; 5]).unwrap(), 0.0);
        assert_eq!(cobias(&[1.0, 0.0]).unwrap(), 1.0);
        assert!(cobias(&[0.5]).is_err());
    }

    #[test]
    fn odd_class_examples() {
        let odd = odd_class(&table1());
        assert_eq!(odd, vec![Some(2), Some(2), Some(0), Some(2)]);
        let diag = ConfusionMatrix::from_rows(vec![vec![3, 0], vec![0, 4]]).unwrap();
        assert_eq!(odd_class(&diag), vec![None, None]);
        let tie =
            ConfusionMatrix::from_rows(vec![vec![1, 2, 2], vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
        assert_eq!(odd_class(&tie)[0], Some(1));
    }

    #[test]
    fn cobias_single_examples() {
        let acc = [Some(0.85), Some(0.98), Some(0.97), Some(0.19)];
        let odd = [Some(2), Some(2), Some(0), Some(2)];
        let v = cobias_single::<f64>(&acc, &odd).unwrap();
        assert!((v - 0.2575).abs() < 1e-12, "{v}");

        let cm = ConfusionMatrix::from_rows(vec![vec![3, 1], vec![0, 4]]).unwrap();
        let pc = per_class_accuracy::<f64>(&cm);
        let v = cobias_single(&pc, &odd_class(&cm)).unwrap();
        assert_eq!(v, (1.0 - 0.75f64).abs());

        assert!(cobias_single::<f64>(&[Some(1.0), Some(1.0)], &[None, None]).is_err());
    }

    #[test]
    fn pmi_examples() {
        // labels (0,0,1,1), predictions (0,1,1,1)
        let cm = ConfusionMatrix::from_pairs(2, &[0, 0, 1, 1], &[0, 1, 1, 1]);
        let pmi = pmi_from_confusion::<f64>(&cm, 0.0).unwrap();
        assert!((pmi[1] - (4.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!((pmi[1] - 0.28768).abs() < 1e-5);

        // exact independence: each class predicted half the time within each label
        let cm = ConfusionMatrix::from_pairs(2, &[0, 0, 1, 1], &[0, 1, 0, 1]);
        assert_eq!(pmi_from_confusion(&cm, 0.0).unwrap(), vec![0.0, 0.0]);

        // class 1 never predicted
        let labels: Vec<usize> = (0..100).map(|m| m % 2).collect();
        let cm = ConfusionMatrix::from_pairs(2, &labels, &[0; 100]);
        assert!(matches!(
            pmi_from_confusion(&cm, 0.0),
            Err(Error::PmiDomain { class: 1 })
        ));
        let mu: f64 = 0.001;
        let pmi = pmi_from_confusion(&cm, mu).unwrap();
        let d = 100.0 + mu * 2.0;
        let expect = ((0.0 + mu) / d / (((0.0 + mu) / d) * ((50.0 + mu) / d))).ln();
        assert!((pmi[1] - expect).abs() < 1e-12);
        assert!(pmi.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn undefined_class_excluded() {
        let cm =
            ConfusionMatrix::from_rows(vec![vec![2, 0, 0], vec![0, 0, 0], vec![1, 0, 1]]).unwrap();
        let rep = ClassAccuracyReport::<f64>::from_confusion(&cm);
        assert_eq!(rep.per_class, vec![Some(1.0), None, Some(0.5)]);
        assert_eq!(rep.cobias, 0.5);
        assert_eq!(rep.cobias_single, Some(0.5));
    }
}
