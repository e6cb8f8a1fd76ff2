//! The debiasing objective: error rate, COBias and the smoothed PMI sum.
//!
//! `total = z1 + beta * z2 - tau * z3`, each term present only when enabled.
//! Everything is computed from the confusion matrix, so any two routes
//! that reach the same predictions produce bit-identical values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::ProbabilityDataset;
use crate::error::{Error, Result};
use crate::metrics::{
    cobias_defined, confusion, per_class_accuracy, pmi_into, weighted_argmax, ConfusionMatrix,
    DEFAULT_MU,
};
use crate::scalar::Scalar;
use crate::weights::{WeightScale, WeightSelection};

pub const DEFAULT_BETA: f64 = 2.7;
pub const DEFAULT_TAU: f64 = 0.2;
pub const DEFAULT_K: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig<T> {
    pub beta: T,
    pub tau: T,
    pub mu: T,
    pub use_z1: bool,
    pub use_z2: bool,
    pub use_z3: bool,
}

impl<T: Scalar> Default for ObjectiveConfig<T> {
    fn default() -> Self {
        Self {
            beta: T::of(DEFAULT_BETA),
            tau: T::of(DEFAULT_TAU),
            mu: T::of(DEFAULT_MU),
            use_z1: true,
            use_z2: true,
            use_z3: true,
        }
    }
}

impl<T: Scalar> ObjectiveConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.use_z1 || self.use_z2 || self.use_z3) {
            return Err(Error::InvalidConfig(
                "at least one objective term must be enabled".into(),
            ));
        }
        for (name, v) in [("beta", self.beta), ("tau", self.tau), ("mu", self.mu)] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Configuration for one of the seven term combinations. Single-term
    /// combinations carry unit weight so their total is the bare term.
    pub fn with_terms(&self, terms: Terms) -> Self {
        let (z1, z2, z3) = terms.flags();
        let mut cfg = Self {
            use_z1: z1,
            use_z2: z2,
            use_z3: z3,
            ..*self
        };
        match terms {
            Terms::Z2 => cfg.beta = T::one(),
            Terms::Z3 => cfg.tau = T::one(),
            _ => {}
        }
        cfg
    }
}

/// The seven objective-term combinations used for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Terms {
    Z1,
    Z2,
    Z3,
    Z1Z2,
    Z1Z3,
    Z2Z3,
    All,
}

impl Terms {
    pub const ALL: [Terms; 7] = [
        Terms::Z1,
        Terms::Z2,
        Terms::Z3,
        Terms::Z1Z2,
        Terms::Z1Z3,
        Terms::Z2Z3,
        Terms::All,
    ];

    pub fn flags(self) -> (bool, bool, bool) {
        match self {
            Terms::Z1 => (true, false, false),
            Terms::Z2 => (false, true, false),
            Terms::Z3 => (false, false, true),
            Terms::Z1Z2 => (true, true, false),
            Terms::Z1Z3 => (true, false, true),
            Terms::Z2Z3 => (false, true, true),
            Terms::All => (true, true, true),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Terms::Z1 => "z1",
            Terms::Z2 => "z2",
            Terms::Z3 => "z3",
            Terms::Z1Z2 => "z1+βz2",
            Terms::Z1Z3 => "z1−τz3",
            Terms::Z2Z3 => "βz2−τz3",
            Terms::All => "z1+βz2−τz3",
        }
    }
}

impl fmt::Display for Terms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Terms {
    type Err = Error;

    /// Accepts the display labels, ASCII spellings such as `z1+z2-z3`, and `all`.
    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| !c.is_whitespace() && !matches!(c, 'β' | 'τ' | 'b' | 't'))
            .map(|c| if c == '−' { '-' } else { c })
            .collect();
        match norm.to_ascii_lowercase().as_str() {
            "z1" => Ok(Terms::Z1),
            "z2" => Ok(Terms::Z2),
            "z3" => Ok(Terms::Z3),
            "z1+z2" => Ok(Terms::Z1Z2),
            "z1-z3" => Ok(Terms::Z1Z3),
            "z2-z3" => Ok(Terms::Z2Z3),
            "z1+z2-z3" | "all" | "full" => Ok(Terms::All),
            _ => Err(Error::InvalidConfig(format!(
                "unknown term combination {s:?}"
            ))),
        }
    }
}

/// Objective terms; disabled terms are `None` and contribute nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue<T> {
    pub z1_error_rate: Option<T>,
    pub z2_cobias: Option<T>,
    pub z3_pmi_sum: Option<T>,
    pub total: T,
}

/// Objective value of a confusion matrix. `pmi_buf` is scratch space.
pub(crate) fn value_from_confusion<T: Scalar>(
    cm: &ConfusionMatrix,
    config: &ObjectiveConfig<T>,
    pmi_buf: &mut Vec<T>,
) -> Result<ObjectiveValue<T>> {
    let mut total = T::zero();
    let z1 = config.use_z1.then(|| {
        let m = cm.total();
        T::of((m - cm.correct()) as f64) / T::of(m as f64)
    });
    if let Some(z1) = z1 {
        total = total + z1;
    }
    let z2 = config
        .use_z2
        .then(|| cobias_defined(&per_class_accuracy::<T>(cm)));
    if let Some(z2) = z2 {
        total = total + config.beta * z2;
    }
    let z3 = if config.use_z3 {
        pmi_into(cm, config.mu, pmi_buf)?;
        Some(pmi_buf.iter().copied().sum::<T>())
    } else {
        None
    };
    if let Some(z3) = z3 {
        total = total - config.tau * z3;
    }
    Ok(ObjectiveValue {
        z1_error_rate: z1,
        z2_cobias: z2,
        z3_pmi_sum: z3,
        total,
    })
}

/// Full evaluation of the objective at `selection`.
pub fn evaluate<T: Scalar>(
    dataset: &ProbabilityDataset<T>,
    selection: &WeightSelection,
    scale: &WeightScale<T>,
    config: &ObjectiveConfig<T>,
) -> Result<ObjectiveValue<T>> {
    config.validate()?;
    selection.check(dataset.num_classes(), scale.k_points())?;
    let coefficients = selection.coefficients(scale);
    let cm = confusion(dataset, Some(&coefficients))?;
    value_from_confusion(&cm, config, &mut Vec::new())
}

/// Objective evaluator that caches per-sample predictions so a one-class
/// weight change only re-scores the samples whose argmax can move.
///
/// Usage: [`propose`](Self::propose) a change, then [`commit`](Self::commit)
/// it or drop it by proposing something else.
#[derive(Debug, Clone)]
pub struct IncrementalEvaluator<'a, T> {
    dataset: &'a ProbabilityDataset<T>,
    fingerprint: String,
    scale: WeightScale<T>,
    config: ObjectiveConfig<T>,
    selection: WeightSelection,
    coefficients: Vec<T>,
    predicted: Vec<usize>,
    /// Weighted score of each sample's predicted class.
    top_score: Vec<T>,
    cm: ConfusionMatrix,
    value: ObjectiveValue<T>,
    pending: Option<Pending<T>>,
    scratch_coefs: Vec<T>,
    pmi_buf: Vec<T>,
}

#[derive(Debug, Clone)]
struct Pending<T> {
    class: usize,
    index: usize,
    /// (sample, new prediction, new top score)
    changes: Vec<(usize, usize, T)>,
    cm: ConfusionMatrix,
    value: ObjectiveValue<T>,
}

impl<'a, T: Scalar> IncrementalEvaluator<'a, T> {
    pub fn new(
        dataset: &'a ProbabilityDataset<T>,
        scale: WeightScale<T>,
        config: ObjectiveConfig<T>,
        selection: WeightSelection,
    ) -> Result<Self> {
        config.validate()?;
        selection.check(dataset.num_classes(), scale.k_points())?;
        let coefficients = selection.coefficients(&scale);
        let mut predicted = Vec::with_capacity(dataset.len());
        let mut top_score = Vec::with_capacity(dataset.len());
        let mut cm = ConfusionMatrix::zeros(dataset.num_classes());
        for (p, y) in dataset.iter() {
            let j = weighted_argmax(p, &coefficients);
            predicted.push(j);
            top_score.push(coefficients[j] * p[j]);
            cm.add(y, j);
        }
        let mut pmi_buf = Vec::new();
        let value = value_from_confusion(&cm, &config, &mut pmi_buf)?;
        Ok(Self {
            dataset,
            fingerprint: dataset.fingerprint(),
            scratch_coefs: coefficients.clone(),
            scale,
            config,
            selection,
            coefficients,
            predicted,
            top_score,
            cm,
            value,
            pending: None,
            pmi_buf,
        })
    }

    pub fn value(&self) -> &ObjectiveValue<T> {
        &self.value
    }

    pub fn selection(&self) -> &WeightSelection {
        &self.selection
    }

    pub fn confusion(&self) -> &ConfusionMatrix {
        &self.cm
    }

    pub fn scale(&self) -> &WeightScale<T> {
        &self.scale
    }

    pub fn config(&self) -> &ObjectiveConfig<T> {
        &self.config
    }

    /// Fails if `dataset` is not the one this cache was built from.
    pub fn verify(&self, dataset: &ProbabilityDataset<T>) -> Result<()> {
        if dataset.fingerprint() != self.fingerprint {
            return Err(Error::StaleState(
                "dataset fingerprint differs from the cached evaluation".into(),
            ));
        }
        Ok(())
    }

    /// Objective value with class `class` moved to scale index `index`,
    /// leaving the committed state untouched.
    pub fn propose(&mut self, class: usize, index: usize) -> Result<ObjectiveValue<T>> {
        let n = self.dataset.num_classes();
        if class >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: class + 1,
            });
        }
        if index == 0 || index > self.scale.k_points() {
            return Err(Error::InvalidConfig(format!(
                "index {index} outside 1..={}",
                self.scale.k_points()
            )));
        }

        let old_w = self.coefficients[class];
        let new_w = self.scale.value(index);
        let mut pending = self.pending.take().unwrap_or_else(|| Pending {
            class,
            index,
            changes: Vec::new(),
            cm: self.cm.clone(),
            value: self.value,
        });
        pending.class = class;
        pending.index = index;
        pending.changes.clear();
        pending.cm.clone_from(&self.cm);

        if new_w != old_w {
            self.scratch_coefs.copy_from_slice(&self.coefficients);
            self.scratch_coefs[class] = new_w;
            let lowered = new_w < old_w;
            for (m, (p, y)) in self.dataset.iter().enumerate() {
                let pred = self.predicted[m];
                let s = new_w * p[class];
                if pred == class {
                    if lowered {
                        let j = weighted_argmax(p, &self.scratch_coefs);
                        pending.changes.push((m, j, self.scratch_coefs[j] * p[j]));
                        if j != class {
                            pending.cm.remove(y, class);
                            pending.cm.add(y, j);
                        }
                    } else {
                        pending.changes.push((m, class, s));
                    }
                } else if !lowered {
                    let top = self.top_score[m];
                    if s > top || (s == top && class < pred) {
                        pending.changes.push((m, class, s));
                        pending.cm.remove(y, pred);
                        pending.cm.add(y, class);
                    }
                }
            }
            pending.value = value_from_confusion(&pending.cm, &self.config, &mut self.pmi_buf)?;
        } else {
            pending.value = self.value;
        }
        let value = pending.value;
        self.pending = Some(pending);
        Ok(value)
    }

    /// Make the last proposal the current state.
    pub fn commit(&mut self) {
        let Some(p) = self.pending.as_mut() else {
            return;
        };
        self.coefficients[p.class] = self.scale.value(p.index);
        self.selection.set(p.class, p.index);
        for &(m, j, s) in &p.changes {
            self.predicted[m] = j;
            self.top_score[m] = s;
        }
        std::mem::swap(&mut self.cm, &mut p.cm);
        self.value = p.value;
        p.changes.clear();
    }

    /// Propose and commit in one step.
    pub fn apply(&mut self, class: usize, index: usize) -> Result<ObjectiveValue<T>> {
        let v = self.propose(class, index)?;
        self.commit();
        Ok(v)
    }
}
