//! Exhaustive search over all `K^N` selections, for small instances.

use crate::data::ProbabilityDataset;
use crate::error::{Error, Result};
use crate::objective::{evaluate, ObjectiveConfig, ObjectiveValue};
use crate::scalar::Scalar;
use crate::weights::{WeightScale, WeightSelection};

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    /// Lexicographically smallest selection attaining the minimum.
    pub selection: WeightSelection,
    pub value: ObjectiveValue<T>,
    pub evaluated: u64,
}

/// `K^N`, or `None` on overflow.
pub fn search_space_size(n: usize, k: usize) -> Option<u64> {
    (k as u64).checked_pow(u32::try_from(n).ok()?)
}

/// Evaluate every selection in lexicographic order and keep the first
/// strict minimum. Refuses when `K^N` exceeds `budget`.
pub fn enumerate_optimum<T: Scalar>(
    dataset: &ProbabilityDataset<T>,
    scale: &WeightScale<T>,
    config: &ObjectiveConfig<T>,
    budget: u64,
) -> Result<OracleResult<T>> {
    let n = dataset.num_classes();
    let k = scale.k_points();
    match search_space_size(n, k) {
        Some(count) if count <= budget => {}
        Some(count) => {
            return Err(Error::BudgetExceeded {
                count: count.to_string(),
                budget,
            })
        }
        None => {
            return Err(Error::BudgetExceeded {
                count: format!("{k}^{n}"),
                budget,
            })
        }
    }

    let mut indices = vec![1usize; n];
    let mut best: Option<(WeightSelection, ObjectiveValue<T>)> = None;
    let mut evaluated = 0u64;
    loop {
        let sel = WeightSelection::new(indices.clone(), k)?;
        let value = evaluate(dataset, &sel, scale, config)?;
        evaluated += 1;
        if best.as_ref().is_none_or(|(_, b)| value.total < b.total) {
            best = Some((sel, value));
        }
        // odometer, last class fastest
        let mut pos = n;
        loop {
            if pos == 0 {
                let (selection, value) = best.expect("at least one selection");
                return Ok(OracleResult {
                    selection,
                    value,
                    evaluated,
                });
            }
            pos -= 1;
            if indices[pos] < k {
                indices[pos] += 1;
                break;
            }
            indices[pos] = 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_every_selection() {
        let ds = ProbabilityDataset::new(
            2,
            vec![
                (vec![0.6, 0.4], 0),
                (vec![0.55, 0.45], 1),
                (vec![0.3, 0.7], 1),
            ],
        )
        .unwrap();
        let scale = WeightScale::new(2).unwrap();
        let cfg = ObjectiveConfig::default();
        let res = enumerate_optimum(&ds, &scale, &cfg, DEFAULT_BUDGET).unwrap();
        assert_eq!(res.evaluated, 4);
        for a in 1..=2 {
            for b in 1..=2 {
                let sel = WeightSelection::new(vec![a, b], 2).unwrap();
                assert!(evaluate(&ds, &sel, &scale, &cfg).unwrap().total >= res.value.total);
            }
        }
    }

    #[test]
    fn two_sample_instance_reaches_zero() {
        let ds =
            ProbabilityDataset::new(2, vec![(vec![0.6, 0.4], 0), (vec![0.55, 0.45], 1)]).unwrap();
        let scale = WeightScale::new(10).unwrap();
        let cfg = ObjectiveConfig {
            beta: 1.0,
            tau: 0.0,
            mu: 1e-3,
            use_z1: true,
            use_z2: true,
            use_z3: false,
        };
        let res = enumerate_optimum(&ds, &scale, &cfg, DEFAULT_BUDGET).unwrap();
        assert_eq!(res.value.total, 0.0);
        // class 0 must be down-weighted relative to class 1
        assert!(res.selection.get(0) < res.selection.get(1));
        assert_eq!(
            evaluate(&ds, &res.selection, &scale, &cfg).unwrap().total,
            0.0
        );
    }

    #[test]
    fn ties_resolve_to_smallest_selection() {
        let ds = ProbabilityDataset::new(
            3,
            vec![
                (vec![0.99, 0.005, 0.005], 0),
                (vec![0.005, 0.99, 0.005], 1),
                (vec![0.005, 0.005, 0.99], 2),
            ],
        )
        .unwrap();
        let scale = WeightScale::new(3).unwrap();
        let cfg = ObjectiveConfig {
            tau: 0.0,
            use_z3: false,
            ..ObjectiveConfig::default()
        };
        let res = enumerate_optimum(&ds, &scale, &cfg, DEFAULT_BUDGET).unwrap();
        assert_eq!(res.value.total, 0.0);
        assert_eq!(res.selection.indices(), &[1, 1, 1]);
    }

    #[test]
    fn budget_refusal_reports_count() {
        let ds = ProbabilityDataset::new(4, vec![(vec![0.25; 4], 0)]).unwrap();
        let scale = WeightScale::new(30).unwrap();
        match enumerate_optimum(&ds, &scale, &ObjectiveConfig::default(), 1000) {
            Err(Error::BudgetExceeded { count, budget }) => {
                assert_eq!(count, "810000");
                assert_eq!(budget, 1000);
            }
            other => panic!("{other:?}"),
        }
    }
}
