//! Simulated annealing over weight selections.
//!
//! Geometric cooling `T_t = T_max * alpha^t`, one-class perturbations, and
//! Metropolis acceptance `exp(-dz / T)` for worse moves. The search starts
//! from the all-ones coefficient vector and returns the best selection seen.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`; the
//! stream is portable across platforms. Independent restarts use distinct
//! seeds, never a shared generator.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ProbabilityDataset;
use crate::error::{Error, Result};
use crate::objective::{IncrementalEvaluator, ObjectiveConfig, ObjectiveValue};
use crate::scalar::Scalar;
use crate::weights::{WeightScale, WeightSelection};

pub const DEFAULT_T_MAX: f64 = 200_000.0;
pub const DEFAULT_T_MIN: f64 = 0.1;
pub const DEFAULT_ALPHA: f64 = 0.95;
pub const DEFAULT_LAMBDA: f64 = 5.0;

/// Slack for `ceil` on values that should be whole numbers but carry
/// rounding error, e.g. `ln(alpha) / ln(alpha)`.
const CEIL_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub t_max: f64,
    pub t_min: f64,
    pub alpha: f64,
    /// Inner loop runs for `ceil(lambda * N * K)` proposals at most.
    pub lambda: f64,
    /// Inner loop also stops after this many accepted moves;
    /// `None` means `ceil(0.1 * lambda * N * K)`.
    pub max_accepted: Option<u64>,
    pub seed: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            t_max: DEFAULT_T_MAX,
            t_min: DEFAULT_T_MIN,
            alpha: DEFAULT_ALPHA,
            lambda: DEFAULT_LAMBDA,
            max_accepted: None,
            seed: 0,
        }
    }
}

impl AnnealSchedule {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.t_max.is_finite()
            && self.t_min > 0.0
            && self.t_min < self.t_max
            && self.alpha > 0.0
            && self.alpha < 1.0
            && self.lambda > 0.0
            && self.lambda.is_finite()
            && self.max_accepted != Some(0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "invalid schedule {self:?}: need 0 < t_min < t_max, 0 < alpha < 1, lambda > 0"
            )))
        }
    }

    /// Proposals per temperature, `ceil(lambda * N * K)`.
    pub fn chain_length(&self, n: usize, k: usize) -> u64 {
        ceil_slack(self.lambda * (n * k) as f64)
    }

    pub fn accept_limit(&self, n: usize, k: usize) -> u64 {
        self.max_accepted
            .unwrap_or_else(|| ceil_slack(0.1 * self.lambda * (n * k) as f64))
            .max(1)
    }

    /// Number of temperatures visited, `ceil(log_alpha(t_min / t_max))`.
    pub fn outer_iterations(&self) -> u64 {
        ceil_slack((self.t_min / self.t_max).ln() / self.alpha.ln())
    }

    pub fn temperature(&self, iteration: u64) -> f64 {
        self.t_max * self.alpha.powi(iteration as i32)
    }
}

fn ceil_slack(x: f64) -> u64 {
    (x - CEIL_SLACK).ceil().max(0.0) as u64
}

/// Upper bound on proposals made by one annealing run.
pub fn predicted_complexity(n: usize, k: usize, schedule: &AnnealSchedule) -> u64 {
    schedule.chain_length(n, k) * schedule.outer_iterations()
}

/// One record per temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: u64,
    pub temperature: f64,
    pub current: f64,
    pub best: f64,
    pub proposals: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealTrace {
    pub records: Vec<TraceRecord>,
    /// Objective evaluations, the initial one included.
    pub evaluations: u64,
    pub proposals: u64,
    /// Temperature after the last cooling step.
    pub final_temperature: f64,
    /// Best objective after every proposal was non-increasing.
    pub best_monotone: bool,
    #[serde(default)]
    pub wall_time_secs: f64,
}

impl AnnealTrace {
    /// Line-delimited JSON, one record per temperature.
    pub fn write_jsonl<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            let line = serde_json::to_string(r).map_err(|e| Error::Schema(e.to_string()))?;
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Same trace with wall time zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_secs: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealOutcome<T> {
    pub selection: WeightSelection,
    pub value: ObjectiveValue<T>,
    pub trace: AnnealTrace,
}

/// Copy of `selection` with one class moved to a different index drawn
/// uniformly from the other `K - 1`. Returns `None` when `K = 1`.
pub fn perturb<R: Rng + ?Sized>(
    selection: &WeightSelection,
    k_points: usize,
    rng: &mut R,
) -> Option<(WeightSelection, usize, usize)> {
    let (class, index) = propose_move(selection, k_points, rng)?;
    let mut next = selection.clone();
    next.set(class, index);
    Some((next, class, index))
}

fn propose_move<R: Rng + ?Sized>(
    selection: &WeightSelection,
    k_points: usize,
    rng: &mut R,
) -> Option<(usize, usize)> {
    if k_points < 2 || selection.is_empty() {
        return None;
    }
    let class = rng.random_range(0..selection.len());
    let current = selection.get(class);
    let mut index = rng.random_range(1..k_points);
    if index >= current {
        index += 1;
    }
    Some((class, index))
}

pub fn rng_for_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn anneal<T: Scalar>(
    dataset: &ProbabilityDataset<T>,
    scale: &WeightScale<T>,
    config: &ObjectiveConfig<T>,
    schedule: &AnnealSchedule,
) -> Result<AnnealOutcome<T>> {
    schedule.validate()?;
    let start = Instant::now();
    let n = dataset.num_classes();
    let k = scale.k_points();
    let init = WeightSelection::identity(n, k);
    let mut state = IncrementalEvaluator::new(dataset, scale.clone(), *config, init)?;

    let mut best_sel = state.selection().clone();
    let mut best = *state.value();
    let mut trace = AnnealTrace {
        records: Vec::new(),
        evaluations: 1,
        proposals: 0,
        final_temperature: schedule.t_max,
        best_monotone: true,
        wall_time_secs: 0.0,
    };
    if k == 1 {
        trace.wall_time_secs = start.elapsed().as_secs_f64();
        return Ok(AnnealOutcome {
            selection: best_sel,
            value: best,
            trace,
        });
    }

    let mut rng = rng_for_seed(schedule.seed);
    let chain = schedule.chain_length(n, k);
    let accept_limit = schedule.accept_limit(n, k);
    let outer = schedule.outer_iterations();
    let mut last_best = best.total;

    for it in 0..outer {
        let temp = T::of(schedule.temperature(it));
        let mut proposals = 0u64;
        let mut accepted = 0u64;
        while proposals < chain && accepted < accept_limit {
            let (class, index) =
                propose_move(state.selection(), k, &mut rng).expect("K >= 2 has moves");
            let candidate = state.propose(class, index)?;
            proposals += 1;
            let dz = candidate.total - state.value().total;
            let take = if dz <= T::zero() {
                true
            } else {
                let u: f64 = rng.random();
                u < (-dz / temp).exp().as_f64()
            };
            if take {
                state.commit();
                accepted += 1;
                if candidate.total < best.total {
                    best = candidate;
                    best_sel = state.selection().clone();
                }
            }
            if best.total > last_best {
                trace.best_monotone = false;
            }
            last_best = best.total;
        }
        trace.proposals += proposals;
        trace.evaluations += proposals;
        trace.records.push(TraceRecord {
            iteration: it,
            temperature: schedule.temperature(it),
            current: state.value().total.as_f64(),
            best: best.total.as_f64(),
            proposals,
            accepted,
            acceptance_rate: accepted as f64 / proposals.max(1) as f64,
        });
    }
    trace.final_temperature = schedule.temperature(outer);
    trace.wall_time_secs = start.elapsed().as_secs_f64();
    log::debug!(
        "anneal seed {}: {} proposals, best {}",
        schedule.seed,
        trace.proposals,
        best.total
    );
    Ok(AnnealOutcome {
        selection: best_sel,
        value: best,
        trace,
    })
}

/// Independent runs, one per seed, executed in parallel. The result with
/// the lowest total wins; equal totals go to the smaller seed.
pub fn anneal_restarts<T: Scalar>(
    dataset: &ProbabilityDataset<T>,
    scale: &WeightScale<T>,
    config: &ObjectiveConfig<T>,
    schedule: &AnnealSchedule,
    seeds: &[u64],
) -> Result<(u64, AnnealOutcome<T>)> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("no seeds given".into()));
    }
    let runs: Vec<(u64, AnnealOutcome<T>)> = seeds
        .par_iter()
        .map(|&seed| anneal(dataset, scale, config, &schedule.with_seed(seed)).map(|o| (seed, o)))
        .collect::<Result<_>>()?;
    Ok(runs
        .into_iter()
        .min_by(|a, b| {
            a.1.value
                .total
                .partial_cmp(&b.1.value.total)
                .expect("objective is never NaN")
                .then(a.0.cmp(&b.0))
        })
        .expect("non-empty"))
}
