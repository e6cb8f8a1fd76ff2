//! Seeded synthetic datasets with a controllable confusion pattern.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::data::ProbabilityDataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Class names for [`NEWS_TOPIC_CONFUSION`].
pub const NEWS_TOPIC_CLASSES: [&str; 4] = ["World", "Sports", "Business", "Tech"];

/// A 5000-sample four-class news-topic confusion matrix (rows true, columns
/// predicted) with Business heavily over-predicted and Tech under-predicted.
pub const NEWS_TOPIC_CONFUSION: [[u64; 4]; 4] = [
    [1093, 64, 126, 3],
    [9, 1247, 14, 0],
    [25, 4, 1167, 8],
    [156, 27, 822, 235],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub samples_per_class: Vec<usize>,
    /// Row-stochastic; row `i` is the mean probability vector of class `i`.
    pub confusion_bias: Vec<Vec<f64>>,
    /// Dirichlet pseudo-count mass; larger means less sample noise.
    pub concentration: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.num_classes;
        if n < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 classes, got {n}"
            )));
        }
        if self.samples_per_class.len() != n || self.confusion_bias.len() != n {
            return Err(Error::InvalidConfig(
                "samples_per_class and confusion_bias must have one entry per class".into(),
            ));
        }
        if self.samples_per_class.iter().all(|&c| c == 0) {
            return Err(Error::EmptyDataset);
        }
        if !(self.concentration > 0.0 && self.concentration.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "concentration must be positive, got {}",
                self.concentration
            )));
        }
        for (i, row) in self.confusion_bias.iter().enumerate() {
            if row.len() != n || row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "confusion_bias row {i} must hold {n} nonnegative values"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "confusion_bias row {i} sums to {sum}, not 1"
                )));
            }
        }
        Ok(())
    }

    /// Random biased classifier over `n` classes with `total` samples split
    /// as evenly as possible. Each bias row mixes a uniform Dirichlet draw
    /// with the true class's one-hot vector (weight `0.3`), so predictions
    /// are informative but skewed.
    pub fn random(n: usize, total: usize, concentration: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 classes, got {n}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_B1A5);
        let unit = Gamma::new(1.0, 1.0).expect("valid gamma");
        let confusion_bias = (0..n)
            .map(|i| {
                let g: Vec<f64> = (0..n).map(|_| unit.sample(&mut rng)).collect();
                let sum: f64 = g.iter().sum();
                let mut row: Vec<f64> = g.iter().map(|v| 0.7 * v / sum).collect();
                row[i] += 0.3;
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
                row
            })
            .collect();
        let samples_per_class = (0..n)
            .map(|i| total / n + usize::from(i < total % n))
            .collect();
        let spec = Self {
            num_classes: n,
            samples_per_class,
            confusion_bias,
            concentration,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Spec whose bias rows are the row-normalized `counts` and whose class
    /// sizes are the row totals rescaled to `total` samples (largest
    /// remainder rounding, so the sizes sum to `total` exactly).
    pub fn from_confusion_counts<R: AsRef<[u64]>>(
        counts: &[R],
        total: usize,
        concentration: f64,
        seed: u64,
    ) -> Result<Self> {
        let n = counts.len();
        let row_totals: Vec<u64> = counts.iter().map(|r| r.as_ref().iter().sum()).collect();
        if row_totals.contains(&0) {
            return Err(Error::InvalidConfig(
                "every confusion row needs a count".into(),
            ));
        }
        let grand: u64 = row_totals.iter().sum();
        let confusion_bias = counts
            .iter()
            .zip(&row_totals)
            .map(|(r, &t)| r.as_ref().iter().map(|&c| c as f64 / t as f64).collect())
            .collect();

        let exact: Vec<f64> = row_totals
            .iter()
            .map(|&t| total as f64 * t as f64 / grand as f64)
            .collect();
        let mut sizes: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let short = total - sizes.iter().sum::<usize>();
        for &i in order.iter().take(short) {
            sizes[i] += 1;
        }
        let spec = Self {
            num_classes: n,
            samples_per_class: sizes,
            confusion_bias,
            concentration,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Samples grouped by true class in class order. Each probability vector is
/// a Dirichlet draw with mean equal to its class's bias row; zero entries
/// of the row stay exactly zero.
pub fn generate_synthetic<T: Scalar>(spec: &SyntheticSpec) -> Result<ProbabilityDataset<T>> {
    spec.validate()?;
    let n = spec.num_classes;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gammas: Vec<Vec<Option<Gamma<f64>>>> = spec
        .confusion_bias
        .iter()
        .map(|row| {
            row.iter()
                .map(|&m| {
                    (m > 0.0)
                        .then(|| Gamma::new(spec.concentration * m, 1.0).expect("positive shape"))
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::with_capacity(spec.samples_per_class.iter().sum());
    let mut draw = vec![0.0f64; n];
    for (class, &count) in spec.samples_per_class.iter().enumerate() {
        for _ in 0..count {
            for (d, g) in draw.iter_mut().zip(&gammas[class]) {
                *d = g.as_ref().map_or(0.0, |g| g.sample(&mut rng));
            }
            let sum: f64 = draw.iter().sum();
            let probs: Vec<T> = if sum > 0.0 && sum.is_finite() {
                draw.iter().map(|d| T::of(d / sum)).collect()
            } else {
                // every gamma underflowed; fall back to the row's mode
                let mode = crate::metrics::argmax(&spec.confusion_bias[class]);
                (0..n)
                    .map(|j| if j == mode { T::one() } else { T::zero() })
                    .collect()
            };
            rows.push((probs, class));
        }
    }
    ProbabilityDataset::new(n, rows)
}

/// A dataset whose plain argmax predictions reproduce `counts` exactly:
/// each sample puts mass 0.7 on its predicted class and spreads the rest
/// evenly.
pub fn realize_confusion<T: Scalar, R: AsRef<[u64]>>(
    counts: &[R],
) -> Result<ProbabilityDataset<T>> {
    let n = counts.len();
    if n < 2 {
        return Err(Error::InvalidConfig("need at least 2 classes".into()));
    }
    let rest = T::of(0.3) / T::of_usize(n - 1);
    let mut rows = Vec::new();
    for (truth, row) in counts.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != n {
            return Err(Error::InvalidConfig(
                "confusion counts must be square".into(),
            ));
        }
        for (pred, &c) in row.iter().enumerate() {
            let probs: Vec<T> = (0..n)
                .map(|j| if j == pred { T::of(0.7) } else { rest })
                .collect();
            for _ in 0..c {
                rows.push((probs.clone(), truth));
            }
        }
    }
    ProbabilityDataset::new(n, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::confusion;

    fn spec(bias: Vec<Vec<f64>>, concentration: f64, per_class: usize) -> SyntheticSpec {
        SyntheticSpec {
            num_classes: bias.len(),
            samples_per_class: vec![per_class; bias.len()],
            confusion_bias: bias,
            concentration,
            seed: 42,
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let s = spec(vec![vec![0.8, 0.2], vec![0.3, 0.7]], 5.0, 50);
        let a: ProbabilityDataset<f64> = generate_synthetic(&s).unwrap();
        let b: ProbabilityDataset<f64> = generate_synthetic(&s).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        a.write_jsonl(&mut ba).unwrap();
        b.write_jsonl(&mut bb).unwrap();
        assert_eq!(ba, bb);
        let c: ProbabilityDataset<f64> =
            generate_synthetic(&SyntheticSpec { seed: 43, ..s }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn high_concentration_identity_is_near_one_hot() {
        let s = spec(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1e6, 100);
        let ds: ProbabilityDataset<f64> = generate_synthetic(&s).unwrap();
        let cm = confusion(&ds, None).unwrap();
        assert_eq!(cm.correct(), 200);
        assert!(ds.iter().all(|(p, y)| p[y] > 0.99));
    }

    #[test]
    fn uniform_bias_gives_coin_flip_predictions() {
        // with mean (0.5, 0.5) class 0 wins about half the draws regardless
        // of the label, so per-class accuracies sit near 1/2 each
        let s = spec(vec![vec![0.5, 0.5], vec![0.5, 0.5]], 2.0, 5000);
        let ds: ProbabilityDataset<f64> = generate_synthetic(&s).unwrap();
        let cm = confusion(&ds, None).unwrap();
        let acc0 = cm.get(0, 0) as f64 / 5000.0;
        let acc1 = cm.get(1, 1) as f64 / 5000.0;
        assert!((acc0 - 0.5).abs() < 0.03, "{acc0}");
        assert!((acc1 - 0.5).abs() < 0.03, "{acc1}");
    }

    #[test]
    fn sample_means_follow_bias_rows() {
        let bias = vec![
            vec![0.6, 0.3, 0.1],
            vec![0.2, 0.2, 0.6],
            vec![0.0, 0.5, 0.5],
        ];
        let s = spec(bias.clone(), 8.0, 4000);
        let ds: ProbabilityDataset<f64> = generate_synthetic(&s).unwrap();
        for (class, row) in bias.iter().enumerate() {
            let members: Vec<&[f64]> = ds
                .iter()
                .filter(|(_, y)| *y == class)
                .map(|(p, _)| p)
                .collect();
            for j in 0..3 {
                let mean = members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64;
                assert!(
                    (mean - row[j]).abs() < 0.01,
                    "class {class} col {j}: {mean}"
                );
            }
        }
        assert!(ds.iter().filter(|(_, y)| *y == 2).all(|(p, _)| p[0] == 0.0));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(spec(vec![vec![0.5, 0.4], vec![0.5, 0.5]], 1.0, 1)
            .validate()
            .is_err());
        assert!(spec(vec![vec![0.5, 0.5], vec![0.5, 0.5]], 0.0, 1)
            .validate()
            .is_err());
    }

    #[test]
    fn realized_counts_match() {
        let ds: ProbabilityDataset<f64> = realize_confusion(&NEWS_TOPIC_CONFUSION).unwrap();
        assert_eq!(ds.len(), 5000);
        let cm = confusion(&ds, None).unwrap();
        let want: Vec<Vec<u64>> = NEWS_TOPIC_CONFUSION.iter().map(|r| r.to_vec()).collect();
        assert_eq!(cm.rows(), want);
    }

    #[test]
    fn class_sizes_from_counts() {
        let s =
            SyntheticSpec::from_confusion_counts(&NEWS_TOPIC_CONFUSION, 10_000, 10.0, 1).unwrap();
        assert_eq!(s.samples_per_class, vec![2572, 2540, 2408, 2480]);
        let s = SyntheticSpec::from_confusion_counts(&NEWS_TOPIC_CONFUSION, 7, 10.0, 1).unwrap();
        assert_eq!(s.samples_per_class.iter().sum::<usize>(), 7);
    }
}
