//! The discrete correction-weight scale and per-class index selections.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `K` evenly spaced weights `1/K, 2/K, ..., 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightScale<T> {
    values: Vec<T>,
}

impl<T: Scalar> WeightScale<T> {
    pub fn new(k_points: usize) -> Result<Self> {
        if k_points == 0 {
            return Err(Error::InvalidConfig("weight scale needs K >= 1".into()));
        }
        let k = T::of_usize(k_points);
        let values = (1..=k_points).map(|i| T::of_usize(i) / k).collect();
        Ok(Self { values })
    }

    pub fn k_points(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Weight for a 1-based scale index.
    pub fn value(&self, index: usize) -> T {
        self.values[index - 1]
    }
}

/// One 1-based scale index per class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightSelection {
    indices: Vec<usize>,
}

impl WeightSelection {
    pub fn new(indices: Vec<usize>, k_points: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidConfig(
                "selection must cover at least one class".into(),
            ));
        }
        if let Some((class, &idx)) = indices
            .iter()
            .enumerate()
            .find(|(_, &i)| i == 0 || i > k_points)
        {
            return Err(Error::InvalidConfig(format!(
                "class {class}: index {idx} outside 1..={k_points}"
            )));
        }
        Ok(Self { indices })
    }

    /// Every class at the top of the scale, i.e. all coefficients 1.
    pub fn identity(num_classes: usize, k_points: usize) -> Self {
        Self {
            indices: vec![k_points; num_classes],
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn get(&self, class: usize) -> usize {
        self.indices[class]
    }

    pub(crate) fn set(&mut self, class: usize, index: usize) {
        self.indices[class] = index;
    }

    pub fn check(&self, num_classes: usize, k_points: usize) -> Result<()> {
        if self.len() != num_classes {
            return Err(Error::DimensionMismatch {
                expected: num_classes,
                actual: self.len(),
            });
        }
        if self.indices.iter().any(|&i| i == 0 || i > k_points) {
            return Err(Error::InvalidConfig(format!(
                "selection {:?} outside 1..={k_points}",
                self.indices
            )));
        }
        Ok(())
    }

    pub fn coefficients<T: Scalar>(&self, scale: &WeightScale<T>) -> Vec<T> {
        self.indices.iter().map(|&i| scale.value(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_values() {
        let s = WeightScale::<f64>::new(10).unwrap();
        assert_eq!(s.values().len(), 10);
        assert_eq!(s.value(1), 0.1);
        assert_eq!(s.value(10), 1.0);
        assert!(s.values().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(WeightScale::<f32>::new(7).unwrap().value(7), 1.0f32);
        assert!(WeightScale::<f64>::new(0).is_err());
    }

    #[test]
    fn selection_bounds() {
        assert!(WeightSelection::new(vec![3, 1, 1, 20], 30).is_ok());
        assert!(WeightSelection::new(vec![0, 1], 30).is_err());
        assert!(WeightSelection::new(vec![31], 30).is_err());
        let id = WeightSelection::identity(3, 5);
        let scale = WeightScale::<f64>::new(5).unwrap();
        assert_eq!(id.coefficients(&scale), vec![1.0; 3]);
        assert!(id.check(4, 5).is_err());
    }
}
