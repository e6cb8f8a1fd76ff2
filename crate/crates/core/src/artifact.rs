//! Learned reweighting artifacts and their versioned JSON file format.
//!
//! ```json
//! {
//!   "format": "dnip-reweight-artifact",
//!   "version": 1,
//!   "k_points": 30,
//!   "scale_values": [0.0333.., ..., 1.0],
//!   "selection": [3, 1, 1, 20],
//!   "coefficients": [0.1, 0.0333.., 0.0333.., 0.6666..],
//!   "objective_config": {"beta": 2.7, "tau": 0.2, "mu": 0.001, "use_z1": true, ...},
//!   "final_objective": 0.123,
//!   "provenance": {"seed": 0, "schedule": {...}, "dataset_fingerprint": "ab12..",
//!                  "num_samples": 10000, "timestamp_unix": null}
//! }
//! ```
//!
//! On load the scale and coefficients are recomputed from `k_points` and
//! `selection` and must match the stored values bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::anneal::AnnealSchedule;
use crate::error::{Error, Result};
use crate::objective::ObjectiveConfig;
use crate::scalar::Scalar;
use crate::weights::{WeightScale, WeightSelection};

pub const ARTIFACT_FORMAT: &str = "dnip-reweight-artifact";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub seed: u64,
    pub schedule: AnnealSchedule,
    pub dataset_fingerprint: String,
    pub num_samples: usize,
    /// Left empty unless requested, so identical runs give identical files.
    pub timestamp_unix: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReweightArtifact<T> {
    pub scale: WeightScale<T>,
    pub selection: WeightSelection,
    pub coefficients: Vec<T>,
    pub objective_config: ObjectiveConfig<T>,
    pub final_objective: T,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound = "T: Scalar")]
struct ArtifactFile<T> {
    format: String,
    version: u32,
    k_points: usize,
    scale_values: Vec<T>,
    selection: WeightSelection,
    coefficients: Vec<T>,
    objective_config: ObjectiveConfig<T>,
    final_objective: T,
    provenance: Provenance,
}

impl<T: Scalar> ReweightArtifact<T> {
    pub fn new(
        scale: WeightScale<T>,
        selection: WeightSelection,
        objective_config: ObjectiveConfig<T>,
        final_objective: T,
        provenance: Provenance,
    ) -> Result<Self> {
        selection.check(selection.len(), scale.k_points())?;
        if provenance.dataset_fingerprint.is_empty() {
            return Err(Error::Schema("dataset fingerprint is absent".into()));
        }
        Ok(Self {
            coefficients: selection.coefficients(&scale),
            scale,
            selection,
            objective_config,
            final_objective,
            provenance,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.selection.len()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ArtifactFile {
            format: ARTIFACT_FORMAT.to_string(),
            version: ARTIFACT_VERSION,
            k_points: self.scale.k_points(),
            scale_values: self.scale.values().to_vec(),
            selection: self.selection.clone(),
            coefficients: self.coefficients.clone(),
            objective_config: self.objective_config,
            final_objective: self.final_objective,
            provenance: self.provenance.clone(),
        };
        let mut s =
            serde_json::to_string_pretty(&file).map_err(|e| Error::Schema(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        let format = raw.get("format").and_then(|v| v.as_str());
        if format != Some(ARTIFACT_FORMAT) {
            return Err(Error::Schema(format!("format tag is {format:?}")));
        }
        let version = raw
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Schema("missing version".into()))?;
        if version != u64::from(ARTIFACT_VERSION) {
            return Err(Error::VersionMismatch {
                found: u32::try_from(version).unwrap_or(u32::MAX),
                expected: ARTIFACT_VERSION,
            });
        }
        let file: ArtifactFile<T> =
            serde_json::from_value(raw).map_err(|e| Error::Schema(e.to_string()))?;

        let scale =
            WeightScale::<T>::new(file.k_points).map_err(|e| Error::Schema(e.to_string()))?;
        if scale.values() != file.scale_values.as_slice() {
            return Err(Error::Schema("scale_values do not match k_points".into()));
        }
        file.selection
            .check(file.selection.len(), file.k_points)
            .map_err(|e| Error::Schema(e.to_string()))?;
        let expected = file.selection.coefficients(&scale);
        let bit_equal = expected.len() == file.coefficients.len()
            && expected
                .iter()
                .zip(&file.coefficients)
                .all(|(a, b)| a.as_f64().to_bits() == b.as_f64().to_bits());
        if !bit_equal {
            return Err(Error::Schema(
                "coefficients do not match the selected scale values".into(),
            ));
        }
        file.objective_config
            .validate()
            .map_err(|e| Error::Schema(e.to_string()))?;
        if file.provenance.dataset_fingerprint.is_empty() {
            return Err(Error::Schema("dataset fingerprint is absent".into()));
        }
        Ok(Self {
            scale,
            selection: file.selection,
            coefficients: file.coefficients,
            objective_config: file.objective_config,
            final_objective: file.final_objective,
            provenance: file.provenance,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
