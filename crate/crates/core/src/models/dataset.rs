use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature matrix with dense class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_names: Option<Vec<String>>,
    /// Original label values, indexed by dense class id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        let ds = Self {
            features,
            labels,
            class_count,
            feature_names: None,
            label_names: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::BadSpec("dataset has no rows".into()));
        }
        let d = self.features[0].len();
        if d == 0 {
            return Err(Error::BadSpec("dataset has no feature columns".into()));
        }
        if self.labels.len() != self.features.len() {
            return Err(Error::BadSpec("label count differs from row count".into()));
        }
        for (r, row) in self.features.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonNumericFeature {
                    row: r,
                    column: c,
                    value: row[c].to_string(),
                });
            }
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= self.class_count) {
            return Err(Error::BadSpec(format!(
                "label {l} out of range for {} classes",
                self.class_count
            )));
        }
        if let Some(names) = &self.feature_names {
            if names.len() != d {
                return Err(Error::BadSpec(
                    "feature name count differs from dimension".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.labels[i] == class)
            .collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn feature_mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim()];
        for row in &self.features {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Rows `indices`, keeping the label space.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if let Some(&i) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::InvalidArgument(format!(
                "row index {i} out of bounds"
            )));
        }
        Ok(Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
        })
    }

    pub fn feature_name(&self, j: usize) -> String {
        self.feature_names
            .as_ref()
            .map(|n| n[j].clone())
            .unwrap_or_else(|| format!("x{j}"))
    }
}
