use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    Raw,
    UnitSum,
    MaxOne,
}

/// Per-feature importance values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliencyVector {
    pub values: Vec<f64>,
    pub normalization: Normalization,
    /// Monte-Carlo standard error per feature, for sampled estimates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<Vec<f64>>,
    /// Reference output the attributions are measured from (additive
    /// attributions only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_value: Option<f64>,
}

impl SaliencyVector {
    pub fn raw(values: Vec<f64>) -> Self {
        Self {
            values,
            normalization: Normalization::Raw,
            std_error: None,
            base_value: None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Rescaled copy. Unit-sum divides by the sum of values, max-one by the
    /// largest absolute value; an all-zero vector is returned unchanged.
    pub fn normalized(&self, to: Normalization) -> SaliencyVector {
        let scale = match to {
            Normalization::Raw => 1.0,
            Normalization::UnitSum => self.values.iter().sum::<f64>(),
            Normalization::MaxOne => self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        };
        let scale = if scale == 0.0 || !scale.is_finite() {
            1.0
        } else {
            scale
        };
        SaliencyVector {
            values: self.values.iter().map(|v| v / scale).collect(),
            normalization: to,
            std_error: self
                .std_error
                .as_ref()
                .map(|se| se.iter().map(|v| v / scale.abs()).collect()),
            base_value: self.base_value,
        }
    }

    pub fn mean_over(&self, indices: &[usize]) -> f64 {
        indices.iter().map(|&i| self.values[i]).sum::<f64>() / indices.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_sum_sums_to_one() {
        let s = SaliencyVector::raw(vec![0.2, 0.5, 1.3]).normalized(Normalization::UnitSum);
        assert!((s.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_one_uses_absolute_peak() {
        let s = SaliencyVector::raw(vec![-4.0, 2.0]).normalized(Normalization::MaxOne);
        assert_eq!(s.values, vec![-1.0, 0.5]);
        let z = SaliencyVector::raw(vec![0.0, 0.0]).normalized(Normalization::MaxOne);
        assert_eq!(z.values, vec![0.0, 0.0]);
    }
}
