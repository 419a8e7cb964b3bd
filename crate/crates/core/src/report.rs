//! The JSON document every explainer run produces.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub method: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub theta: Value,
    pub config: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub explanation: Value,
    /// Method-specific quality measures: posterior mass, Monte-Carlo
    /// standard error, R², KL and the like.
    pub diagnostics: Map<String, Value>,
    /// Wall-clock time; left out unless asked for, since it breaks
    /// byte-identical reruns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

impl ExplanationReport {
    pub fn new(
        method: &str,
        config: impl Serialize,
        seed: Option<u64>,
        explanation: impl Serialize,
    ) -> Result<Self> {
        Ok(Self {
            method: method.to_string(),
            theta: Value::Null,
            config: serde_json::to_value(config)?,
            seed,
            explanation: serde_json::to_value(explanation)?,
            diagnostics: Map::new(),
            runtime_ms: None,
        })
    }

    pub fn with_theta(mut self, theta: impl Serialize) -> Result<Self> {
        self.theta = serde_json::to_value(theta)?;
        Ok(self)
    }

    pub fn diagnostic(mut self, key: &str, value: impl Serialize) -> Result<Self> {
        self.diagnostics
            .insert(key.to_string(), serde_json::to_value(value)?);
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}
