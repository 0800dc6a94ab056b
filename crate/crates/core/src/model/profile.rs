use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::counts::WeightVector;
use crate::error::{Error, Result};

/// How the calibration run was set up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapMeta {
    pub worker_count: usize,
    pub array_bytes: u64,
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    /// Memory placement policy used for the private arrays.
    #[serde(default)]
    pub placement: String,
    /// Raw nanoseconds per cache line, in sr, rr, sw, rw order.
    #[serde(default)]
    pub ns_per_line: Vec<f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

/// Calibrated cost weights of one host.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineProfile {
    pub label: String,
    pub cache_line_bytes: u64,
    pub weights: WeightVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapMeta>,
}

impl MachineProfile {
    pub fn new(label: impl Into<String>, cache_line_bytes: u64, weights: WeightVector) -> Result<Self> {
        let p = MachineProfile { label: label.into(), cache_line_bytes, weights, bootstrap: None };
        p.validate()?;
        Ok(p)
    }

    pub fn intel() -> Self {
        MachineProfile { label: "reference-intel".into(), cache_line_bytes: 64, weights: WeightVector::INTEL, bootstrap: None }
    }

    pub fn amd() -> Self {
        MachineProfile { label: "reference-amd".into(), cache_line_bytes: 64, weights: WeightVector::AMD, bootstrap: None }
    }

    pub fn ec2() -> Self {
        MachineProfile { label: "reference-ec2".into(), cache_line_bytes: 64, weights: WeightVector::EC2, bootstrap: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.cache_line_bytes.is_power_of_two() || self.cache_line_bytes < 16 {
            return Err(Error::invalid(format!(
                "cache line size must be a power of two of at least 16 bytes, got {}",
                self.cache_line_bytes
            )));
        }
        self.weights.validate()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: MachineProfile = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}
