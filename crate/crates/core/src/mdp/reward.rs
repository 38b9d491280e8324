use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Reward attached to starting a task, as a function of its safety probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RewardConfig {
    /// The safety probability itself.
    Basic,
    /// Sigmoid of the safety probability, normalised to 1 at `v_max`.
    Sigmoid { beta: f64, theta: f64 },
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig::Basic
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if let RewardConfig::Sigmoid { beta, theta } = *self {
            if !(beta.is_finite() && beta > 0.0 && theta.is_finite()) {
                return Err(ModelError::InvalidParam {
                    field: "reward",
                    reason: format!("sigmoid needs finite beta > 0 and theta, got ({beta}, {theta})"),
                });
            }
        }
        Ok(())
    }

    /// Reward for a task with safety probability `p_safe`, where `p_safe_max`
    /// is the same task's safety probability at `v_max`.
    pub fn value(&self, p_safe: f64, p_safe_max: f64) -> f64 {
        match *self {
            RewardConfig::Basic => p_safe,
            RewardConfig::Sigmoid { beta, theta } => {
                let num = 1.0 + (-beta * (p_safe_max - theta)).exp();
                let den = 1.0 + (-beta * (p_safe - theta)).exp();
                num / den
            }
        }
    }

    /// Per-level rewards from a per-level safety table (last entry is `v_max`).
    pub fn table(&self, safety: &[f64]) -> Vec<f64> {
        let top = safety.last().copied().unwrap_or(1.0);
        safety.iter().map(|&p| self.value(p, top)).collect()
    }
}
