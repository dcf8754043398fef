use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::group::GroupSpec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean cross-entropy over the batch.
    #[default]
    CrossEntropy,
}

/// Hyperparameters of one training run. Missing keys take the defaults
/// below; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub group_spec: GroupSpec,
    pub seed: u64,
    pub train_frac: f64,
    pub d_embed: usize,
    pub hidden: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub eval_every: usize,
    pub checkpoint_every: usize,
    pub loss_kind: LossKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            group_spec: GroupSpec::Symmetric(5),
            seed: 0,
            train_frac: 0.4,
            d_embed: 256,
            hidden: 128,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.98,
            weight_decay: 1.0,
            epochs: 250_000,
            eval_every: 100,
            checkpoint_every: 1000,
            loss_kind: LossKind::CrossEntropy,
        }
    }
}

impl TrainConfig {
    pub fn for_group(group_spec: GroupSpec, seed: u64) -> TrainConfig {
        TrainConfig {
            group_spec,
            seed,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidArgument(format!("config: {m}")));
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return fail("train_frac must lie strictly between 0 and 1");
        }
        if self.d_embed == 0 || self.hidden == 0 {
            return fail("d_embed and hidden must be positive");
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1");
        }
        if self.eval_every == 0 || self.checkpoint_every == 0 {
            return fail("eval_every and checkpoint_every must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail("lr must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return fail("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return fail("weight_decay must be non-negative");
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<TrainConfig> {
        let cfg: TrainConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<TrainConfig> {
        let text = fs::read_to_string(path).at(path)?;
        TrainConfig::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_partial_json() {
        let cfg = TrainConfig::from_json_str(r#"{"group_spec": "C113", "epochs": 10}"#).unwrap();
        assert_eq!(cfg.group_spec, GroupSpec::Cyclic(113));
        assert_eq!(cfg.epochs, 10);
        assert_eq!(cfg.hidden, 128);
        assert_eq!(cfg.beta2, 0.98);
        let back = TrainConfig::from_json_str(&cfg.to_json_pretty()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(TrainConfig::from_json_str(r#"{"warmup": 5}"#).is_err());
        assert!(TrainConfig::from_json_str(r#"{"train_frac": 1.0}"#).is_err());
        assert!(TrainConfig::from_json_str(r#"{"epochs": 0}"#).is_err());
        assert!(TrainConfig::from_json_str(r#"{"loss_kind": "mse"}"#).is_err());
    }
}
