//! Experiment configuration file (TOML).
//!
//! Every field has a default, so a config file only lists what it changes.
//! The fully resolved config is written next to the results.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::scenario::ScenarioSpec;
use crate::error::{Error, Result};
use crate::network::NetworkConfig;
use crate::search::{CostModel, SearchConfig};
use crate::seed;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the directory holding the IDX files.
pub const DATA_DIR_ENV: &str = "SPIKELAB_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Directory of the IDX files; falls back to `$SPIKELAB_DATA_DIR`,
    /// then `data/mnist`.
    pub dir: Option<PathBuf>,
    pub train_images: String,
    pub train_labels: String,
    pub test_images: String,
    pub test_labels: String,
    /// Training samples at the end of the training file reserved for
    /// neuron labelling and never used for training.
    pub holdout: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            dir: None,
            train_images: "train-images-idx3-ubyte".into(),
            train_labels: "train-labels-idx1-ubyte".into(),
            test_images: "t10k-images-idx3-ubyte".into(),
            test_labels: "t10k-labels-idx1-ubyte".into(),
            holdout: 10_000,
        }
    }
}

impl DataConfig {
    pub fn resolved_dir(&self) -> PathBuf {
        self.dir
            .clone()
            .or_else(|| env::var_os(DATA_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("data/mnist"))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.resolved_dir().join(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Labelled samples presented to assign neuron labels at each eval point.
    pub calibration_samples: usize,
    /// Test samples per eval point, restricted to the classes in scope.
    pub test_samples: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            calibration_samples: 1000,
            test_samples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Name of the random generator behind every stream (informational).
    pub generator: String,
    pub output_dir: PathBuf,
    pub network: NetworkConfig,
    pub scenario: ScenarioSpec,
    pub data: DataConfig,
    pub eval: EvalConfig,
    pub cost: CostModel,
    /// Present when the network size is chosen by the constrained search.
    pub search: Option<SearchConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            generator: seed::GENERATOR.into(),
            output_dir: PathBuf::from("out"),
            network: NetworkConfig::default(),
            scenario: ScenarioSpec::default(),
            data: DataConfig::default(),
            eval: EvalConfig::default(),
            cost: CostModel::default(),
            search: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(e.to_string()))
    }

    /// Same run, with every derived or environment-dependent value made
    /// explicit.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.network = c.network.materialized();
        c.data.dir = Some(self.data.resolved_dir());
        c.generator = seed::GENERATOR.into();
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.scenario.validate()?;
        self.cost.validate()?;
        if let Some(s) = &self.search {
            s.validate()?;
        }
        if self.eval.calibration_samples == 0 || self.eval.test_samples == 0 {
            return Err(Error::config("eval sample counts must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_is_defaulted() {
        let c = ExperimentConfig::from_toml(
            "[network]\nn_exc = 7\n[network.learning]\nsp_th = 3\n[scenario]\ntasks = [3, 4]\n",
        )
        .unwrap();
        assert_eq!(c.network.n_exc, 7);
        assert_eq!(c.network.learning.sp_th, 3);
        assert_eq!(c.network.learning.eta_post, 1e-2);
        assert_eq!(c.scenario.tasks, vec![3, 4]);
        assert!(c.search.is_none());
    }

    #[test]
    fn unknown_keys_and_versions_rejected() {
        assert!(ExperimentConfig::from_toml("[network]\nn_neurons = 3\n").is_err());
        assert!(ExperimentConfig::from_toml("schema_version = 9\n").is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut c = ExperimentConfig::default();
        c.search = Some(SearchConfig::default());
        c.data.dir = Some(PathBuf::from("/tmp/x"));
        let r = c.resolved();
        let back = ExperimentConfig::from_toml(&r.to_toml().unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.resolved(), r);
        assert!(back.search.unwrap().e_ct.is_infinite());
    }
}
