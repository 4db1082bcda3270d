//! Run configuration: a single TOML file with one section per pipeline
//! stage. Every field has a default, so an empty file (or none at all) is
//! runnable; CLI flags override their corresponding keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use compmove_core::baselines::BaselineConfig;
use compmove_core::model::{ModelConfig, TrainConfig};
use compmove_core::preprocess::PreprocessConfig;
use compmove_core::synthgen::GenConfig;
use compmove_core::{Error, Result};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum SplitBy {
    /// Stratified per-sequence split preserving label proportions.
    #[default]
    Sequence,
    /// Hold out whole subjects so no person appears on both sides.
    Subject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed for the whole run. Propagated into every stage; the
    /// stage-level seed fields are derived from this one, so a single
    /// `--seed` pins the full pipeline.
    pub seed: u64,
    /// Directory all artifacts are written to.
    pub out: PathBuf,
    /// Fraction of sequences used for training; the rest are held out.
    pub split_fraction: f64,
    pub split_by: SplitBy,
    pub gen: GenConfig,
    pub preprocess: PreprocessConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub baseline: BaselineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            split_fraction: 0.8,
            split_by: SplitBy::default(),
            gen: GenConfig::default(),
            preprocess: PreprocessConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            baseline: BaselineConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Push the master seed into every stage seed. Called after all
    /// overrides are applied, so stage seeds in the file are documentation
    /// only.
    pub fn propagate_seed(&mut self) {
        self.gen.seed = self.seed;
        self.train.seed = self.seed;
        self.baseline.svm.seed = self.seed;
        self.baseline.rf.seed = self.seed;
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split_fraction must lie in (0, 1), got {}",
                self.split_fraction
            )));
        }
        self.gen.validate()?;
        self.preprocess.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        self.baseline.validate()?;
        Ok(())
    }

    pub fn test_fraction(&self) -> f64 {
        1.0 - self.split_fraction
    }
}
