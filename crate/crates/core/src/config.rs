//! TOML run configuration. Values here override built-in defaults and are in
//! turn overridden by command-line flags.
//!
//! ```toml
//! dataset = "data/cancer.toml"
//! algo = "cgso-s-wd"
//! trials = 50
//! seed = 1
//!
//! [wd]
//! lambda0 = 5e-6
//! inc = 1e-3
//!
//! [coop]
//! k = 5
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::cooperative::Variant;
use crate::experiment::{Algorithm, ExperimentConfig, FitnessSplit};
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WdSection {
    pub enabled: Option<bool>,
    pub lambda0: Option<f64>,
    pub inc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoopSection {
    pub k: Option<usize>,
    pub variant: Option<Variant>,
    pub exchange_half: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSection {
    pub hidden: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitnessSection {
    pub split: Option<FitnessSplit>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dataset: Option<PathBuf>,
    pub algo: Option<Algorithm>,
    pub trials: Option<usize>,
    pub pop: Option<usize>,
    pub iters: Option<usize>,
    pub seed: Option<u64>,
    pub scrounger_fraction: Option<f64>,
    #[serde(default)]
    pub wd: WdSection,
    #[serde(default)]
    pub coop: CoopSection,
    #[serde(default)]
    pub mlp: MlpSection,
    #[serde(default)]
    pub fitness: FitnessSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Loads a file; a relative `dataset` path is taken relative to it.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        if let (Some(ds), Some(dir)) = (cfg.dataset.as_mut(), path.parent()) {
            if ds.is_relative() {
                *ds = dir.join(&*ds);
            }
        }
        Ok(cfg)
    }

    /// `algo` if given, otherwise inferred from `coop.variant`.
    pub fn algorithm(&self) -> Option<Algorithm> {
        self.algo.or(match self.coop.variant {
            Some(Variant::S) => Some(Algorithm::CgsoSWd),
            Some(Variant::H) => Some(Algorithm::CgsoHWd),
            None => None,
        })
    }

    /// Writes every value present in the file over `config`.
    pub fn apply(&self, config: &mut ExperimentConfig) -> Result<()> {
        if let Some(v) = self.coop.variant {
            if config.algorithm.variant() != Some(v) {
                return Err(Error::Config(format!(
                    "coop.variant {v:?} conflicts with algorithm {}",
                    config.algorithm
                )));
            }
        }
        let set = |dst: &mut usize, v: Option<usize>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut config.trials, self.trials);
        set(&mut config.population, self.pop);
        set(&mut config.max_iter, self.iters);
        set(&mut config.k, self.coop.k);
        set(&mut config.hidden, self.mlp.hidden);
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.scrounger_fraction {
            config.scrounger_fraction = v;
        }
        if let Some(v) = self.wd.enabled {
            config.wd.enabled = v;
        }
        if let Some(v) = self.wd.lambda0 {
            config.wd.lambda0 = v;
        }
        if let Some(v) = self.wd.inc {
            config.wd.inc = v;
        }
        if self.coop.exchange_half.is_some() {
            config.exchange_half = self.coop.exchange_half;
        }
        if let Some(v) = self.fitness.split {
            config.fitness_split = v;
        }
        config.validate()
    }
}
