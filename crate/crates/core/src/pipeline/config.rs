use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::SplitRatios;
use crate::error::{Error, Result};
use crate::features::FeatureOptions;
use crate::imaging::{ImagingOptions, Technique};
use crate::learn::ForestConfig;

pub const CONFIG_VERSION: u32 = 1;

/// Feature sets the pipeline can export and evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Histogram,
    Hog,
    Haralick,
}

impl FeatureSet {
    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Histogram => "histogram",
            FeatureSet::Hog => "hog",
            FeatureSet::Haralick => "haralick",
        }
    }
}

impl std::str::FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "histogram" => Ok(FeatureSet::Histogram),
            "hog" => Ok(FeatureSet::Hog),
            "haralick" => Ok(FeatureSet::Haralick),
            other => Err(Error::InvalidArgument(format!(
                "unknown feature kind `{other}`"
            ))),
        }
    }
}

/// Where the spiral ranking and min-max table are fitted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormScope {
    /// Training partition only.
    #[default]
    Train,
    /// Every sample, test included.
    All,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnOptions {
    /// Z-score features with training-partition statistics before KNN.
    pub standardize: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    pub corpus_root: PathBuf,
    /// Optional `path,family` CSV overriding directory labels.
    pub label_file: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub techniques: Vec<Technique>,
    pub feature_kinds: Vec<FeatureSet>,
    pub ratios: SplitRatios,
    /// Drives the split, the forest and the hyperparameter search.
    pub seed: u64,
    pub search_budget: usize,
    pub norm_scope: NormScope,
    /// Worker threads; results do not depend on it.
    #[serde(skip_serializing)]
    pub jobs: Option<usize>,
    pub imaging: ImagingOptions,
    pub features: FeatureOptions,
    pub forest: ForestConfig,
    pub knn: KnnOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            version: CONFIG_VERSION,
            corpus_root: PathBuf::from("corpus"),
            label_file: None,
            out_dir: PathBuf::from("out"),
            techniques: Technique::ALL.to_vec(),
            feature_kinds: vec![FeatureSet::Histogram, FeatureSet::Hog, FeatureSet::Haralick],
            ratios: SplitRatios::default(),
            seed: 42,
            search_budget: 50,
            norm_scope: NormScope::Train,
            jobs: None,
            imaging: ImagingOptions::default(),
            features: FeatureOptions::default(),
            forest: ForestConfig::default(),
            knn: KnnOptions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::parse(origin, e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::parse(
                origin,
                format!(
                    "unsupported config version {} (expected {CONFIG_VERSION})",
                    cfg.version
                ),
            ));
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Check invariants and propagate the global seed into the forest.
    pub fn resolved(mut self) -> Result<Self> {
        self.ratios.validate()?;
        if self.search_budget == 0 {
            return Err(Error::InvalidArgument(
                "search_budget must be at least 1".into(),
            ));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidArgument("jobs must be at least 1".into()));
        }
        self.techniques.sort();
        self.techniques.dedup();
        self.feature_kinds.sort();
        self.feature_kinds.dedup();
        self.forest.seed = self.seed;
        Ok(self)
    }

    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
