use std::path::Path;

use scanfuse::boostnet::TrainConfig;
use scanfuse::confmap::ICH_CLASSES;
use scanfuse::featsel::{ShapleyMode, DEFAULT_COMPONENTS, DEFAULT_THRESHOLD};
use scanfuse::metrics::LikelihoodForm;
use scanfuse::synth::SynthConfig;
use scanfuse::{FusionConfig, LabelSpace};
use serde::{Deserialize, Serialize};

use crate::run::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepConfig {
    pub width: usize,
    pub height: usize,
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self { width: 224, height: 224 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    /// Principal components kept (clamped to what the data supports).
    pub pca_components: usize,
    /// Share a component must exceed to survive screening.
    pub threshold: f64,
    pub shapley: ShapleyMode,
    /// Rows explained when scoring importance; the first rows of the table.
    pub explain_rows: usize,
    /// Fit one PCA per feature-name prefix before this character.
    pub group_separator: Option<char>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            pca_components: DEFAULT_COMPONENTS,
            threshold: DEFAULT_THRESHOLD,
            shapley: ShapleyMode::MonteCarlo { permutations: 200 },
            explain_rows: 100,
            group_separator: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub likelihood: LikelihoodForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Scans with more slices are skipped by the enumeration check.
    pub max_slices: usize,
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { max_slices: 16, tolerance: 1e-12 }
    }
}

/// Everything a run can be configured with. The global seed is copied into
/// every module config, where each consumer derives its own labelled stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub classes: Vec<String>,
    pub prep: PrepConfig,
    pub selection: SelectionConfig,
    pub train: TrainConfig,
    pub fusion: FusionConfig,
    pub synth: SynthConfig,
    pub eval: EvalConfig,
    pub oracle: OracleConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            classes: ICH_CLASSES.iter().map(|s| s.to_string()).collect(),
            prep: PrepConfig::default(),
            selection: SelectionConfig::default(),
            train: TrainConfig::default(),
            fusion: FusionConfig::default(),
            synth: SynthConfig::default(),
            eval: EvalConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>, seed: Option<u64>) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", p.display())))?
            }
            None => Self::default(),
        };
        if let Some(s) = seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }

    /// Propagates the global seed and class list and validates every module.
    pub fn finalize(mut self) -> Result<Self, CliError> {
        self.train.seed = self.seed;
        self.synth.seed = self.seed;
        self.synth.classes = self.classes.clone();
        let usage = |e: scanfuse::Error| CliError::Usage(format!("invalid config: {e}"));
        self.label_space().map_err(usage)?;
        self.train.validate().map_err(usage)?;
        self.fusion.grid.validate().map_err(usage)?;
        if self.prep.width == 0 || self.prep.height == 0 {
            return Err(CliError::Usage("invalid config: prep size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.selection.threshold) {
            return Err(CliError::Usage("invalid config: selection threshold must lie in [0,1)".into()));
        }
        if self.selection.pca_components == 0 || self.selection.explain_rows == 0 {
            return Err(CliError::Usage("invalid config: pca_components and explain_rows must be >= 1".into()));
        }
        Ok(self)
    }

    pub fn label_space(&self) -> scanfuse::Result<LabelSpace> {
        LabelSpace::new(self.classes.iter().cloned())
    }
}
