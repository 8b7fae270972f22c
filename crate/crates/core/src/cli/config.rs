//! Resolved run configuration: a JSON file merged with command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    load_csv, preprocess_counts, top_variance_indices, LabeledDataset, Origin, SynthConfig,
};
use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::model::{Architecture, Likelihood};
use crate::train::TrainConfig;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    /// Library-size normalization target followed by `ln(1 + x)`.
    pub counts_total: Option<f64>,
    /// Keep this many highest-variance features (computed on target and background pooled).
    pub top_variance: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub z_dim: usize,
    pub s_dim: usize,
    pub hidden_dim: usize,
    pub likelihood: Likelihood,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            z_dim: 10,
            s_dim: 5,
            hidden_dim: 400,
            likelihood: Likelihood::GaussianUnitVariance,
        }
    }
}

impl ModelConfig {
    pub fn architecture(&self, input_dim: usize, zero_bias_decoder: bool) -> Architecture {
        Architecture {
            input_dim,
            hidden_dim: self.hidden_dim,
            z_dim: self.z_dim,
            s_dim: self.s_dim,
            likelihood: self.likelihood,
            zero_bias_decoder,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub lambda1_grid: Vec<f64>,
    pub lambda2_grid: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let grid = vec![0.0, 1.0, 10.0, 100.0, 1000.0, 10000.0];
        SweepConfig {
            lambda1_grid: grid.clone(),
            lambda2_grid: grid,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub target: Option<PathBuf>,
    pub background: Option<PathBuf>,
    pub label_column: Option<String>,
    pub checkpoint: Option<PathBuf>,
    pub preprocess: PreprocessConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub synth: SynthConfig,
    pub eval: EvalConfig,
    pub sweep: SweepConfig,
    /// Evaluation seeds used by `evaluate`, starting at `eval.split_seed`.
    pub n_seeds: usize,
    pub plot: bool,
    /// Rows reconstructed by `generate`; `None` means all.
    pub n_rows: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            target: None,
            background: None,
            label_column: None,
            checkpoint: None,
            preprocess: PreprocessConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            synth: SynthConfig::default(),
            eval: EvalConfig::default(),
            sweep: SweepConfig::default(),
            n_seeds: 1,
            plot: false,
            n_rows: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn require<'a>(&self, value: &'a Option<PathBuf>, name: &str) -> Result<&'a PathBuf> {
        let p = value
            .as_ref()
            .ok_or_else(|| Error::Config(format!("missing required input: {name}")))?;
        if !p.exists() {
            return Err(Error::Config(format!(
                "{name} path {} does not exist",
                p.display()
            )));
        }
        Ok(p)
    }

    pub fn target_path(&self) -> Result<&PathBuf> {
        self.require(&self.target, "target")
    }

    pub fn background_path(&self) -> Result<&PathBuf> {
        self.require(&self.background, "background")
    }

    pub fn checkpoint_path(&self) -> Result<&PathBuf> {
        self.require(&self.checkpoint, "checkpoint")
    }

    /// Loads target and, if configured, background data with preprocessing applied.
    pub fn load_data(
        &self,
        need_background: bool,
    ) -> Result<(LabeledDataset, Option<LabeledDataset>)> {
        let label = self.label_column.as_deref();
        let mut target = load_csv(self.target_path()?, label)?;
        target.origin = Origin::Target;
        let mut background = if need_background || self.background.is_some() {
            let path = self.background_path()?;
            // Background rows carry no classes; drop the label column if present.
            let label = label.filter(|l| header_has(path, l));
            let mut b = load_csv(path, label)?;
            b.origin = Origin::Background;
            b.class_labels = None;
            b.class_names = None;
            Some(b)
        } else {
            None
        };
        if let Some(b) = &background {
            if b.dim() != target.dim() {
                return Err(Error::Config(format!(
                    "target has {} features but background has {}",
                    target.dim(),
                    b.dim()
                )));
            }
        }
        if let Some(total) = self.preprocess.counts_total {
            target = preprocess_counts(&target, total)?.data;
            if let Some(b) = background.take() {
                background = Some(preprocess_counts(&b, total)?.data);
            }
        }
        if let Some(k) = self.preprocess.top_variance {
            // Pool both datasets so the same columns are kept on each side.
            let pooled = match &background {
                Some(b) => LabeledDataset {
                    features: target.features.vconcat(&b.features)?,
                    class_labels: None,
                    origin: Origin::Target,
                    feature_names: target.feature_names.clone(),
                    class_names: None,
                },
                None => target.clone(),
            };
            let chosen = top_variance_indices(&pooled, k)?;
            target = keep_columns(&target, &chosen);
            background = background.map(|b| keep_columns(&b, &chosen));
        }
        Ok((target, background))
    }
}

fn keep_columns(data: &LabeledDataset, cols: &[usize]) -> LabeledDataset {
    LabeledDataset {
        features: data.features.select_cols(cols),
        class_labels: data.class_labels.clone(),
        origin: data.origin,
        feature_names: data
            .feature_names
            .as_ref()
            .map(|n| cols.iter().map(|&c| n[c].clone()).collect()),
        class_names: data.class_names.clone(),
    }
}

fn header_has(path: &Path, column: &str) -> bool {
    csv::Reader::from_path(path)
        .and_then(|mut r| r.headers().map(|h| h.iter().any(|c| c.trim() == column)))
        .unwrap_or(false)
}
