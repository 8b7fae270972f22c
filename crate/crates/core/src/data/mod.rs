//! Dataset containers, CSV ingestion, count preprocessing and the synthetic
//! contrastive generator.

mod csv_io;
mod preprocess;
mod split;
mod synth;

pub use csv_io::{load_csv, read_csv, save_csv, write_csv};
pub use preprocess::{preprocess_counts, select_top_variance, top_variance_indices, Preprocessed};
pub use split::{stratified_split_indices, train_test_split};
pub use synth::{synth_contrastive, DecoderStyle, SynthConfig, SynthOutput, TruthLatents};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Whether a sample belongs to the target or the background dataset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    #[default]
    Target,
    Background,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Target => "target",
            Origin::Background => "background",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledDataset {
    pub features: Matrix,
    pub class_labels: Option<Vec<usize>>,
    pub origin: Origin,
    pub feature_names: Option<Vec<String>>,
    /// Original label strings, indexed by encoded class.
    pub class_names: Option<Vec<String>>,
}

impl LabeledDataset {
    pub fn new(features: Matrix, origin: Origin) -> Self {
        LabeledDataset {
            features,
            class_labels: None,
            origin,
            feature_names: None,
            class_names: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.features.rows() {
            return Err(Error::invalid(format!(
                "{} labels for {} rows",
                labels.len(),
                self.features.rows()
            )));
        }
        self.class_labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Subset of rows, carrying labels and names along.
    pub fn select(&self, rows: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self.features.select_rows(rows),
            class_labels: self
                .class_labels
                .as_ref()
                .map(|l| rows.iter().map(|&i| l[i]).collect()),
            origin: self.origin,
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// First `n` rows (or all, if fewer).
    pub fn head(&self, n: usize) -> LabeledDataset {
        let rows: Vec<usize> = (0..n.min(self.n())).collect();
        self.select(&rows)
    }
}
