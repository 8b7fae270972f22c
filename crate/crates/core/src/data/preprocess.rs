use log::warn;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct Preprocessed {
    pub data: LabeledDataset,
    /// Indices (in the input) of rows removed because they summed to zero.
    pub dropped: Vec<usize>,
}

/// Library-size normalization to `total` counts per row followed by `ln(1 + ·)`.
/// All-zero rows are dropped.
pub fn preprocess_counts(data: &LabeledDataset, total: f64) -> Result<Preprocessed> {
    if !(total > 0.0) {
        return Err(Error::invalid(format!(
            "target total must be positive, got {total}"
        )));
    }
    if let Some(v) = data.features.data().iter().find(|v| **v < 0.0) {
        return Err(Error::invalid(format!(
            "counts must be non-negative, found {v}"
        )));
    }
    let mut keep = Vec::with_capacity(data.n());
    let mut dropped = Vec::new();
    for r in 0..data.n() {
        if data.features.row(r).iter().sum::<f64>() > 0.0 {
            keep.push(r);
        } else {
            dropped.push(r);
        }
    }
    if !dropped.is_empty() {
        warn!(
            "dropped {} all-zero rows during count normalization",
            dropped.len()
        );
    }
    let mut out = data.select(&keep);
    let features = &mut out.features;
    for r in 0..features.rows() {
        let row = features.row_mut(r);
        let sum: f64 = row.iter().sum();
        let scale = total / sum;
        for v in row.iter_mut() {
            *v = (*v * scale).ln_1p();
        }
    }
    Ok(Preprocessed { data: out, dropped })
}

fn column_variances(m: &Matrix) -> Vec<f64> {
    let n = m.rows();
    let means = m.col_means();
    let mut acc = vec![0.0; m.cols()];
    for r in 0..n {
        for ((a, v), mu) in acc.iter_mut().zip(m.row(r)).zip(&means) {
            *a += (v - mu) * (v - mu);
        }
    }
    let denom = n.saturating_sub(1).max(1) as f64;
    acc.into_iter().map(|a| a / denom).collect()
}

/// Keeps the `k` highest-variance columns (ties to the lower index), in
/// their original order.
/// Indices (ascending) of the `k` highest-variance columns; ties go to the
/// lower index.
pub fn top_variance_indices(data: &LabeledDataset, k: usize) -> Result<Vec<usize>> {
    let d = data.dim();
    if k > d {
        return Err(Error::invalid(format!("cannot keep {k} of {d} features")));
    }
    let var = column_variances(&data.features);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| var[b].total_cmp(&var[a]).then(a.cmp(&b)));
    let mut chosen = order[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

pub fn select_top_variance(data: &LabeledDataset, k: usize) -> Result<LabeledDataset> {
    let chosen = top_variance_indices(data, k)?;
    let mut out = data.clone();
    out.features = data.features.select_cols(&chosen);
    out.feature_names = data
        .feature_names
        .as_ref()
        .map(|names| chosen.iter().map(|&c| names[c].clone()).collect());
    Ok(out)
}
