//! Evaluation protocols: held-out logistic accuracy, silhouette scores, PCA
//! projections and MMD sample quality.
//!
//! Embeddings are posterior means, so every metric is deterministic given the
//! model, the data and the split seed.

mod logistic;
mod pca;
mod silhouette;

pub use logistic::{
    accuracy, logistic_fit, logistic_loss, LogisticModel, LogisticOptions, OneVsRest,
};
pub use pca::{covariance, pca_2d, symmetric_eigen, Pca2};
pub use silhouette::{silhouette, Silhouette};

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{stratified_split_indices, LabeledDataset, Origin};
use crate::error::{Error, Result};
use crate::kernels::{mmd_biased, KernelConfig};
use crate::model::{Latent, MmcVae};
use crate::tensor::{Matrix, Rng};

/// Points with per-row class label and origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Embeddings {
    pub points: Matrix,
    pub labels: Vec<usize>,
    pub origin: Vec<Origin>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelSource {
    Class,
    Origin,
}

impl Embeddings {
    pub fn new(points: Matrix, labels: Vec<usize>, origin: Vec<Origin>) -> Result<Self> {
        if labels.len() != points.rows() || origin.len() != points.rows() {
            return Err(Error::invalid(format!(
                "{} points with {} labels and {} origins",
                points.rows(),
                labels.len(),
                origin.len()
            )));
        }
        Ok(Embeddings {
            points,
            labels,
            origin,
        })
    }

    pub fn targets(&self, source: LabelSource) -> Vec<usize> {
        match source {
            LabelSource::Class => self.labels.clone(),
            LabelSource::Origin => self
                .origin
                .iter()
                .map(|o| usize::from(*o == Origin::Background))
                .collect(),
        }
    }
}

/// Posterior-mean codes of `data` in the chosen latent space.
pub fn embed(model: &MmcVae, data: &Matrix, which: Latent) -> Result<Matrix> {
    Ok(model.encode(data, which)?.mu)
}

/// Held-out accuracy of a logistic probe on a stratified 80/20 split.
///
/// Rows are first put in a canonical order (by label, then coordinates), so
/// the result does not depend on the input row order.
pub fn accuracy_80_20(
    emb: &Embeddings,
    source: LabelSource,
    seed: u64,
    opts: &LogisticOptions,
) -> Result<f64> {
    let y = emb.targets(source);
    let n = y.len();
    let mut canon: Vec<usize> = (0..n).collect();
    canon.sort_by(|&a, &b| {
        y[a].cmp(&y[b]).then_with(|| {
            emb.points
                .row(a)
                .iter()
                .zip(emb.points.row(b))
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let y_canon: Vec<usize> = canon.iter().map(|&i| y[i]).collect();
    let mut rng = Rng::seed_from_u64(seed);
    let (train, test) = stratified_split_indices(n, Some(&y_canon), 0.8, &mut rng)?;
    let train: Vec<usize> = train.iter().map(|&i| canon[i]).collect();
    let test: Vec<usize> = test.iter().map(|&i| canon[i]).collect();

    let classes = |rows: &[usize]| {
        let mut c: Vec<usize> = rows.iter().map(|&i| y[i]).collect();
        c.sort_unstable();
        c.dedup();
        c
    };
    if classes(&train) != classes(&test) {
        return Err(Error::invalid(
            "a class is missing from one side of the 80/20 split; try another seed or more data",
        ));
    }
    let y_train: Vec<usize> = train.iter().map(|&i| y[i]).collect();
    let y_test: Vec<usize> = test.iter().map(|&i| y[i]).collect();
    let clf = OneVsRest::fit(&emb.points.select_rows(&train), &y_train, opts)?;
    Ok(accuracy(
        &clf.predict(&emb.points.select_rows(&test)),
        &y_test,
    ))
}

/// Settings shared by the report builders.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub split_seed: u64,
    pub max_iter: usize,
    pub l2: f64,
    /// Generated sample count for sample quality; `0` means "same as the real data".
    pub n_generated: usize,
    pub sample_seed: u64,
    pub kernel: KernelConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            split_seed: 0,
            max_iter: 1000,
            l2: 1.0,
            n_generated: 0,
            sample_seed: 0,
            kernel: KernelConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn logistic(&self) -> LogisticOptions {
        LogisticOptions {
            max_iter: self.max_iter,
            l2: self.l2,
            ..LogisticOptions::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adherence {
    pub logistic_z_origin: f64,
    pub silhouette_z_origin: f64,
    pub logistic_s_vs_sprime: f64,
    pub silhouette_s_vs_sprime: f64,
    pub silhouette_s_vs_sprime_degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub logistic_s_class: f64,
    pub silhouette_s_class: f64,
    pub logistic_z_class: f64,
    pub silhouette_z_class: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleQuality {
    pub mmd_background: f64,
    pub mmd_target: f64,
}

/// Whether the learned codes respect the model's assumptions: `z` should not
/// reveal origin and background `s` codes should be indistinguishable from `s′`.
pub fn assumption_report(
    model: &MmcVae,
    target: &Matrix,
    background: &Matrix,
    cfg: &EvalConfig,
) -> Result<Adherence> {
    let opts = cfg.logistic();
    let zx = embed(model, target, Latent::Z)?;
    let zb = embed(model, background, Latent::Z)?;
    let (n, m) = (zx.rows(), zb.rows());
    let origin: Vec<Origin> = std::iter::repeat_n(Origin::Target, n)
        .chain(std::iter::repeat_n(Origin::Background, m))
        .collect();
    let z = Embeddings::new(zx.vconcat(&zb)?, vec![0; n + m], origin.clone())?;
    let z_labels = z.targets(LabelSource::Origin);

    let sb = embed(model, background, Latent::S)?;
    let sprime = Matrix::tile_row(&model.s_prime, m);
    let s_origin: Vec<Origin> = std::iter::repeat_n(Origin::Background, m)
        .chain(std::iter::repeat_n(Origin::Target, m))
        .collect();
    let s = Embeddings::new(sb.vconcat(&sprime)?, vec![0; 2 * m], s_origin)?;
    let s_labels = s.targets(LabelSource::Origin);
    let s_sil = silhouette(&s.points, &s_labels)?;

    Ok(Adherence {
        logistic_z_origin: accuracy_80_20(&z, LabelSource::Origin, cfg.split_seed, &opts)?,
        silhouette_z_origin: silhouette(&z.points, &z_labels)?.score,
        logistic_s_vs_sprime: accuracy_80_20(&s, LabelSource::Origin, cfg.split_seed, &opts)?,
        silhouette_s_vs_sprime: s_sil.score,
        silhouette_s_vs_sprime_degenerate: s_sil.degenerate,
    })
}

/// Class separability in the salient space (higher is better) and in the
/// background space (lower is better).
pub fn separation_report(
    model: &MmcVae,
    target: &LabeledDataset,
    cfg: &EvalConfig,
) -> Result<Separation> {
    let labels = target
        .class_labels
        .clone()
        .ok_or_else(|| Error::invalid("separation metrics need class labels on the target data"))?;
    let opts = cfg.logistic();
    let origin = vec![Origin::Target; target.n()];
    let s = Embeddings::new(
        embed(model, &target.features, Latent::S)?,
        labels.clone(),
        origin.clone(),
    )?;
    let z = Embeddings::new(
        embed(model, &target.features, Latent::Z)?,
        labels.clone(),
        origin,
    )?;
    Ok(Separation {
        logistic_s_class: accuracy_80_20(&s, LabelSource::Class, cfg.split_seed, &opts)?,
        silhouette_s_class: silhouette(&s.points, &labels)?.score,
        logistic_z_class: accuracy_80_20(&z, LabelSource::Class, cfg.split_seed, &opts)?,
        silhouette_z_class: silhouette(&z.points, &labels)?.score,
    })
}

/// MMD between generated samples and real data. Target samples draw
/// `s ~ N(0, I)`; background samples fix `s = s′`.
pub fn sample_quality_mmd(
    model: &MmcVae,
    real: &Matrix,
    origin: Origin,
    n_gen: usize,
    rng: &mut Rng,
    kernel: &KernelConfig,
) -> Result<f64> {
    if n_gen < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 generated samples, got {n_gen}"
        )));
    }
    let generated = model.sample(n_gen, origin == Origin::Target, rng)?;
    mmd_biased(&generated, real, kernel)
}

pub fn sample_quality(
    model: &MmcVae,
    target: &Matrix,
    background: &Matrix,
    cfg: &EvalConfig,
) -> Result<SampleQuality> {
    let mut rng = Rng::seed_from_u64(cfg.sample_seed);
    let count = |real: &Matrix| {
        if cfg.n_generated == 0 {
            real.rows()
        } else {
            cfg.n_generated
        }
    };
    let mmd_background = sample_quality_mmd(
        model,
        background,
        Origin::Background,
        count(background),
        &mut rng,
        &cfg.kernel,
    )?;
    let mmd_target = sample_quality_mmd(
        model,
        target,
        Origin::Target,
        count(target),
        &mut rng,
        &cfg.kernel,
    )?;
    Ok(SampleQuality {
        mmd_background,
        mmd_target,
    })
}

/// All metrics for one trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub adherence: Adherence,
    pub separation: Option<Separation>,
    pub sample_quality: SampleQuality,
}

impl ModelMetrics {
    /// Flat `(name, value)` pairs in a fixed order.
    pub fn flatten(&self) -> Vec<(&'static str, f64)> {
        let a = &self.adherence;
        let mut out = vec![
            ("logistic_z_origin", a.logistic_z_origin),
            ("silhouette_z_origin", a.silhouette_z_origin),
            ("logistic_s_vs_sprime", a.logistic_s_vs_sprime),
            ("silhouette_s_vs_sprime", a.silhouette_s_vs_sprime),
        ];
        if let Some(s) = &self.separation {
            out.extend([
                ("logistic_s_class", s.logistic_s_class),
                ("silhouette_s_class", s.silhouette_s_class),
                ("logistic_z_class", s.logistic_z_class),
                ("silhouette_z_class", s.silhouette_z_class),
            ]);
        }
        out.extend([
            ("mmd_background", self.sample_quality.mmd_background),
            ("mmd_target", self.sample_quality.mmd_target),
        ]);
        out
    }
}

/// Runs every protocol on one model. Separation metrics are skipped when the
/// target has no class labels.
pub fn evaluate_model(
    model: &MmcVae,
    target: &LabeledDataset,
    background: &LabeledDataset,
    cfg: &EvalConfig,
) -> Result<ModelMetrics> {
    Ok(ModelMetrics {
        adherence: assumption_report(model, &target.features, &background.features, cfg)?,
        separation: match target.class_labels {
            Some(_) => Some(separation_report(model, target, cfg)?),
            None => None,
        },
        sample_quality: sample_quality(model, &target.features, &background.features, cfg)?,
    })
}

/// Mean, standard deviation over seeds (`n − 1` denominator; 0 for one seed)
/// and the per-seed values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
    pub values: Vec<f64>,
}

impl MetricSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MetricSummary { mean, std, values }
    }

    pub fn median(&self) -> f64 {
        median(&self.values)
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Metrics aggregated over several seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seeds: Vec<u64>,
    pub metrics: BTreeMap<String, MetricSummary>,
    /// Seeds whose s_b-vs-s′ silhouette hit the all-zero-distance case.
    pub degenerate_silhouette_seeds: Vec<u64>,
}

impl EvalReport {
    pub fn aggregate(runs: &[(u64, ModelMetrics)]) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::invalid("no runs to aggregate"));
        }
        let mut cols: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let names: Vec<&str> = runs[0].1.flatten().iter().map(|(k, _)| *k).collect();
        for (seed, m) in runs {
            let flat = m.flatten();
            if flat.len() != names.len() {
                return Err(Error::invalid(format!(
                    "seed {seed} reports a different metric set"
                )));
            }
            for (k, v) in flat {
                cols.entry(k.to_owned()).or_default().push(v);
            }
        }
        Ok(EvalReport {
            seeds: runs.iter().map(|(s, _)| *s).collect(),
            metrics: cols
                .into_iter()
                .map(|(k, v)| (k, MetricSummary::from_values(v)))
                .collect(),
            degenerate_silhouette_seeds: runs
                .iter()
                .filter(|(_, m)| m.adherence.silhouette_s_vs_sprime_degenerate)
                .map(|(s, _)| *s)
                .collect(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::invalid(e.to_string()))
    }

    /// `metric,mean,std,seed_<s>...` with one row per metric.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = String::from("metric,mean,std");
        for s in &self.seeds {
            header.push_str(&format!(",seed_{s}"));
        }
        writeln!(w, "{header}")?;
        for (name, m) in &self.metrics {
            let mut line = format!("{name},{:?},{:?}", m.mean, m.std);
            for v in &m.values {
                line.push_str(&format!(",{v:?}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}
