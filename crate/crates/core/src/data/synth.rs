//! Synthetic target/background pairs with known latent structure.
//!
//! Shared latents `z ~ N(0, I)` drive both datasets. Target samples also
//! carry salient latents `s ~ N(μ_c, I)` whose class means sit on a regular
//! simplex; background samples have `s = 0`. Observations are
//! `x = g([z ‖ s]) + σ·ε` for a fixed random map `g`.

use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, Origin};
use crate::error::{Error, Result};
use crate::tensor::ops::relu_forward;
use crate::tensor::{sample_std_normal, Matrix, Rng};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderStyle {
    #[default]
    Linear,
    RandomReluMlp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub d_z: usize,
    pub d_s: usize,
    pub d: usize,
    pub n_target: usize,
    pub m_background: usize,
    pub n_classes: usize,
    pub class_separation: f64,
    pub noise_sigma: f64,
    pub decoder_style: DecoderStyle,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            d_z: 4,
            d_s: 2,
            d: 20,
            n_target: 2000,
            m_background: 2000,
            n_classes: 2,
            class_separation: 4.0,
            noise_sigma: 0.1,
            decoder_style: DecoderStyle::Linear,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.d_z == 0 || self.d_s == 0 {
            return fail("d_z and d_s must be positive".into());
        }
        if self.d < self.d_z + self.d_s {
            return fail(format!(
                "d = {} must be at least d_z + d_s = {}",
                self.d,
                self.d_z + self.d_s
            ));
        }
        if self.n_classes < 2 {
            return fail(format!("need at least two classes, got {}", self.n_classes));
        }
        if self.n_classes - 1 > self.d_s {
            return fail(format!(
                "{} class means need d_s >= {}",
                self.n_classes,
                self.n_classes - 1
            ));
        }
        if !(self.class_separation > 0.0) {
            return fail(format!(
                "class_separation must be positive, got {}",
                self.class_separation
            ));
        }
        if !(self.noise_sigma >= 0.0) {
            return fail(format!(
                "noise_sigma must be non-negative, got {}",
                self.noise_sigma
            ));
        }
        if self.n_target == 0 || self.m_background == 0 {
            return fail("both datasets need at least one sample".into());
        }
        Ok(())
    }
}

/// Ground-truth latents for every generated sample.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthLatents {
    pub target_z: Matrix,
    pub target_s: Matrix,
    pub target_class: Vec<usize>,
    pub background_z: Matrix,
    pub background_s: Matrix,
}

#[derive(Clone, Debug)]
pub struct SynthOutput {
    pub target: LabeledDataset,
    pub background: LabeledDataset,
    pub truth: TruthLatents,
    /// Class means of `s`, one row per class.
    pub class_means: Matrix,
    /// `(d_z + d_s) × d` loadings of the linear map; `None` for the MLP map.
    pub loadings: Option<Matrix>,
}

enum Map {
    Linear(Matrix),
    Mlp {
        w1: Matrix,
        b1: Vec<f64>,
        w2: Matrix,
    },
}

impl Map {
    fn apply(&self, u: &Matrix) -> Result<Matrix> {
        match self {
            Map::Linear(l) => u.matmul(l),
            Map::Mlp { w1, b1, w2 } => {
                let mut h = u.matmul(w1)?;
                h.add_row_vector(b1)?;
                relu_forward(&h).matmul(w2)
            }
        }
    }
}

/// Vertices of a regular simplex with pairwise distance `separation`,
/// expressed in the first `k − 1` of `dim` coordinates.
pub(crate) fn simplex_means(k: usize, dim: usize, separation: f64) -> Matrix {
    let mut out = Matrix::zeros(k, dim);
    let scale = separation / 2f64.sqrt();
    for c in 0..k {
        // v_c = (e_c − 𝟙/k)·scale, projected onto the Helmert basis
        for j in 1..k {
            let norm = ((j * (j + 1)) as f64).sqrt();
            let basis = |i: usize| -> f64 {
                if i < j {
                    1.0 / norm
                } else if i == j {
                    -(j as f64) / norm
                } else {
                    0.0
                }
            };
            let centred: f64 = (0..k)
                .map(|i| (f64::from(u8::from(i == c)) - 1.0 / k as f64) * basis(i))
                .sum();
            out.set(c, j - 1, centred * scale);
        }
    }
    out
}

pub fn synth_contrastive(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let latent = cfg.d_z + cfg.d_s;

    let map = match cfg.decoder_style {
        DecoderStyle::Linear => Map::Linear(sample_std_normal(&mut rng, latent, cfg.d)),
        DecoderStyle::RandomReluMlp => {
            let hidden = 2 * cfg.d;
            let w1 =
                sample_std_normal(&mut rng, latent, hidden).scale((2.0 / latent as f64).sqrt());
            let b1 = rng
                .normal_vec(hidden)
                .into_iter()
                .map(|v| 0.1 * v)
                .collect();
            let w2 = sample_std_normal(&mut rng, hidden, cfg.d).scale((2.0 / hidden as f64).sqrt());
            Map::Mlp { w1, b1, w2 }
        }
    };
    let means = simplex_means(cfg.n_classes, cfg.d_s, cfg.class_separation);

    let target_class: Vec<usize> = (0..cfg.n_target)
        .map(|_| rng.below(cfg.n_classes))
        .collect();
    let target_z = sample_std_normal(&mut rng, cfg.n_target, cfg.d_z);
    let mut target_s = sample_std_normal(&mut rng, cfg.n_target, cfg.d_s);
    for (r, &c) in target_class.iter().enumerate() {
        for (v, mu) in target_s.row_mut(r).iter_mut().zip(means.row(c)) {
            *v += mu;
        }
    }
    let background_z = sample_std_normal(&mut rng, cfg.m_background, cfg.d_z);
    let background_s = Matrix::zeros(cfg.m_background, cfg.d_s);

    let mut observe = |z: &Matrix, s: &Matrix| -> Result<Matrix> {
        let clean = map.apply(&z.hconcat(s)?)?;
        let noise = sample_std_normal(&mut rng, clean.rows(), clean.cols());
        clean.zip_with(&noise, |x, e| x + cfg.noise_sigma * e)
    };
    let x = observe(&target_z, &target_s)?;
    let b = observe(&background_z, &background_s)?;

    let names: Vec<String> = (0..cfg.d).map(|i| format!("f{i}")).collect();
    let class_names: Vec<String> = (0..cfg.n_classes).map(|c| c.to_string()).collect();
    let mut target = LabeledDataset::new(x, Origin::Target).with_labels(target_class.clone())?;
    target.feature_names = Some(names.clone());
    target.class_names = Some(class_names);
    let mut background = LabeledDataset::new(b, Origin::Background);
    background.feature_names = Some(names);

    Ok(SynthOutput {
        target,
        background,
        truth: TruthLatents {
            target_z,
            target_s,
            target_class,
            background_z,
            background_s,
        },
        class_means: means,
        loadings: match map {
            Map::Linear(l) => Some(l),
            Map::Mlp { .. } => None,
        },
    })
}
