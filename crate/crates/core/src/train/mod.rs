//! Adam optimization of the objective over paired target/background
//! minibatch streams.
//!
//! All randomness flows from `TrainConfig::seed` through three forked
//! streams (initialization, batch schedule, reparameterization noise), so a
//! run is reproducible bit for bit.

mod adam;

pub use adam::{adam_step, AdamState};

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::kernels::KernelConfig;
use crate::model::{loss_and_grad, Architecture, LossBreakdown, MmcVae, Noise, Objective};
use crate::tensor::{ParamSet, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub zero_bias_decoder: bool,
    pub kernel: KernelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda1: 1000.0,
            lambda2: 10000.0,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 128,
            epochs: 200,
            seed: 0,
            zero_bias_decoder: false,
            kernel: KernelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!(
                    "{name} must be a finite non-negative number, got {v}"
                ));
            }
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail(format!("lr must be positive, got {}", self.lr));
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return fail(format!("{name} must lie in [0, 1), got {v}"));
            }
        }
        if !(self.eps > 0.0) {
            return fail(format!("eps must be positive, got {}", self.eps));
        }
        if self.batch_size < 2 {
            return fail(format!(
                "batch_size must be at least 2, got {}",
                self.batch_size
            ));
        }
        self.kernel.validate()
    }

    pub fn objective(&self) -> Objective {
        Objective {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            kernel: self.kernel.clone(),
        }
    }
}

/// Mean loss components over one epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    #[serde(flatten)]
    pub loss: LossBreakdown,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub seed: u64,
    pub config: TrainConfig,
    pub epochs: Vec<EpochRecord>,
}

impl TrainLog {
    /// One JSON object per epoch, one per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for rec in &self.epochs {
            serde_json::to_writer(&mut w, rec)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_jsonl(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn totals(&self) -> Vec<f64> {
        self.epochs.iter().map(|r| r.loss.total).collect()
    }
}

struct Streams {
    init: Rng,
    schedule: Rng,
    noise: Rng,
}

fn streams(seed: u64) -> Streams {
    let mut master = Rng::seed_from_u64(seed);
    Streams {
        init: master.fork(),
        schedule: master.fork(),
        noise: master.fork(),
    }
}

/// Freshly initialized model for `cfg`, using the initialization stream of
/// `cfg.seed`.
pub fn init_model(mut arch: Architecture, cfg: &TrainConfig) -> Result<MmcVae> {
    arch.zero_bias_decoder = cfg.zero_bias_decoder;
    MmcVae::new(arch, &mut streams(cfg.seed).init)
}

/// One epoch of `(target rows, background rows)` minibatches.
///
/// The larger dataset is visited exactly once in shuffled order; the smaller
/// one is drawn from a shuffled stream that reshuffles when exhausted.
pub fn make_batches(
    n_target: usize,
    n_background: usize,
    batch_size: usize,
    rng: &mut Rng,
) -> Vec<(Vec<usize>, Vec<usize>)> {
    let target_order = rng.permutation(n_target);
    let background_order = rng.permutation(n_background);
    let target_leads = n_target >= n_background;
    let (lead, mut follow, follow_n) = if target_leads {
        (target_order, background_order, n_background)
    } else {
        (background_order, target_order, n_target)
    };

    let mut cursor = 0;
    let mut out = Vec::with_capacity(lead.len().div_ceil(batch_size.max(1)));
    for chunk in lead.chunks(batch_size) {
        let mut paired = Vec::with_capacity(chunk.len());
        while paired.len() < chunk.len() {
            if cursor == follow_n {
                follow = rng.permutation(follow_n);
                cursor = 0;
            }
            paired.push(follow[cursor]);
            cursor += 1;
        }
        if target_leads {
            out.push((chunk.to_vec(), paired));
        } else {
            out.push((paired, chunk.to_vec()));
        }
    }
    out
}

/// Trains `model` in place for `cfg.epochs` epochs.
pub fn fit(
    mut model: MmcVae,
    target: &LabeledDataset,
    background: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<(MmcVae, TrainLog)> {
    cfg.validate()?;
    if cfg.zero_bias_decoder != model.arch.zero_bias_decoder {
        return Err(Error::Config(format!(
            "zero_bias_decoder is {} in the config but {} in the model",
            cfg.zero_bias_decoder, model.arch.zero_bias_decoder
        )));
    }
    let d = model.arch.input_dim;
    for (name, ds) in [("target", target), ("background", background)] {
        if ds.dim() != d {
            return Err(Error::invalid(format!(
                "{name} has {} features but the model expects {d}",
                ds.dim()
            )));
        }
        if ds.n() == 0 {
            return Err(Error::invalid(format!("{name} dataset is empty")));
        }
    }

    let objective = cfg.objective();
    let Streams {
        mut schedule,
        mut noise,
        ..
    } = streams(cfg.seed);
    let mut adam = AdamState::new(&model.params());
    let mut log = TrainLog {
        seed: cfg.seed,
        config: cfg.clone(),
        epochs: Vec::with_capacity(cfg.epochs),
    };
    let (dz, ds) = (model.arch.z_dim, model.arch.s_dim);
    let mut step = 0usize;

    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let batches = make_batches(target.n(), background.n(), cfg.batch_size, &mut schedule);
        let mut sums = [0.0; 8];
        for (t_rows, b_rows) in &batches {
            let x = target.features.select_rows(t_rows);
            let b = background.features.select_rows(b_rows);
            let eps = Noise::sample(&mut noise, x.rows(), b.rows(), dz, ds);
            model.zero_grads();
            let loss = loss_and_grad(&mut model, &x, &b, &objective, &eps)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss became non-finite at step {step} (epoch {epoch}): {loss:?}"
                )));
            }
            adam_step(
                model.params_mut(),
                &mut adam,
                cfg.lr,
                cfg.beta1,
                cfg.beta2,
                cfg.eps,
            )
            .map_err(|e| match e {
                Error::NonFinite(m) => Error::NonFinite(format!("step {step}: {m}; loss {loss:?}")),
                other => other,
            })?;
            for (s, v) in sums.iter_mut().zip(loss.values()) {
                *s += v;
            }
            step += 1;
        }
        let k = batches.len() as f64;
        let mean = LossBreakdown::from_values(sums.map(|s| s / k));
        log::debug!("epoch {epoch}: total {:.6}", mean.total);
        log.epochs.push(EpochRecord {
            epoch,
            loss: mean,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok((model, log))
}

/// Initializes from `cfg.seed` and trains.
pub fn train(
    arch: Architecture,
    target: &LabeledDataset,
    background: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<(MmcVae, TrainLog)> {
    cfg.validate()?;
    let model = init_model(arch, cfg)?;
    fit(model, target, background, cfg)
}
