//! The moment matching contrastive VAE.
//!
//! Two encoders infer background latents `z` and salient latents `s`; a
//! single decoder maps `[z ‖ s]` back to data space. Background samples are
//! decoded from `[z ‖ s′]` with a fixed reference vector `s′`.

mod checkpoint;
mod network;
mod objective;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use network::{Decoder, Encoder, Linear, LOGVAR_MAX, LOGVAR_MIN};
pub use objective::{
    background_bound, elbo_target, kl_std_normal, loss_and_grad, loss_with_noise, recon_log_lik,
    total_loss, BoundParts, ElboParts, LossBreakdown, Noise, Objective,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{sample_std_normal, Matrix, Param, ParamSet, Rng};

/// Observation model `p(x | z, s)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Likelihood {
    /// Unit-variance Gaussian centred on the decoder output.
    #[default]
    GaussianUnitVariance,
    /// Independent Bernoulli per feature; the decoder ends in a sigmoid.
    Bernoulli,
}

/// Shape and fixed settings of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub z_dim: usize,
    pub s_dim: usize,
    #[serde(default)]
    pub likelihood: Likelihood,
    #[serde(default)]
    pub zero_bias_decoder: bool,
}

impl Architecture {
    pub fn new(input_dim: usize, z_dim: usize, s_dim: usize) -> Self {
        Architecture {
            input_dim,
            hidden_dim: 400,
            z_dim,
            s_dim,
            likelihood: Likelihood::default(),
            zero_bias_decoder: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.z_dim == 0 || self.s_dim == 0 {
            return Err(Error::Config(format!(
                "all architecture sizes must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Which latent block an encoder produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Latent {
    Z,
    S,
}

/// Diagonal Gaussian posterior, one row per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPosterior {
    pub mu: Matrix,
    pub logvar: Matrix,
}

/// Which latent blocks to keep when reconstructing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Keep {
    Both,
    BackgroundOnly,
    SalientOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MmcVae {
    pub arch: Architecture,
    pub encoder_z: Encoder,
    pub encoder_s: Encoder,
    pub decoder: Decoder,
    pub s_prime: Vec<f64>,
}

impl MmcVae {
    /// Freshly initialized model with `s′ = 0`.
    pub fn new(arch: Architecture, rng: &mut Rng) -> Result<Self> {
        arch.validate()?;
        let encoder_z = Encoder::new(
            "encoder_z",
            arch.input_dim,
            arch.hidden_dim,
            arch.z_dim,
            rng,
        );
        let encoder_s = Encoder::new(
            "encoder_s",
            arch.input_dim,
            arch.hidden_dim,
            arch.s_dim,
            rng,
        );
        let decoder = Decoder::new(
            arch.z_dim + arch.s_dim,
            arch.hidden_dim,
            arch.input_dim,
            arch.zero_bias_decoder,
            arch.likelihood == Likelihood::Bernoulli,
            rng,
        );
        Ok(MmcVae {
            s_prime: vec![0.0; arch.s_dim],
            arch,
            encoder_z,
            encoder_s,
            decoder,
        })
    }

    pub fn with_s_prime(mut self, s_prime: Vec<f64>) -> Result<Self> {
        if s_prime.len() != self.arch.s_dim {
            return Err(Error::dim(
                "s_prime",
                (1, self.arch.s_dim),
                (1, s_prime.len()),
            ));
        }
        self.s_prime = s_prime;
        Ok(self)
    }

    pub(crate) fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.arch.input_dim {
            return Err(Error::dim(
                "model input",
                (x.rows(), self.arch.input_dim),
                x.shape(),
            ));
        }
        Ok(())
    }

    pub fn encode(&self, x: &Matrix, which: Latent) -> Result<GaussianPosterior> {
        self.check_input(x)?;
        match which {
            Latent::Z => self.encoder_z.forward(x),
            Latent::S => self.encoder_s.forward(x),
        }
    }

    /// Decoder mean for latents `z` (n × d_z) and `s` (n × d_s).
    pub fn generate(&self, z: &Matrix, s: &Matrix) -> Result<Matrix> {
        if z.cols() != self.arch.z_dim || s.cols() != self.arch.s_dim || z.rows() != s.rows() {
            return Err(Error::dim("generate", z.shape(), s.shape()));
        }
        self.decoder.forward(&z.hconcat(s)?)
    }

    /// Encodes with posterior means, replaces the suppressed block with
    /// zeros and decodes.
    pub fn reconstruct_partial(&self, x: &Matrix, keep: Keep) -> Result<Matrix> {
        let mut z = self.encode(x, Latent::Z)?.mu;
        let mut s = self.encode(x, Latent::S)?.mu;
        match keep {
            Keep::Both => {}
            Keep::BackgroundOnly => s.fill(0.0),
            Keep::SalientOnly => z.fill(0.0),
        }
        self.generate(&z, &s)
    }

    /// Decodes prior draws. Target samples draw `s ~ N(0, I)`; background
    /// samples use `s = s′`.
    pub fn sample(&self, n: usize, target: bool, rng: &mut Rng) -> Result<Matrix> {
        let z = sample_std_normal(rng, n, self.arch.z_dim);
        let s = if target {
            sample_std_normal(rng, n, self.arch.s_dim)
        } else {
            Matrix::tile_row(&self.s_prime, n)
        };
        self.generate(&z, &s)
    }
}

impl ParamSet for MmcVae {
    fn params(&self) -> Vec<&Param> {
        let mut v = self.encoder_z.params();
        v.extend(self.encoder_s.params());
        v.extend(self.decoder.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.encoder_z.params_mut();
        v.extend(self.encoder_s.params_mut());
        v.extend(self.decoder.params_mut());
        v
    }
}

/// `μ + exp(log σ² / 2) ⊙ ε` with `ε ~ N(0, I)`.
pub fn reparameterize(post: &GaussianPosterior, rng: &mut Rng) -> Matrix {
    let eps = sample_std_normal(rng, post.mu.rows(), post.mu.cols());
    reparameterize_with(post, &eps).expect("noise shaped like the posterior")
}

/// Reparameterized sample for a given noise matrix.
pub fn reparameterize_with(post: &GaussianPosterior, eps: &Matrix) -> Result<Matrix> {
    let scaled = post.logvar.zip_with(eps, |lv, e| (0.5 * lv).exp() * e)?;
    post.mu.add(&scaled)
}
