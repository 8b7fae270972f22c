//! Variational bounds, MMD penalties and the combined training objective.
//!
//! The trainer minimizes
//!
//! ```text
//! total = −L_x(X) − L_b'(B) + λ₁·MMD(s_B, δ_{s′}) + λ₂·MMD(z_X, z_B)
//! ```
//!
//! where both bounds are per-batch means and the MMD terms are evaluated on
//! reparameterized samples of the current minibatch.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{mmd_biased_grad, mmd_to_constant_grad, KernelConfig};
use crate::model::network::{DecoderCache, EncoderCache};
use crate::model::{reparameterize_with, GaussianPosterior, Likelihood, MmcVae};
use crate::tensor::{sample_std_normal, Matrix, Rng};

const BERNOULLI_CLAMP: f64 = 1e-7;

/// Every term of the objective for one minibatch.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub recon_target: f64,
    pub kl_z_target: f64,
    pub kl_s_target: f64,
    pub recon_background: f64,
    pub kl_z_background: f64,
    pub mmd_salient_dirac: f64,
    pub mmd_background_match: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub const FIELDS: [&'static str; 8] = [
        "recon_target",
        "kl_z_target",
        "kl_s_target",
        "recon_background",
        "kl_z_background",
        "mmd_salient_dirac",
        "mmd_background_match",
        "total",
    ];

    pub fn values(&self) -> [f64; 8] {
        [
            self.recon_target,
            self.kl_z_target,
            self.kl_s_target,
            self.recon_background,
            self.kl_z_background,
            self.mmd_salient_dirac,
            self.mmd_background_match,
            self.total,
        ]
    }

    pub fn from_values(v: [f64; 8]) -> Self {
        LossBreakdown {
            recon_target: v[0],
            kl_z_target: v[1],
            kl_s_target: v[2],
            recon_background: v[3],
            kl_z_background: v[4],
            mmd_salient_dirac: v[5],
            mmd_background_match: v[6],
            total: v[7],
        }
    }

    /// The objective rebuilt from its components.
    pub fn weighted_total(&self, lambda1: f64, lambda2: f64) -> f64 {
        let elbo = self.recon_target - self.kl_z_target - self.kl_s_target;
        let bound = self.recon_background - self.kl_z_background;
        -elbo - bound + lambda1 * self.mmd_salient_dirac + lambda2 * self.mmd_background_match
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

/// Penalty weights and kernel for the two MMD terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    pub lambda1: f64,
    pub lambda2: f64,
    pub kernel: KernelConfig,
}

/// Standard normal noise for the four reparameterized latent blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct Noise {
    pub z_target: Matrix,
    pub s_target: Matrix,
    pub z_background: Matrix,
    pub s_background: Matrix,
}

impl Noise {
    pub fn sample(rng: &mut Rng, n: usize, m: usize, z_dim: usize, s_dim: usize) -> Self {
        Noise {
            z_target: sample_std_normal(rng, n, z_dim),
            s_target: sample_std_normal(rng, n, s_dim),
            z_background: sample_std_normal(rng, m, z_dim),
            s_background: sample_std_normal(rng, m, s_dim),
        }
    }

    pub fn zeros(n: usize, m: usize, z_dim: usize, s_dim: usize) -> Self {
        Noise {
            z_target: Matrix::zeros(n, z_dim),
            s_target: Matrix::zeros(n, s_dim),
            z_background: Matrix::zeros(m, z_dim),
            s_background: Matrix::zeros(m, s_dim),
        }
    }

    pub fn select(&self, target_rows: &[usize], background_rows: &[usize]) -> Self {
        Noise {
            z_target: self.z_target.select_rows(target_rows),
            s_target: self.s_target.select_rows(target_rows),
            z_background: self.z_background.select_rows(background_rows),
            s_background: self.s_background.select_rows(background_rows),
        }
    }
}

/// `½ Σ (μ² + σ² − 1 − log σ²)` summed over latent dimensions and averaged
/// over rows.
pub fn kl_std_normal(post: &GaussianPosterior) -> f64 {
    let rows = post.mu.rows().max(1) as f64;
    let mut total = 0.0;
    for (mu, lv) in post.mu.data().iter().zip(post.logvar.data()) {
        total += 0.5 * (mu * mu + lv.exp() - 1.0 - lv);
    }
    total / rows
}

fn kl_grad(post: &GaussianPosterior) -> (Matrix, Matrix) {
    let rows = post.mu.rows().max(1) as f64;
    (
        post.mu.scale(1.0 / rows),
        post.logvar.map(|lv| 0.5 * (lv.exp() - 1.0) / rows),
    )
}

/// Expected log-likelihood of `x` under decoder mean `x_hat`, averaged over rows.
pub fn recon_log_lik(x: &Matrix, x_hat: &Matrix, likelihood: Likelihood) -> Result<f64> {
    if x.shape() != x_hat.shape() {
        return Err(Error::dim("recon_log_lik", x.shape(), x_hat.shape()));
    }
    let rows = x.rows().max(1) as f64;
    match likelihood {
        Likelihood::GaussianUnitVariance => {
            let d = x.cols() as f64;
            let mut total = 0.0;
            for r in 0..x.rows() {
                let mut sq = 0.0;
                for (a, b) in x.row(r).iter().zip(x_hat.row(r)) {
                    sq += (a - b) * (a - b);
                }
                total += -0.5 * sq - 0.5 * d * (2.0 * PI).ln();
            }
            Ok(total / rows)
        }
        Likelihood::Bernoulli => {
            check_unit_interval(x)?;
            let mut total = 0.0;
            for r in 0..x.rows() {
                let mut row = 0.0;
                for (&a, &b) in x.row(r).iter().zip(x_hat.row(r)) {
                    let p = b.clamp(BERNOULLI_CLAMP, 1.0 - BERNOULLI_CLAMP);
                    row += a * p.ln() + (1.0 - a) * (1.0 - p).ln();
                }
                total += row;
            }
            Ok(total / rows)
        }
    }
}

fn check_unit_interval(x: &Matrix) -> Result<()> {
    if let Some(bad) = x.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(format!(
            "bernoulli likelihood needs data in [0, 1], found {bad}"
        )));
    }
    Ok(())
}

/// Gradient of `recon_log_lik` with respect to the decoder's pre-activation
/// output (identity for Gaussian, logits for Bernoulli).
fn recon_grad_logits(x: &Matrix, x_hat: &Matrix, likelihood: Likelihood) -> Result<Matrix> {
    let rows = x.rows().max(1) as f64;
    match likelihood {
        Likelihood::GaussianUnitVariance => x.zip_with(x_hat, |a, b| (a - b) / rows),
        Likelihood::Bernoulli => x.zip_with(x_hat, |a, b| {
            if b <= BERNOULLI_CLAMP || b >= 1.0 - BERNOULLI_CLAMP {
                0.0
            } else {
                // d/dp [a ln p + (1−a) ln(1−p)] · p(1−p)
                (a * (1.0 - b) - (1.0 - a) * b) / rows
            }
        }),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ElboParts {
    pub recon: f64,
    pub kl_z: f64,
    pub kl_s: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BoundParts {
    pub recon: f64,
    pub kl_z: f64,
}

/// Single-sample estimate of the target bound, averaged over rows.
pub fn elbo_target(model: &MmcVae, x: &Matrix, rng: &mut Rng) -> Result<(f64, ElboParts)> {
    let eps_z = sample_std_normal(rng, x.rows(), model.arch.z_dim);
    let eps_s = sample_std_normal(rng, x.rows(), model.arch.s_dim);
    elbo_target_with(model, x, &eps_z, &eps_s)
}

pub fn elbo_target_with(
    model: &MmcVae,
    x: &Matrix,
    eps_z: &Matrix,
    eps_s: &Matrix,
) -> Result<(f64, ElboParts)> {
    non_empty("target", x)?;
    model.check_input(x)?;
    let post_z = model.encoder_z.forward(x)?;
    let post_s = model.encoder_s.forward(x)?;
    let z = reparameterize_with(&post_z, eps_z)?;
    let s = reparameterize_with(&post_s, eps_s)?;
    let x_hat = model.decoder.forward(&z.hconcat(&s)?)?;
    let parts = ElboParts {
        recon: recon_log_lik(x, &x_hat, model.arch.likelihood)?,
        kl_z: kl_std_normal(&post_z),
        kl_s: kl_std_normal(&post_s),
    };
    Ok((parts.recon - parts.kl_z - parts.kl_s, parts))
}

/// Background bound without the salient-side term: reconstruction from
/// `[z ‖ s′]` minus the `z` KL. The salient side enters the objective
/// through the Dirac MMD penalty instead.
pub fn background_bound(model: &MmcVae, b: &Matrix, rng: &mut Rng) -> Result<(f64, BoundParts)> {
    let eps_z = sample_std_normal(rng, b.rows(), model.arch.z_dim);
    background_bound_with(model, b, &eps_z)
}

pub fn background_bound_with(
    model: &MmcVae,
    b: &Matrix,
    eps_z: &Matrix,
) -> Result<(f64, BoundParts)> {
    non_empty("background", b)?;
    model.check_input(b)?;
    let post_z = model.encoder_z.forward(b)?;
    let z = reparameterize_with(&post_z, eps_z)?;
    let s = Matrix::tile_row(&model.s_prime, b.rows());
    let b_hat = model.decoder.forward(&z.hconcat(&s)?)?;
    let parts = BoundParts {
        recon: recon_log_lik(b, &b_hat, model.arch.likelihood)?,
        kl_z: kl_std_normal(&post_z),
    };
    Ok((parts.recon - parts.kl_z, parts))
}

fn non_empty(which: &str, m: &Matrix) -> Result<()> {
    if m.rows() == 0 {
        Err(Error::invalid(format!("{which} batch is empty")))
    } else {
        Ok(())
    }
}

/// Draws fresh noise and evaluates the objective.
pub fn total_loss(
    model: &MmcVae,
    x: &Matrix,
    b: &Matrix,
    objective: &Objective,
    rng: &mut Rng,
) -> Result<LossBreakdown> {
    let noise = Noise::sample(rng, x.rows(), b.rows(), model.arch.z_dim, model.arch.s_dim);
    loss_with_noise(model, x, b, objective, &noise)
}

/// Objective for fixed noise, without gradients.
pub fn loss_with_noise(
    model: &MmcVae,
    x: &Matrix,
    b: &Matrix,
    objective: &Objective,
    noise: &Noise,
) -> Result<LossBreakdown> {
    Ok(forward(model, x, b, objective, noise)?.breakdown)
}

/// Objective for fixed noise; accumulates gradients of `total` into every
/// trainable parameter of `model`.
pub fn loss_and_grad(
    model: &mut MmcVae,
    x: &Matrix,
    b: &Matrix,
    objective: &Objective,
    noise: &Noise,
) -> Result<LossBreakdown> {
    let fwd = forward(model, x, b, objective, noise)?;
    backward(model, &fwd, objective, noise)?;
    Ok(fwd.breakdown)
}

struct Branch {
    post: GaussianPosterior,
    cache: EncoderCache,
}

struct Forward {
    breakdown: LossBreakdown,
    x: Matrix,
    b: Matrix,
    x_hat: Matrix,
    b_hat: Matrix,
    zx: Branch,
    sx: Branch,
    zb: Branch,
    sb: Branch,
    dec_x: DecoderCache,
    dec_b: DecoderCache,
    grad_zx_mmd: Matrix,
    grad_zb_mmd: Matrix,
    grad_sb_mmd: Matrix,
}

fn branch(enc: &crate::model::Encoder, data: &Matrix) -> Result<Branch> {
    let (post, cache) = enc.forward_cached(data)?;
    Ok(Branch { post, cache })
}

fn forward(
    model: &MmcVae,
    x: &Matrix,
    b: &Matrix,
    obj: &Objective,
    noise: &Noise,
) -> Result<Forward> {
    non_empty("target", x)?;
    non_empty("background", b)?;
    model.check_input(x)?;
    model.check_input(b)?;
    let lik = model.arch.likelihood;

    let zx = branch(&model.encoder_z, x)?;
    let sx = branch(&model.encoder_s, x)?;
    let z_x = reparameterize_with(&zx.post, &noise.z_target)?;
    let s_x = reparameterize_with(&sx.post, &noise.s_target)?;
    let (x_hat, dec_x) = model.decoder.forward_cached(&z_x.hconcat(&s_x)?)?;

    let zb = branch(&model.encoder_z, b)?;
    let sb = branch(&model.encoder_s, b)?;
    let z_b = reparameterize_with(&zb.post, &noise.z_background)?;
    let s_b = reparameterize_with(&sb.post, &noise.s_background)?;
    let s_ref = Matrix::tile_row(&model.s_prime, b.rows());
    let (b_hat, dec_b) = model.decoder.forward_cached(&z_b.hconcat(&s_ref)?)?;

    // Bandwidths are resolved on the current samples and then held fixed.
    let gammas_s = obj
        .kernel
        .resolve(&s_b, &Matrix::row_vector(&model.s_prime))?;
    let (mmd_s, grad_sb_mmd) = mmd_to_constant_grad(&s_b, &model.s_prime, &gammas_s)?;
    let gammas_z = obj.kernel.resolve(&z_x, &z_b)?;
    let (mmd_z, grad_zx_mmd, grad_zb_mmd) = mmd_biased_grad(&z_x, &z_b, &gammas_z)?;

    let mut breakdown = LossBreakdown {
        recon_target: recon_log_lik(x, &x_hat, lik)?,
        kl_z_target: kl_std_normal(&zx.post),
        kl_s_target: kl_std_normal(&sx.post),
        recon_background: recon_log_lik(b, &b_hat, lik)?,
        kl_z_background: kl_std_normal(&zb.post),
        mmd_salient_dirac: mmd_s,
        mmd_background_match: mmd_z,
        total: 0.0,
    };
    breakdown.total = breakdown.weighted_total(obj.lambda1, obj.lambda2);

    Ok(Forward {
        breakdown,
        x: x.clone(),
        b: b.clone(),
        x_hat,
        b_hat,
        zx,
        sx,
        zb,
        sb,
        dec_x,
        dec_b,
        grad_zx_mmd,
        grad_zb_mmd,
        grad_sb_mmd,
    })
}

/// Gradients of a reparameterized sample pushed back to `(μ, log σ²)`.
fn reparam_backward(
    post: &GaussianPosterior,
    eps: &Matrix,
    d_sample: &Matrix,
) -> Result<(Matrix, Matrix)> {
    let d_logvar = d_sample
        .zip_with(eps, |g, e| g * e)?
        .zip_with(&post.logvar, |g, lv| 0.5 * g * (0.5 * lv).exp())?;
    Ok((d_sample.clone(), d_logvar))
}

fn backward(model: &mut MmcVae, fwd: &Forward, obj: &Objective, noise: &Noise) -> Result<()> {
    let lik = model.arch.likelihood;
    let z_dim = model.arch.z_dim;

    // Target: −recon + KL(z) + KL(s) + λ₂·MMD(z_X, z_B)
    let d_logits_x = recon_grad_logits(&fwd.x, &fwd.x_hat, lik)?.scale(-1.0);
    let d_in_x = model.decoder.backward(&fwd.dec_x, &d_logits_x)?;
    let (mut d_zx, d_sx) = d_in_x.split_cols(z_dim)?;
    d_zx.add_assign(&fwd.grad_zx_mmd.scale(obj.lambda2))?;
    let (mut d_mu, mut d_lv) = reparam_backward(&fwd.zx.post, &noise.z_target, &d_zx)?;
    let (kl_mu, kl_lv) = kl_grad(&fwd.zx.post);
    d_mu.add_assign(&kl_mu)?;
    d_lv.add_assign(&kl_lv)?;
    model.encoder_z.backward(&fwd.zx.cache, &d_mu, &d_lv)?;

    let (mut d_mu, mut d_lv) = reparam_backward(&fwd.sx.post, &noise.s_target, &d_sx)?;
    let (kl_mu, kl_lv) = kl_grad(&fwd.sx.post);
    d_mu.add_assign(&kl_mu)?;
    d_lv.add_assign(&kl_lv)?;
    model.encoder_s.backward(&fwd.sx.cache, &d_mu, &d_lv)?;

    // Background: −recon + KL(z) + λ₂·MMD(z_X, z_B) + λ₁·MMD(s_B, δ_{s′})
    let d_logits_b = recon_grad_logits(&fwd.b, &fwd.b_hat, lik)?.scale(-1.0);
    let d_in_b = model.decoder.backward(&fwd.dec_b, &d_logits_b)?;
    let (mut d_zb, _) = d_in_b.split_cols(z_dim)?;
    d_zb.add_assign(&fwd.grad_zb_mmd.scale(obj.lambda2))?;
    let (mut d_mu, mut d_lv) = reparam_backward(&fwd.zb.post, &noise.z_background, &d_zb)?;
    let (kl_mu, kl_lv) = kl_grad(&fwd.zb.post);
    d_mu.add_assign(&kl_mu)?;
    d_lv.add_assign(&kl_lv)?;
    model.encoder_z.backward(&fwd.zb.cache, &d_mu, &d_lv)?;

    if obj.lambda1 != 0.0 {
        let d_sb = fwd.grad_sb_mmd.scale(obj.lambda1);
        let (d_mu, d_lv) = reparam_backward(&fwd.sb.post, &noise.s_background, &d_sb)?;
        model.encoder_s.backward(&fwd.sb.cache, &d_mu, &d_lv)?;
    }
    Ok(())
}
