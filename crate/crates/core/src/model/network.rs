use crate::error::Result;
use crate::model::GaussianPosterior;
use crate::tensor::ops::{affine_backward, affine_forward, relu_backward, relu_forward, sigmoid};
use crate::tensor::{Matrix, Param, Rng};

pub const LOGVAR_MIN: f64 = -15.0;
pub const LOGVAR_MAX: f64 = 15.0;

/// Fully connected layer. With `zero_bias` the bias is held at zero and frozen.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub weight: Param,
    pub bias: Param,
    pub zero_bias: bool,
}

impl Linear {
    /// He-normal weights, zero bias.
    pub fn new(name: &str, fan_in: usize, fan_out: usize, zero_bias: bool, rng: &mut Rng) -> Self {
        let std = (2.0 / fan_in.max(1) as f64).sqrt();
        let w: Vec<f64> = rng
            .normal_vec(fan_in * fan_out)
            .into_iter()
            .map(|v| v * std)
            .collect();
        let weight = Param::new(
            format!("{name}.weight"),
            Matrix::from_vec(fan_in, fan_out, w).expect("shape"),
        );
        let mut bias = Param::new(format!("{name}.bias"), Matrix::zeros(1, fan_out));
        if zero_bias {
            bias = bias.frozen();
        }
        Linear {
            weight,
            bias,
            zero_bias,
        }
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        affine_forward(x, &self.weight, &self.bias, self.zero_bias)
    }

    pub fn backward(
        &mut self,
        x: &Matrix,
        upstream: &Matrix,
        want_input_grad: bool,
    ) -> Result<Option<Matrix>> {
        affine_backward(
            x,
            upstream,
            &mut self.weight,
            &mut self.bias,
            self.zero_bias,
            want_input_grad,
        )
    }

    pub fn in_dim(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.value.cols()
    }

    fn params(&self) -> [&Param; 2] {
        [&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.weight, &mut self.bias]
    }
}

/// `x → ReLU(x·W₁ + b₁) → (μ, log σ²)` with separate linear heads.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoder {
    pub hidden: Linear,
    pub mu: Linear,
    pub logvar: Linear,
}

pub(crate) struct EncoderCache {
    input: Matrix,
    pre: Matrix,
    hidden: Matrix,
    raw_logvar: Matrix,
}

impl Encoder {
    pub fn new(name: &str, input: usize, hidden: usize, latent: usize, rng: &mut Rng) -> Self {
        Encoder {
            hidden: Linear::new(&format!("{name}.hidden"), input, hidden, false, rng),
            mu: Linear::new(&format!("{name}.mu"), hidden, latent, false, rng),
            logvar: Linear::new(&format!("{name}.logvar"), hidden, latent, false, rng),
        }
    }

    pub fn forward(&self, x: &Matrix) -> Result<GaussianPosterior> {
        Ok(self.forward_cached(x)?.0)
    }

    pub(crate) fn forward_cached(&self, x: &Matrix) -> Result<(GaussianPosterior, EncoderCache)> {
        let pre = self.hidden.forward(x)?;
        let hidden = relu_forward(&pre);
        let mu = self.mu.forward(&hidden)?;
        let raw_logvar = self.logvar.forward(&hidden)?;
        let logvar = raw_logvar.map(|v| v.clamp(LOGVAR_MIN, LOGVAR_MAX));
        Ok((
            GaussianPosterior { mu, logvar },
            EncoderCache {
                input: x.clone(),
                pre,
                hidden,
                raw_logvar,
            },
        ))
    }

    pub(crate) fn backward(
        &mut self,
        cache: &EncoderCache,
        d_mu: &Matrix,
        d_logvar: &Matrix,
    ) -> Result<()> {
        // clamping passes gradient only strictly inside the interval
        let d_raw = d_logvar.zip_with(&cache.raw_logvar, |g, v| {
            if v > LOGVAR_MIN && v < LOGVAR_MAX {
                g
            } else {
                0.0
            }
        })?;
        let mut d_hidden = self
            .mu
            .backward(&cache.hidden, d_mu, true)?
            .expect("requested");
        let d_from_logvar = self
            .logvar
            .backward(&cache.hidden, &d_raw, true)?
            .expect("requested");
        d_hidden.add_assign(&d_from_logvar)?;
        let d_pre = relu_backward(&d_hidden, &cache.pre)?;
        self.hidden.backward(&cache.input, &d_pre, false)?;
        Ok(())
    }

    pub fn latent_dim(&self) -> usize {
        self.mu.out_dim()
    }

    pub(crate) fn params(&self) -> Vec<&Param> {
        let mut v = Vec::with_capacity(6);
        v.extend(self.hidden.params());
        v.extend(self.mu.params());
        v.extend(self.logvar.params());
        v
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = Vec::with_capacity(6);
        v.extend(self.hidden.params_mut());
        v.extend(self.mu.params_mut());
        v.extend(self.logvar.params_mut());
        v
    }
}

/// `[z ‖ s] → ReLU(·W₁ + b₁) → ·W₂ + b₂`, optionally followed by a sigmoid.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoder {
    pub hidden: Linear,
    pub output: Linear,
    pub sigmoid_output: bool,
}

pub(crate) struct DecoderCache {
    input: Matrix,
    pre: Matrix,
    hidden: Matrix,
}

impl Decoder {
    pub fn new(
        input: usize,
        hidden: usize,
        output: usize,
        zero_bias: bool,
        sigmoid_output: bool,
        rng: &mut Rng,
    ) -> Self {
        Decoder {
            hidden: Linear::new("decoder.hidden", input, hidden, zero_bias, rng),
            output: Linear::new("decoder.output", hidden, output, zero_bias, rng),
            sigmoid_output,
        }
    }

    /// Decoder mean for each row of `input`.
    pub fn forward(&self, input: &Matrix) -> Result<Matrix> {
        Ok(self.forward_cached(input)?.0)
    }

    pub(crate) fn forward_cached(&self, input: &Matrix) -> Result<(Matrix, DecoderCache)> {
        let pre = self.hidden.forward(input)?;
        let hidden = relu_forward(&pre);
        let logits = self.output.forward(&hidden)?;
        let mean = if self.sigmoid_output {
            logits.map(sigmoid)
        } else {
            logits
        };
        Ok((
            mean,
            DecoderCache {
                input: input.clone(),
                pre,
                hidden,
            },
        ))
    }

    /// Takes the gradient with respect to the pre-activation output and
    /// returns the gradient with respect to the decoder input.
    pub(crate) fn backward(&mut self, cache: &DecoderCache, d_logits: &Matrix) -> Result<Matrix> {
        let d_hidden = self
            .output
            .backward(&cache.hidden, d_logits, true)?
            .expect("requested");
        let d_pre = relu_backward(&d_hidden, &cache.pre)?;
        Ok(self
            .hidden
            .backward(&cache.input, &d_pre, true)?
            .expect("requested"))
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.in_dim()
    }

    pub(crate) fn params(&self) -> Vec<&Param> {
        let mut v = Vec::with_capacity(4);
        v.extend(self.hidden.params());
        v.extend(self.output.params());
        v
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = Vec::with_capacity(4);
        v.extend(self.hidden.params_mut());
        v.extend(self.output.params_mut());
        v
    }
}
