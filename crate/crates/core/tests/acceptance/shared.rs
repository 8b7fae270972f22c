use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use mmcvae::data::{synth_contrastive, SynthConfig, SynthOutput};
use mmcvae::model::{Architecture, MmcVae};
use mmcvae::train::{train, TrainConfig};

/// Result of one criterion: overall verdict plus one line per sub-check.
pub struct Outcome {
    pub pass: bool,
    pub details: Vec<String>,
}

impl Default for Outcome {
    fn default() -> Self {
        Self::new()
    }
}

impl Outcome {
    pub fn new() -> Self {
        Outcome {
            pass: true,
            details: Vec::new(),
        }
    }

    pub fn error(msg: String) -> Self {
        Outcome {
            pass: false,
            details: vec![msg],
        }
    }

    /// Records a sub-check; the criterion passes only if every sub-check does.
    pub fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.details
            .push(format!("[{}] {line}", if ok { "ok" } else { "FAIL" }));
    }

    pub fn note(&mut self, line: String) {
        self.details.push(format!("      {line}"));
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn fmt_list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Synthetic data with default settings, shared by the reproduction criteria.
pub fn synthetic() -> &'static SynthOutput {
    static DATA: OnceLock<SynthOutput> = OnceLock::new();
    DATA.get_or_init(|| synth_contrastive(&SynthConfig::default()).expect("default synthetic data"))
}

/// Model architecture matching the true latent sizes of the synthetic data.
pub fn synthetic_arch() -> Architecture {
    let s = SynthConfig::default();
    Architecture::new(s.d, s.d_z, s.d_s)
}

type Key = (u64, u64, u64, bool);

/// Trains (or reuses) a model on the default synthetic data.
pub fn trained(
    lambda1: f64,
    lambda2: f64,
    seed: u64,
    zero_bias: bool,
) -> mmcvae::Result<Arc<MmcVae>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<OnceLock<Arc<MmcVae>>>>>> = OnceLock::new();
    let key = (lambda1.to_bits(), lambda2.to_bits(), seed, zero_bias);
    let slot = CACHE
        .get_or_init(Default::default)
        .lock()
        .unwrap()
        .entry(key)
        .or_default()
        .clone();
    if let Some(m) = slot.get() {
        return Ok(m.clone());
    }
    let data = synthetic();
    let cfg = TrainConfig {
        lambda1,
        lambda2,
        seed,
        zero_bias_decoder: zero_bias,
        ..TrainConfig::default()
    };
    let (model, _) = train(synthetic_arch(), &data.target, &data.background, &cfg)?;
    Ok(slot.get_or_init(|| Arc::new(model)).clone())
}
