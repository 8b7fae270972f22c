use crate::error::{Error, Result};
use crate::tensor::{Matrix, Param};

/// First and second moment estimates for every parameter, in parameter order.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Matrix>,
    pub v: Vec<Matrix>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &[&Param]) -> Self {
        let zeros = |p: &&Param| Matrix::zeros(p.value.rows(), p.value.cols());
        AdamState {
            m: params.iter().map(zeros).collect(),
            v: params.iter().map(zeros).collect(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update; gradients are reset afterwards.
///
/// Every gradient is checked before any value changes, so a non-finite
/// gradient leaves parameters and moments untouched.
pub fn adam_step(
    mut params: Vec<&mut Param>,
    state: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) -> Result<()> {
    if params.len() != state.m.len() {
        return Err(Error::invalid(format!(
            "optimizer tracks {} parameters, got {}",
            state.m.len(),
            params.len()
        )));
    }
    for (p, m) in params.iter().zip(&state.m) {
        if p.value.shape() != m.shape() || p.grad.shape() != m.shape() {
            return Err(Error::dim("adam_step", p.value.shape(), m.shape()));
        }
        if !p.frozen && !p.grad.is_finite() {
            return Err(Error::NonFinite(format!(
                "gradient of {} is not finite",
                p.name
            )));
        }
    }

    state.t += 1;
    let c1 = 1.0 - beta1.powi(state.t as i32);
    let c2 = 1.0 - beta2.powi(state.t as i32);
    for ((p, m), v) in params.iter_mut().zip(&mut state.m).zip(&mut state.v) {
        if p.frozen {
            p.zero_grad();
            continue;
        }
        let g = p.grad.data();
        let w = p.value.data_mut();
        for (((w, &g), m), v) in w.iter_mut().zip(g).zip(m.data_mut()).zip(v.data_mut()) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *w -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        p.zero_grad();
    }
    Ok(())
}
