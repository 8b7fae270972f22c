//! Layer primitives with hand-written backward passes.

use crate::error::{Error, Result};
use crate::tensor::{Matrix, Param};

/// `x·W + b` row-wise. With `zero_bias` the stored bias is ignored entirely.
pub fn affine_forward(x: &Matrix, w: &Param, b: &Param, zero_bias: bool) -> Result<Matrix> {
    if b.value.shape() != (1, w.value.cols()) {
        return Err(Error::dim(
            "affine_forward bias",
            w.value.shape(),
            b.value.shape(),
        ));
    }
    let mut y = x.matmul(&w.value)?;
    if !zero_bias {
        y.add_row_vector(b.value.data())?;
    }
    Ok(y)
}

/// Accumulates `dW = xᵀ·dy` and `db = Σ_rows dy`, returning `dx = dy·Wᵀ`
/// when `want_input_grad` is set.
pub fn affine_backward(
    x: &Matrix,
    upstream: &Matrix,
    w: &mut Param,
    b: &mut Param,
    zero_bias: bool,
    want_input_grad: bool,
) -> Result<Option<Matrix>> {
    if upstream.shape() != (x.rows(), w.value.cols()) {
        return Err(Error::dim("affine_backward", x.shape(), upstream.shape()));
    }
    if !w.frozen {
        let dw = x.t_matmul(upstream)?;
        w.grad.add_assign(&dw)?;
    }
    if !zero_bias && !b.frozen {
        for (g, s) in b.grad.data_mut().iter_mut().zip(upstream.col_sums()) {
            *g += s;
        }
    }
    if want_input_grad {
        Ok(Some(upstream.matmul_t(&w.value)?))
    } else {
        Ok(None)
    }
}

pub fn relu_forward(x: &Matrix) -> Matrix {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Masks `upstream` where the forward input was `<= 0` (subgradient 0 at 0).
pub fn relu_backward(upstream: &Matrix, input: &Matrix) -> Result<Matrix> {
    upstream.zip_with(input, |g, v| if v > 0.0 { g } else { 0.0 })
}

pub fn leaky_relu_forward(x: &Matrix, slope: f64) -> Matrix {
    x.map(|v| if v > 0.0 { v } else { slope * v })
}

pub fn leaky_relu_backward(upstream: &Matrix, input: &Matrix, slope: f64) -> Result<Matrix> {
    upstream.zip_with(input, |g, v| if v > 0.0 { g } else { slope * g })
}

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}
