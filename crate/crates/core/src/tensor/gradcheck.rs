use crate::error::{Error, Result};
use crate::tensor::{Matrix, ParamSet};

/// Central-difference gradient of `loss` with respect to every scalar of every
/// parameter in `target`, returned in `params()` order.
///
/// Each scalar is perturbed in place and restored exactly afterwards.
pub fn numeric_gradient<T, F>(target: &mut T, h: f64, mut loss: F) -> Result<Vec<Matrix>>
where
    T: ParamSet,
    F: FnMut(&T) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::Oracle(format!("step must be positive, got {h}")));
    }
    let shapes: Vec<(usize, usize)> = target.params().iter().map(|p| p.value.shape()).collect();
    let mut grads = Vec::with_capacity(shapes.len());
    for (pi, &(rows, cols)) in shapes.iter().enumerate() {
        let mut g = Matrix::zeros(rows, cols);
        for k in 0..rows * cols {
            let original = target.params()[pi].value.data()[k];
            target.params_mut()[pi].value.data_mut()[k] = original + h;
            let plus = loss(target)?;
            target.params_mut()[pi].value.data_mut()[k] = original - h;
            let minus = loss(target)?;
            target.params_mut()[pi].value.data_mut()[k] = original;
            if !plus.is_finite() || !minus.is_finite() {
                let name = target.params()[pi].name.clone();
                return Err(Error::Oracle(format!(
                    "non-finite loss when perturbing {name}[{k}]"
                )));
            }
            g.data_mut()[k] = (plus - minus) / (2.0 * h);
        }
        grads.push(g);
    }
    Ok(grads)
}

/// `|a - n| / max(|a|, |n|, floor)`, the comparison used by every gradient check.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(floor);
    (analytic - numeric).abs() / denom
}
