//! L2-regularized logistic regression fitted by full-batch gradient descent
//! with Armijo backtracking.

use crate::error::{Error, Result};
use crate::tensor::Matrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogisticOptions {
    pub max_iter: usize,
    pub l2: f64,
    /// Convergence threshold on the gradient's ∞-norm.
    pub tol: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        LogisticOptions {
            max_iter: 1000,
            l2: 1.0,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LogisticModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.bias
            + row
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| x * w)
                .sum::<f64>()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        (0..x.rows())
            .map(|r| usize::from(self.decision(x.row(r)) > 0.0))
            .collect()
    }
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `(1/n) Σ logloss + (l2 / 2n) ‖w‖²`; the bias is not penalized.
pub fn logistic_loss(x: &Matrix, y: &[usize], weights: &[f64], bias: f64, l2: f64) -> f64 {
    let n = x.rows() as f64;
    let mut acc = 0.0;
    for r in 0..x.rows() {
        let eta = bias
            + x.row(r)
                .iter()
                .zip(weights)
                .map(|(a, w)| a * w)
                .sum::<f64>();
        acc += softplus(eta) - y[r] as f64 * eta;
    }
    acc / n + 0.5 * l2 / n * weights.iter().map(|w| w * w).sum::<f64>()
}

fn gradient(x: &Matrix, y: &[usize], weights: &[f64], bias: f64, l2: f64) -> (Vec<f64>, f64) {
    let n = x.rows() as f64;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for r in 0..x.rows() {
        let row = x.row(r);
        let eta = bias + row.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>();
        let resid = sigmoid(eta) - y[r] as f64;
        gb += resid;
        for (g, a) in gw.iter_mut().zip(row) {
            *g += resid * a;
        }
    }
    for (g, w) in gw.iter_mut().zip(weights) {
        *g = *g / n + l2 / n * w;
    }
    (gw, gb / n)
}

/// Fits a binary classifier to labels in `{0, 1}`.
pub fn logistic_fit(x: &Matrix, y: &[usize], opts: &LogisticOptions) -> Result<LogisticModel> {
    if y.len() != x.rows() {
        return Err(Error::invalid(format!(
            "{} labels for {} rows",
            y.len(),
            x.rows()
        )));
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::invalid("logistic labels must be 0 or 1"));
    }
    let ones = y.iter().filter(|&&v| v == 1).count();
    if ones < 2 || y.len() - ones < 2 {
        return Err(Error::invalid(format!(
            "logistic regression needs at least two samples per class, got {} and {ones}",
            y.len() - ones
        )));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite(
            "logistic features contain non-finite values".into(),
        ));
    }

    let mut w = vec![0.0; x.cols()];
    let mut b = 0.0;
    let mut f = logistic_loss(x, y, &w, b, opts.l2);
    let mut step = 1.0;
    for it in 0..opts.max_iter {
        let (gw, gb) = gradient(x, y, &w, b, opts.l2);
        let gmax = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
        if gmax < opts.tol {
            return Ok(LogisticModel {
                weights: w,
                bias: b,
                iterations: it,
                converged: true,
            });
        }
        let gsq = gb * gb + gw.iter().map(|g| g * g).sum::<f64>();
        step *= 2.0;
        loop {
            let cw: Vec<f64> = w.iter().zip(&gw).map(|(w, g)| w - step * g).collect();
            let cb = b - step * gb;
            let cf = logistic_loss(x, y, &cw, cb, opts.l2);
            if cf <= f - 0.5 * step * gsq {
                w = cw;
                b = cb;
                f = cf;
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                return Ok(LogisticModel {
                    weights: w,
                    bias: b,
                    iterations: it,
                    converged: true,
                });
            }
        }
    }
    Ok(LogisticModel {
        weights: w,
        bias: b,
        iterations: opts.max_iter,
        converged: false,
    })
}

/// Multi-class classifier built from one-vs-rest binary fits.
#[derive(Clone, Debug, PartialEq)]
pub struct OneVsRest {
    pub classes: Vec<usize>,
    pub models: Vec<LogisticModel>,
}

impl OneVsRest {
    pub fn fit(x: &Matrix, y: &[usize], opts: &LogisticOptions) -> Result<Self> {
        let mut classes: Vec<usize> = y.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::invalid("classification needs at least two classes"));
        }
        if classes.len() == 2 {
            let bin: Vec<usize> = y.iter().map(|&v| usize::from(v == classes[1])).collect();
            return Ok(OneVsRest {
                models: vec![logistic_fit(x, &bin, opts)?],
                classes,
            });
        }
        let models = classes
            .iter()
            .map(|&c| {
                let bin: Vec<usize> = y.iter().map(|&v| usize::from(v == c)).collect();
                logistic_fit(x, &bin, opts)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OneVsRest { classes, models })
    }

    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        (0..x.rows())
            .map(|r| {
                let row = x.row(r);
                if self.models.len() == 1 {
                    return self.classes[usize::from(self.models[0].decision(row) > 0.0)];
                }
                let mut best = 0;
                let mut best_v = f64::NEG_INFINITY;
                for (k, m) in self.models.iter().enumerate() {
                    let v = m.decision(row);
                    if v > best_v {
                        best_v = v;
                        best = k;
                    }
                }
                self.classes[best]
            })
            .collect()
    }
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len().max(1) as f64
}
