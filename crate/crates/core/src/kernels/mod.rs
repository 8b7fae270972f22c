//! Gaussian kernel, the biased MMD estimator and bandwidth selection.
//!
//! The estimator is the V-statistic
//!
//! ```text
//! MMD²(X, Y) = 1/n² ΣΣ k(xᵢ, xⱼ) − 2/(nm) ΣΣ k(xᵢ, yⱼ) + 1/m² ΣΣ k(yᵢ, yⱼ)
//! ```
//!
//! with diagonal terms included. Every estimator comes with an analytic
//! gradient so it can sit inside a training objective.

mod permutation;

pub use permutation::{permutation_test, PermutationTest};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{sq_dist, Matrix};

/// How the kernel bandwidth `γ` in `exp(−γ‖x − y‖²)` is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
#[derive(Default)]
pub enum KernelConfig {
    Fixed {
        gamma: f64,
    },
    #[default]
    MedianHeuristic,
    /// Sum of the estimator over several bandwidths.
    MultiScale {
        gammas: Vec<f64>,
    },
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelConfig::Fixed { gamma } => check_gamma(*gamma),
            KernelConfig::MedianHeuristic => Ok(()),
            KernelConfig::MultiScale { gammas } => {
                if gammas.is_empty() {
                    return Err(Error::Config("multi_scale needs at least one gamma".into()));
                }
                gammas.iter().try_for_each(|g| check_gamma(*g))
            }
        }
    }

    /// Concrete bandwidths for comparing `x` against `y`.
    pub fn resolve(&self, x: &Matrix, y: &Matrix) -> Result<Vec<f64>> {
        self.validate()?;
        match self {
            KernelConfig::Fixed { gamma } => Ok(vec![*gamma]),
            KernelConfig::MedianHeuristic => Ok(vec![median_heuristic(x, y)?]),
            KernelConfig::MultiScale { gammas } => Ok(gammas.clone()),
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "kernel gamma must be positive, got {gamma}"
        )))
    }
}

/// `exp(−γ‖x − y‖²)`.
pub fn gaussian_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::dim("gaussian_kernel", (1, x.len()), (1, y.len())));
    }
    check_gamma(gamma)?;
    Ok((-gamma * sq_dist(x, y)).exp())
}

/// `γ = 1 / (2·median)` of the squared pairwise distances over the pooled
/// rows of `x` and `y`; falls back to `γ = 1` when the median is zero.
pub fn median_heuristic(x: &Matrix, y: &Matrix) -> Result<f64> {
    if x.rows() > 0 && y.rows() > 0 && x.cols() != y.cols() {
        return Err(Error::dim("median_heuristic", x.shape(), y.shape()));
    }
    let n = x.rows() + y.rows();
    if n < 2 {
        return Err(Error::invalid(
            "median heuristic needs at least two pooled points",
        ));
    }
    let point = |i: usize| {
        if i < x.rows() {
            x.row(i)
        } else {
            y.row(i - x.rows())
        }
    };
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push(sq_dist(point(i), point(j)));
        }
    }
    let med = median_in_place(&mut dists);
    if med > 0.0 && med.is_finite() {
        Ok(1.0 / (2.0 * med))
    } else {
        Ok(1.0)
    }
}

fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (_, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

fn check_pair(op: &'static str, x: &Matrix, y: &Matrix) -> Result<()> {
    if x.rows() == 0 || y.rows() == 0 {
        return Err(Error::invalid(format!(
            "{op}: both samples must be non-empty"
        )));
    }
    if x.cols() != y.cols() {
        return Err(Error::dim(op, x.shape(), y.shape()));
    }
    Ok(())
}

/// Biased MMD estimate between the rows of `x` and `y`.
pub fn mmd_biased(x: &Matrix, y: &Matrix, cfg: &KernelConfig) -> Result<f64> {
    check_pair("mmd_biased", x, y)?;
    let gammas = cfg.resolve(x, y)?;
    Ok(gammas.iter().map(|&g| mmd_value(x, y, g)).sum())
}

/// Value and gradients with respect to `x` and `y`, for fixed bandwidths.
pub fn mmd_biased_grad(x: &Matrix, y: &Matrix, gammas: &[f64]) -> Result<(f64, Matrix, Matrix)> {
    check_pair("mmd_biased_grad", x, y)?;
    let mut value = 0.0;
    let mut gx = Matrix::zeros(x.rows(), x.cols());
    let mut gy = Matrix::zeros(y.rows(), y.cols());
    for &gamma in gammas {
        check_gamma(gamma)?;
        value += mmd_value(x, y, gamma);
        let n = x.rows() as f64;
        let m = y.rows() as f64;
        // within-sample terms appear twice in the double sum, hence 2/n²
        self_term_grad(x, gamma, 2.0 / (n * n), &mut gx);
        self_term_grad(y, gamma, 2.0 / (m * m), &mut gy);
        cross_term_grad(x, y, gamma, -2.0 / (n * m), &mut gx, &mut gy);
    }
    Ok((value, gx, gy))
}

fn mmd_value(x: &Matrix, y: &Matrix, gamma: f64) -> f64 {
    let n = x.rows() as f64;
    let m = y.rows() as f64;
    gram_sum(x, x, gamma) / (n * n) - 2.0 * gram_sum(x, y, gamma) / (n * m)
        + gram_sum(y, y, gamma) / (m * m)
}

fn gram_sum(a: &Matrix, b: &Matrix, gamma: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..a.rows() {
        let ai = a.row(i);
        let mut row_total = 0.0;
        for j in 0..b.rows() {
            row_total += (-gamma * sq_dist(ai, b.row(j))).exp();
        }
        total += row_total;
    }
    total
}

/// Adds `coef · Σⱼ ∂k(aᵢ, aⱼ)/∂aᵢ` to each row of `out`.
fn self_term_grad(a: &Matrix, gamma: f64, coef: f64, out: &mut Matrix) {
    let d = a.cols();
    for i in 0..a.rows() {
        let ai = a.row(i);
        let mut acc = vec![0.0; d];
        for j in 0..a.rows() {
            if i == j {
                continue;
            }
            let aj = a.row(j);
            let k = (-gamma * sq_dist(ai, aj)).exp();
            for t in 0..d {
                acc[t] += -2.0 * gamma * (ai[t] - aj[t]) * k;
            }
        }
        for (o, v) in out.row_mut(i).iter_mut().zip(&acc) {
            *o += coef * v;
        }
    }
}

fn cross_term_grad(
    x: &Matrix,
    y: &Matrix,
    gamma: f64,
    coef: f64,
    gx: &mut Matrix,
    gy: &mut Matrix,
) {
    let d = x.cols();
    let mut acc_y = vec![0.0; y.rows() * d];
    for i in 0..x.rows() {
        let xi = x.row(i);
        let mut acc_x = vec![0.0; d];
        for j in 0..y.rows() {
            let yj = y.row(j);
            let k = (-gamma * sq_dist(xi, yj)).exp();
            for t in 0..d {
                let g = -2.0 * gamma * (xi[t] - yj[t]) * k;
                acc_x[t] += g;
                acc_y[j * d + t] -= g;
            }
        }
        for (o, v) in gx.row_mut(i).iter_mut().zip(&acc_x) {
            *o += coef * v;
        }
    }
    for (o, v) in gy.data_mut().iter_mut().zip(&acc_y) {
        *o += coef * v;
    }
}

/// MMD between the rows of `x` and a point mass at `c`:
/// `1/n² ΣΣ k(xᵢ, xⱼ) − 2/n Σ k(xᵢ, c) + 1`.
///
/// The median heuristic pools `x` with a single copy of `c`.
pub fn mmd_to_constant(x: &Matrix, c: &[f64], cfg: &KernelConfig) -> Result<f64> {
    let cm = Matrix::row_vector(c);
    check_pair("mmd_to_constant", x, &cm)?;
    let gammas = cfg.resolve(x, &cm)?;
    Ok(gammas.iter().map(|&g| dirac_value(x, c, g)).sum())
}

/// Value and gradient with respect to `x`, for fixed bandwidths.
pub fn mmd_to_constant_grad(x: &Matrix, c: &[f64], gammas: &[f64]) -> Result<(f64, Matrix)> {
    check_pair("mmd_to_constant_grad", x, &Matrix::row_vector(c))?;
    let n = x.rows() as f64;
    let mut value = 0.0;
    let mut gx = Matrix::zeros(x.rows(), x.cols());
    for &gamma in gammas {
        check_gamma(gamma)?;
        value += dirac_value(x, c, gamma);
        self_term_grad(x, gamma, 2.0 / (n * n), &mut gx);
        for i in 0..x.rows() {
            let k = (-gamma * sq_dist(x.row(i), c)).exp();
            let coef = -2.0 / n * -2.0 * gamma * k;
            let xi = x.row(i).to_vec();
            for ((o, xv), cv) in gx.row_mut(i).iter_mut().zip(&xi).zip(c) {
                *o += coef * (xv - cv);
            }
        }
    }
    Ok((value, gx))
}

fn dirac_value(x: &Matrix, c: &[f64], gamma: f64) -> f64 {
    let n = x.rows() as f64;
    let cross: f64 = x.row_iter().map(|r| (-gamma * sq_dist(r, c)).exp()).sum();
    gram_sum(x, x, gamma) / (n * n) - 2.0 * cross / n + 1.0
}
