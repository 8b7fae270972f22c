use crate::error::{Error, Result};
use crate::tensor::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct Pca2 {
    /// Projected rows, `n × 2`.
    pub coords: Matrix,
    /// Variances along the two components (covariance eigenvalues, `n − 1` denominator).
    pub explained: [f64; 2],
    /// Unit loadings, one row per component.
    pub components: Matrix,
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// columns.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let k = a.rows();
    if a.cols() != k {
        return Err(Error::dim("symmetric_eigen", a.shape(), a.shape()));
    }
    let mut m = a.clone();
    let mut v = Matrix::identity(k);
    let scale: f64 = m.data().iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..k)
            .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..k {
            for q in p + 1..k {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..k {
                    let (mrp, mrq) = (m.get(r, p), m.get(r, q));
                    m.set(r, p, c * mrp - s * mrq);
                    m.set(r, q, s * mrp + c * mrq);
                }
                for r in 0..k {
                    let (mpr, mqr) = (m.get(p, r), m.get(q, r));
                    m.set(p, r, c * mpr - s * mqr);
                    m.set(q, r, s * mpr + c * mqr);
                }
                for r in 0..k {
                    let (vrp, vrq) = (v.get(r, p), v.get(r, q));
                    v.set(r, p, c * vrp - s * vrq);
                    v.set(r, q, s * vrp + c * vrq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp(&m.get(i, i)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let vectors = v.select_cols(&order);
    Ok((values, vectors))
}

/// Sample covariance with `n − 1` denominator, plus the column means.
pub fn covariance(x: &Matrix) -> (Matrix, Vec<f64>) {
    let means = x.col_means();
    let mut centred = x.clone();
    let neg: Vec<f64> = means.iter().map(|m| -m).collect();
    centred.add_row_vector(&neg).expect("width matches");
    let denom = (x.rows().max(2) - 1) as f64;
    (
        centred
            .t_matmul(&centred)
            .expect("same rows")
            .scale(1.0 / denom),
        means,
    )
}

/// Projection onto the first two principal components.
///
/// Each component is oriented so that its largest-magnitude loading is positive.
pub fn pca_2d(x: &Matrix) -> Result<Pca2> {
    let (n, k) = x.shape();
    if n < 3 || k < 2 {
        return Err(Error::invalid(format!(
            "pca_2d needs n >= 3 and k >= 2, got {n}x{k}"
        )));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite(
            "pca input contains non-finite values".into(),
        ));
    }
    let (cov, means) = covariance(x);
    let (values, vectors) = symmetric_eigen(&cov)?;
    if values[0] <= 0.0 {
        return Err(Error::invalid("pca_2d: data has zero variance (rank 0)"));
    }
    let mut components = Matrix::zeros(2, k);
    for c in 0..2 {
        let col = vectors.column(c);
        let lead = col
            .iter()
            .copied()
            .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for (j, v) in col.iter().enumerate() {
            components.set(c, j, sign * v);
        }
    }
    let mut centred = x.clone();
    let neg: Vec<f64> = means.iter().map(|m| -m).collect();
    centred.add_row_vector(&neg)?;
    let coords = centred.matmul_t(&components)?;
    Ok(Pca2 {
        coords,
        explained: [values[0].max(0.0), values[1].max(0.0)],
        components,
    })
}
