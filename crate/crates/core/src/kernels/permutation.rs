use crate::error::{Error, Result};
use crate::kernels::{check_pair, KernelConfig};
use crate::tensor::{sq_dist, Matrix, Rng};

#[derive(Clone, Debug, PartialEq)]
pub struct PermutationTest {
    pub statistic: f64,
    pub p_value: f64,
    pub n_perm: usize,
}

/// Two-sample permutation test with the biased MMD statistic.
///
/// Bandwidths are resolved once on the pooled sample, which is invariant to
/// relabeling, and the pooled Gram matrix is reused for every permutation.
/// `p = (1 + #{permuted ≥ observed}) / (1 + n_perm)`.
pub fn permutation_test(
    x: &Matrix,
    y: &Matrix,
    cfg: &KernelConfig,
    n_perm: usize,
    rng: &mut Rng,
) -> Result<PermutationTest> {
    check_pair("permutation_test", x, y)?;
    if n_perm < 100 {
        return Err(Error::invalid(format!(
            "permutation test needs at least 100 permutations, got {n_perm}"
        )));
    }
    let gammas = cfg.resolve(x, y)?;
    let pooled = x.vconcat(y)?;
    let total = pooled.rows();
    let n = x.rows();

    let mut gram = vec![0.0; total * total];
    for i in 0..total {
        for j in i..total {
            let d = sq_dist(pooled.row(i), pooled.row(j));
            let k: f64 = gammas.iter().map(|g| (-g * d).exp()).sum();
            gram[i * total + j] = k;
            gram[j * total + i] = k;
        }
    }

    let labels: Vec<bool> = (0..total).map(|i| i < n).collect();
    let observed = statistic(&gram, total, &labels, n);
    // Ties at the observed value count as exceedances; the slack absorbs
    // rounding differences between algebraically equal statistics.
    let slack = 1e-12 * observed.abs().max(1.0);
    let mut exceed = 0usize;
    let mut order: Vec<usize> = (0..total).collect();
    let mut perm_labels = vec![false; total];
    for _ in 0..n_perm {
        rng.shuffle(&mut order);
        perm_labels.iter_mut().for_each(|l| *l = false);
        for &i in &order[..n] {
            perm_labels[i] = true;
        }
        if statistic(&gram, total, &perm_labels, n) >= observed - slack {
            exceed += 1;
        }
    }
    Ok(PermutationTest {
        statistic: observed,
        p_value: (1 + exceed) as f64 / (1 + n_perm) as f64,
        n_perm,
    })
}

fn statistic(gram: &[f64], total: usize, in_x: &[bool], n: usize) -> f64 {
    let m = total - n;
    let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
    for i in 0..total {
        let row = &gram[i * total..(i + 1) * total];
        for j in 0..total {
            match (in_x[i], in_x[j]) {
                (true, true) => xx += row[j],
                (false, false) => yy += row[j],
                (true, false) => xy += row[j],
                (false, true) => {}
            }
        }
    }
    let (n, m) = (n as f64, m as f64);
    xx / (n * n) - 2.0 * xy / (n * m) + yy / (m * m)
}
