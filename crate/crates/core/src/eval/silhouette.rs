use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{sq_dist, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Silhouette {
    pub score: f64,
    /// Set when some point had `a(i) = b(i) = 0`; such points score 0.
    pub degenerate: bool,
}

/// Mean silhouette coefficient under Euclidean distance.
///
/// Points in singleton clusters score 0.
pub fn silhouette(points: &Matrix, labels: &[usize]) -> Result<Silhouette> {
    let n = points.rows();
    if labels.len() != n {
        return Err(Error::invalid(format!(
            "{} labels for {n} points",
            labels.len()
        )));
    }
    let mut index: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        let next = index.len();
        index.entry(l).or_insert(next);
    }
    let k = index.len();
    if k < 2 {
        return Err(Error::invalid("silhouette needs at least two clusters"));
    }
    let cluster: Vec<usize> = labels.iter().map(|l| index[l]).collect();
    let mut sizes = vec![0usize; k];
    for &c in &cluster {
        sizes[c] += 1;
    }

    let mut total = 0.0;
    let mut degenerate = false;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        let pi = points.row(i);
        for j in 0..n {
            if j != i {
                sums[cluster[j]] += sq_dist(pi, points.row(j)).sqrt();
            }
        }
        let own = cluster[i];
        if sizes[own] == 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom == 0.0 {
            degenerate = true;
            continue;
        }
        total += (b - a) / denom;
    }
    if degenerate {
        log::warn!("silhouette: some points have zero distance to every cluster; they score 0");
    }
    Ok(Silhouette {
        score: total / n as f64,
        degenerate,
    })
}
