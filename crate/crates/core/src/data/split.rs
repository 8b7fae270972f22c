use std::collections::BTreeMap;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::tensor::Rng;

/// Seeded split of `0..n` into `(train, test)` index lists, both sorted.
///
/// With labels, each class is shuffled and split on its own so class ratios
/// are preserved to within one sample.
pub fn stratified_split_indices(
    n: usize,
    labels: Option<&[usize]>,
    fraction: f64,
    rng: &mut Rng,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    match labels {
        Some(l) => {
            if l.len() != n {
                return Err(Error::invalid(format!("{} labels for {n} rows", l.len())));
            }
            for (i, &c) in l.iter().enumerate() {
                groups.entry(c).or_default().push(i);
            }
        }
        None => {
            groups.insert(0, (0..n).collect());
        }
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for members in groups.values_mut() {
        rng.shuffle(members);
        let k = (fraction * members.len() as f64).round() as usize;
        train.extend_from_slice(&members[..k]);
        test.extend_from_slice(&members[k..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid(format!(
            "split of {n} rows at fraction {fraction} leaves one side empty"
        )));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Deterministic train/test split, stratified by class when labels exist.
pub fn train_test_split(
    data: &LabeledDataset,
    fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let mut rng = Rng::seed_from_u64(seed);
    let (train, test) =
        stratified_split_indices(data.n(), data.class_labels.as_deref(), fraction, &mut rng)?;
    Ok((data.select(&train), data.select(&test)))
}
