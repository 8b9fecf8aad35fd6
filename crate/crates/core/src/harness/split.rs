use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::rng;
use crate::synth::LabeledDataset;

/// Observation indices of a hold-out split, each side in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Uniform (unstratified) split: `floor(n * fraction)` training indices, the
/// rest for testing.
pub fn holdout_indices(labels: &[usize], n_classes: usize, fraction: f64, seed: u64) -> Result<Split> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("split fraction {fraction} outside (0, 1)")));
    }
    let mut counts = vec![0usize; n_classes];
    for &y in labels {
        counts[y - 1] += 1;
    }
    if let Some((k, &count)) = counts.iter().enumerate().find(|(_, &c)| c < 2) {
        return Err(Error::ClassTooSmall { class: k + 1, count });
    }
    let n = labels.len();
    let n_train = (n as f64 * fraction).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InsufficientData(format!(
            "fraction {fraction} of {n} observations leaves one side empty"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(seed));
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// Splits a dataset by columns. For a similarity matrix the rows stay whole,
/// so both sides keep the full `n`-dimensional feature space.
pub fn holdout_split(data: &LabeledDataset, fraction: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    let split = holdout_indices(&data.labels, data.n_classes, fraction, seed)?;
    let train = data.subset(&split.train, format!("{}-train", data.name))?;
    let test = data.subset(&split.test, format!("{}-test", data.name))?;
    Ok((train, test))
}
