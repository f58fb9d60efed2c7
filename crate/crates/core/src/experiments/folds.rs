use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CorpusManifest, Dialect};
use crate::error::{Error, Result};

fn shuffled_by_class(labels: &[Dialect], seed: u64) -> [Vec<usize>; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class = [Vec::new(), Vec::new()];
    for (i, d) in labels.iter().enumerate() {
        by_class[d.index()].push(i);
    }
    for c in &mut by_class {
        c.shuffle(&mut rng);
    }
    by_class
}

/// Stratified k-fold: each class is shuffled with `seed` and dealt round-robin
/// into `k` folds. Returns the validation indices of each fold, sorted.
pub fn kfold_indices(labels: &[Dialect], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k-fold needs k ≥ 2, got {k}")));
    }
    let by_class = shuffled_by_class(labels, seed);
    for (c, members) in by_class.iter().enumerate() {
        if members.len() < k {
            return Err(Error::InsufficientData(format!(
                "{} has {} utterances, fewer than {k} folds",
                Dialect::from_index(c).unwrap(),
                members.len()
            )));
        }
    }
    let mut folds = vec![Vec::new(); k];
    for members in &by_class {
        for (j, &i) in members.iter().enumerate() {
            folds[j % k].push(i);
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// Complement of `held_out` within `0..n`.
pub fn complement(n: usize, held_out: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; n];
    held_out.iter().for_each(|&i| mask[i] = false);
    (0..n).filter(|&i| mask[i]).collect()
}

/// `(train, validation)` manifests for each of `k` stratified folds.
pub fn kfold(manifest: &CorpusManifest, k: usize, seed: u64) -> Result<Vec<(CorpusManifest, CorpusManifest)>> {
    let labels: Vec<Dialect> = manifest.records().iter().map(|r| r.dialect).collect();
    kfold_indices(&labels, k, seed)?
        .iter()
        .map(|val| Ok((manifest.subset(&complement(labels.len(), val))?, manifest.subset(val)?)))
        .collect()
}

/// Stratified holdout: `round(fraction · n_c)` utterances of each class
/// (at least one) go to the second, held-out set.
pub fn stratified_split(labels: &[Dialect], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("split fraction {fraction} outside (0, 1)")));
    }
    let by_class = shuffled_by_class(labels, seed);
    let mut held = Vec::new();
    for (c, members) in by_class.iter().enumerate() {
        if members.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "{} has {} utterance(s); need 2 to split",
                Dialect::from_index(c).unwrap(),
                members.len()
            )));
        }
        let n = ((fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        held.extend_from_slice(&members[..n]);
    }
    held.sort_unstable();
    Ok((complement(labels.len(), &held), held))
}
