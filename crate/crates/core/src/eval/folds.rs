//! Stratified k-fold splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvalError;

/// Train and test row indices of one fold, both ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits rows into `k` folds that preserve class proportions within one
/// sample per class. Each class is shuffled with a seeded generator and
/// dealt round-robin, continuing where the previous class stopped. If a
/// class has fewer than `k` samples, `k` is reduced to that size.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Fold>, EvalError> {
    if k < 2 {
        return Err(EvalError::Folds(k));
    }
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    by_class.retain(|c| !c.is_empty());
    let smallest = by_class.iter().map(Vec::len).min().unwrap_or(0);
    let k = if smallest < k {
        log::warn!("smallest class has {smallest} samples; reducing folds from {k} to {smallest}");
        if smallest < 2 {
            return Err(EvalError::Folds(smallest));
        }
        smallest
    } else {
        k
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; labels.len()];
    let mut offset = 0;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for (p, &i) in members.iter().enumerate() {
            fold_of[i] = (offset + p) % k;
        }
        offset += members.len();
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| fold_of[i] == f);
            Fold { train, test }
        })
        .collect())
}
