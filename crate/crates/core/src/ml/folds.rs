use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// Fold index for every row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }
}

/// Stratified k-fold keyed by row position.
pub fn stratified_kfold(y: &[u8], k: usize, seed: u64) -> Result<FoldAssignment> {
    let keys: Vec<u64> = (0..y.len() as u64).collect();
    stratified_kfold_keyed(y, &keys, k, seed)
}

/// Stratified k-fold keyed by stable row identifiers: within each class rows
/// are ordered by a seeded hash of their key and dealt round-robin, so the
/// assignment of a row does not depend on where it sits in the input.
pub fn stratified_kfold_keyed(y: &[u8], keys: &[u64], k: usize, seed: u64) -> Result<FoldAssignment> {
    if keys.len() != y.len() {
        return Err(Error::InvalidInput("one key per label required".into()));
    }
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "k-fold needs k >= 2, got {k}"
        )));
    }
    let mut classes: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &label) in y.iter().enumerate() {
        match label {
            0 | 1 => classes[label as usize].push(i),
            other => {
                return Err(Error::InvalidInput(format!("label {other} is not binary")));
            }
        }
    }
    if classes.iter().any(Vec::is_empty) {
        return Err(Error::SingleClass);
    }
    let min_class = classes.iter().map(Vec::len).min().unwrap_or(0);
    if k > min_class {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds the smaller class count {min_class}"
        )));
    }

    let mut fold_of = vec![0; y.len()];
    // continue dealing across classes so fold sizes stay balanced overall
    let mut next = 0;
    for members in &mut classes {
        members.sort_by_key(|&i| (derive_seed(seed, &[keys[i]]), keys[i], i));
        for &i in members.iter() {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}
