//! Deterministic data splits: a held-out set drawn first, then disjoint
//! test folds over the remainder.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub held_out: Vec<String>,
    pub folds: Vec<Fold>,
}

/// Shuffles the case ids with the seed, draws `held_out` cases first, then
/// `n_folds` disjoint test sets of `test_per_fold`; each fold trains on the
/// remainder minus its test set.
pub fn make_splits(
    case_ids: &[String],
    seed: u64,
    held_out: usize,
    n_folds: usize,
    test_per_fold: usize,
) -> Result<SplitPlan> {
    let needed = held_out + n_folds * test_per_fold;
    if case_ids.len() < needed {
        return Err(Error::invalid(format!(
            "make_splits: {} cases, need at least {needed} for {held_out} held out and {n_folds} folds of {test_per_fold}",
            case_ids.len()
        )));
    }
    let mut ids: Vec<String> = case_ids.to_vec();
    ids.sort();
    ids.dedup();
    if ids.len() != case_ids.len() {
        return Err(Error::invalid("make_splits: duplicate case ids"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);

    let held: Vec<String> = ids[..held_out].to_vec();
    let remainder: Vec<String> = ids[held_out..].to_vec();
    let folds = (0..n_folds)
        .map(|f| {
            let lo = f * test_per_fold;
            let hi = lo + test_per_fold;
            let test: Vec<String> = remainder[lo..hi].to_vec();
            let train: Vec<String> = remainder
                .iter()
                .filter(|id| !test.contains(id))
                .cloned()
                .collect();
            Fold { train, test }
        })
        .collect();
    Ok(SplitPlan {
        held_out: held,
        folds,
    })
}
