use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Scene;
use crate::{Error, Result};

/// Train/test partition as indices into a scene list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub name: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// One fold per dataset: test on it, train on the rest.
pub fn loocv_splits(scenes: &[Scene], datasets: &[String]) -> Result<Vec<SplitPlan>> {
    let unique: BTreeSet<&String> = datasets.iter().collect();
    if unique.len() < 2 {
        return Err(Error::Config(format!(
            "leave-one-out needs at least 2 datasets, got {}",
            unique.len()
        )));
    }
    Ok(datasets
        .iter()
        .map(|held_out| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..scenes.len()).partition(|&i| &scenes[i].dataset == held_out);
            let train = train.into_iter().filter(|&i| datasets.contains(&scenes[i].dataset)).collect();
            SplitPlan {
                name: held_out.clone(),
                train,
                test,
            }
        })
        .collect())
}

/// Seeded random partition of `0..n` with `test_fraction` of indices in test.
pub fn random_split(name: &str, n: usize, test_fraction: f64, seed: u64) -> Result<SplitPlan> {
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(Error::Config(format!("test fraction {test_fraction} outside [0, 1]")));
    }
    let (train, test) = holdout_split(&(0..n).collect::<Vec<_>>(), test_fraction, seed);
    Ok(SplitPlan {
        name: name.to_string(),
        train,
        test,
    })
}

/// Seeded holdout: returns `(kept, held_out)`, each sorted.
pub fn holdout_split(indices: &[usize], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut shuffled = indices.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_out = (indices.len() as f64 * fraction).round() as usize;
    let mut out = shuffled[..n_out].to_vec();
    let mut kept = shuffled[n_out..].to_vec();
    out.sort_unstable();
    kept.sort_unstable();
    (kept, out)
}
