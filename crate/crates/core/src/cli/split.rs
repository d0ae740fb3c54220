use std::str::FromStr;

use crate::data::{loocv_splits, random_split, SceneCache, SplitPlan};
use crate::{Error, Result};

/// `all`, `loocv`, `loocv:<dataset>` or `random:<test fraction>`.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitSpec {
    /// Train and test on every scene.
    All,
    /// Every leave-one-dataset-out fold, or only the one holding out the named dataset.
    Loocv(Option<String>),
    Random(f64),
}

impl FromStr for SplitSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "all" => Ok(SplitSpec::All),
            None if s == "loocv" => Ok(SplitSpec::Loocv(None)),
            Some(("loocv", name)) if !name.is_empty() => Ok(SplitSpec::Loocv(Some(name.to_string()))),
            Some(("random", frac)) => frac
                .parse::<f64>()
                .ok()
                .filter(|f| *f > 0.0 && *f < 1.0)
                .map(SplitSpec::Random)
                .ok_or_else(|| Error::Config(format!("random split fraction `{frac}` must lie in (0, 1)"))),
            _ => Err(Error::Config(format!(
                "unknown split `{s}` (expected all, loocv, loocv:<name> or random:<fraction>)"
            ))),
        }
    }
}

impl SplitSpec {
    pub fn plans(&self, cache: &SceneCache, seed: u64) -> Result<Vec<SplitPlan>> {
        let n = cache.scenes.len();
        if n == 0 {
            return Err(Error::Empty("scene cache"));
        }
        match self {
            SplitSpec::All => Ok(vec![SplitPlan {
                name: "all".into(),
                train: (0..n).collect(),
                test: (0..n).collect(),
            }]),
            SplitSpec::Random(f) => Ok(vec![random_split("random", n, *f, seed)?]),
            SplitSpec::Loocv(which) => {
                let plans = loocv_splits(&cache.scenes, &cache.dataset_names())?;
                match which {
                    None => Ok(plans),
                    Some(name) => plans
                        .into_iter()
                        .find(|p| &p.name == name)
                        .map(|p| vec![p])
                        .ok_or_else(|| Error::Config(format!("no dataset named `{name}` in the cache"))),
                }
            }
        }
    }
}
