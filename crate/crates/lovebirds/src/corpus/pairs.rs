//! Couple pairs and the train/dev/test split.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::rng::RngState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Dev => write!(f, "dev"),
            Split::Test => write!(f, "test"),
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

/// Canonicalized couple: `user_a < user_b` lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplePair {
    pub user_a: String,
    pub user_b: String,
    pub split: Split,
}

/// Randomly partitions canonical pairs at the pair level.
///
/// Counts come from flooring the train and dev ratios; the remainder goes to
/// test, so totals always add up. Output preserves the input pair order with
/// split labels attached.
pub fn split_pairs(
    pairs: &[(String, String)],
    ratios: (f64, f64, f64),
    rng: &mut RngState,
) -> Result<Vec<CouplePair>> {
    let (r_train, r_dev, r_test) = ratios;
    if (r_train + r_dev + r_test - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter(format!(
            "split ratios must sum to 1, got {ratios:?}"
        )));
    }
    if pairs.len() < 10 {
        return Err(Error::Config(format!(
            "need at least 10 pairs to honor the split ratios, got {}",
            pairs.len()
        )));
    }
    let n = pairs.len();
    let n_train = (r_train * n as f64).floor() as usize;
    let n_dev = (r_dev * n as f64).floor() as usize;

    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut assignment = vec![Split::Test; n];
    for (rank, &idx) in order.iter().enumerate() {
        assignment[idx] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_dev {
            Split::Dev
        } else {
            Split::Test
        };
    }

    Ok(pairs
        .iter()
        .zip(assignment)
        .map(|((a, b), split)| CouplePair {
            user_a: a.clone(),
            user_b: b.clone(),
            split,
        })
        .collect())
}

pub fn count_splits(pairs: &[CouplePair]) -> (usize, usize, usize) {
    let mut counts = (0, 0, 0);
    for p in pairs {
        match p.split {
            Split::Train => counts.0 += 1,
            Split::Dev => counts.1 += 1,
            Split::Test => counts.2 += 1,
        }
    }
    counts
}
