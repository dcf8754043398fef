use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::group::Group;

/// Stream reserved for the split so it never overlaps parameter init.
const SPLIT_STREAM: u64 = 0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataSplit {
    pub train: Vec<(usize, usize)>,
    pub test: Vec<(usize, usize)>,
}

/// All `n²` pairs in row-major order: index `a·n + b` is `(a, b)`.
pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n * n).map(|p| (p / n, p % n)).collect()
}

pub fn targets(group: &Group, pairs: &[(usize, usize)]) -> Vec<usize> {
    pairs.iter().map(|&(a, b)| group.mul(a, b)).collect()
}

/// Seeded uniform shuffle of every pair; the first `round(frac·n²)` are the
/// training set.
pub fn split_dataset(group: &Group, frac: f64, seed: u64) -> Result<DataSplit> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {frac} must lie strictly between 0 and 1"
        )));
    }
    let n = group.order();
    let mut pairs = all_pairs(n);
    let n_train = (frac * pairs.len() as f64).round() as usize;
    if n_train == 0 || n_train == pairs.len() {
        return Err(Error::InvalidArgument(format!(
            "train fraction {frac} leaves an empty side for {} pairs",
            pairs.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SPLIT_STREAM);
    pairs.shuffle(&mut rng);
    let test = pairs.split_off(n_train);
    Ok(DataSplit { train: pairs, test })
}
