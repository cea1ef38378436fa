use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Label};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SplitSpec {
    pub n_labeled: usize,
    pub seed: u64,
    /// Guarantee at least one labeled sample of each class.
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(n_labeled: usize, seed: u64) -> Self {
        SplitSpec {
            n_labeled,
            seed,
            stratified: true,
        }
    }
}

/// Draws `n_labeled` samples into `L` and moves the rest to `U`.
///
/// The draw uses the ground truth of every sample, so re-splitting an
/// already split dataset is allowed. Index sets come back sorted.
pub fn make_split(data: &Dataset, spec: &SplitSpec) -> Result<Dataset> {
    let n = data.len();
    if spec.n_labeled < 2 {
        return Err(Error::InvalidSplit(format!(
            "need at least 2 labeled samples, got {}",
            spec.n_labeled
        )));
    }
    if spec.n_labeled >= n {
        return Err(Error::InvalidSplit(format!(
            "n_labeled = {} leaves no unlabeled samples out of {n}",
            spec.n_labeled
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut labeled = Vec::with_capacity(spec.n_labeled);
    if spec.stratified {
        let first_of = |class: Label| order.iter().position(|&i| data.ground_truth(i) == class);
        let (Some(p), Some(q)) = (first_of(Label::Positive), first_of(Label::Negative)) else {
            return Err(Error::InvalidSplit(
                "stratified split needs samples of both classes".into(),
            ));
        };
        labeled.push(order[p]);
        labeled.push(order[q]);
        let (hi, lo) = (p.max(q), p.min(q));
        order.remove(hi);
        order.remove(lo);
    }
    labeled.extend(order.iter().take(spec.n_labeled - labeled.len()));
    labeled.sort_unstable();
    Ok(data.with_partition(labeled))
}
