//! Sparse datasets: libsvm I/O, feature normalization and labeled/unlabeled splits.
//!
//! A [`Dataset`] always carries the ground-truth label of every sample in a
//! shadow array. Only the labels of the labeled index set are visible through
//! [`Dataset::label`]; the unlabeled truth is reachable solely through
//! [`Dataset::ground_truth`], which the solvers never call.

mod libsvm;
mod registry;
mod split;

use std::fmt;

pub use libsvm::{load_libsvm, parse_libsvm, parse_libsvm_str, write_libsvm, ParseOptions};
pub use registry::{Registry, RegistryEntry};
pub use split::{make_split, SplitSpec};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn from_value(v: f64) -> Label {
        if v > 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    /// `+1.0` or `-1.0`.
    pub fn value(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Positive => f.write_str("+1"),
            Label::Negative => f.write_str("-1"),
        }
    }
}

/// Sparse feature vector with 1-based, strictly increasing feature indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Builds a vector from `(index, value)` pairs; indices must be 1-based
    /// and strictly increasing.
    pub fn new(entries: Vec<(u32, f64)>) -> Result<Self> {
        let mut prev = 0u32;
        for &(idx, _) in &entries {
            if idx <= prev {
                return Err(Error::InvalidParameter(format!(
                    "feature index {idx} is not strictly increasing (previous {prev})"
                )));
            }
            prev = idx;
        }
        let (indices, values) = entries.into_iter().unzip();
        Ok(SparseVector { indices, values })
    }

    /// Dense input; index `i` of the slice becomes feature `i + 1`. Zeros are skipped.
    pub fn from_dense(values: &[f64]) -> Self {
        let mut out = SparseVector::default();
        for (i, &v) in values.iter().enumerate() {
            if v != 0.0 {
                out.indices.push(i as u32 + 1);
                out.values.push(v);
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Largest feature index, 0 for the empty vector.
    pub fn max_index(&self) -> u32 {
        self.indices.last().copied().unwrap_or(0)
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    /// Dot product with a dense vector indexed from feature 1 at position 0.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter()
            .map(|(i, v)| dense.get(i as usize - 1).map_or(0.0, |d| v * d))
            .sum()
    }

    pub fn squared_distance(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        loop {
            let ia = self.indices.get(a);
            let ib = other.indices.get(b);
            match (ia, ib) {
                (None, None) => break,
                (Some(_), None) => {
                    acc += self.values[a] * self.values[a];
                    a += 1;
                }
                (None, Some(_)) => {
                    acc += other.values[b] * other.values[b];
                    b += 1;
                }
                (Some(x), Some(y)) => match x.cmp(y) {
                    std::cmp::Ordering::Less => {
                        acc += self.values[a] * self.values[a];
                        a += 1;
                    }
                    std::cmp::Ordering::Greater => {
                        acc += other.values[b] * other.values[b];
                        b += 1;
                    }
                    std::cmp::Ordering::Equal => {
                        let d = self.values[a] - other.values[b];
                        acc += d * d;
                        a += 1;
                        b += 1;
                    }
                },
            }
        }
        acc
    }

    /// Adds `scale * self` into a dense accumulator indexed from feature 1 at position 0.
    pub fn add_to_dense(&self, dense: &mut [f64], scale: f64) {
        for (i, v) in self.iter() {
            dense[i as usize - 1] += scale * v;
        }
    }
}

/// Samples with a labeled/unlabeled partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<SparseVector>,
    truth: Vec<Label>,
    is_labeled: Vec<bool>,
    labeled_idx: Vec<usize>,
    unlabeled_idx: Vec<usize>,
    n_features: usize,
}

impl Dataset {
    /// Fully labeled dataset: every sample lands in `L`.
    pub fn new(samples: Vec<SparseVector>, labels: Vec<Label>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if samples.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.len(),
                found: labels.len(),
            });
        }
        let n_features = samples.iter().map(|s| s.max_index() as usize).max().unwrap_or(0);
        let n = samples.len();
        Ok(Dataset {
            samples,
            truth: labels,
            is_labeled: vec![true; n],
            labeled_idx: (0..n).collect(),
            unlabeled_idx: Vec::new(),
            n_features,
        })
    }

    /// Same samples and truth with `labeled` as `L` and every other sample in `U`.
    pub fn with_labeled(&self, mut labeled: Vec<usize>) -> Result<Dataset> {
        labeled.sort_unstable();
        labeled.dedup();
        if let Some(&bad) = labeled.iter().find(|&&i| i >= self.len()) {
            return Err(Error::InvalidSplit(format!("index {bad} out of range")));
        }
        Ok(self.with_partition(labeled))
    }

    /// Same samples and truth, new partition. `labeled` must be sorted and unique.
    pub(crate) fn with_partition(&self, labeled: Vec<usize>) -> Dataset {
        let mut is_labeled = vec![false; self.len()];
        for &i in &labeled {
            is_labeled[i] = true;
        }
        let unlabeled_idx = (0..self.len()).filter(|&i| !is_labeled[i]).collect();
        Dataset {
            samples: self.samples.clone(),
            truth: self.truth.clone(),
            is_labeled,
            labeled_idx: labeled,
            unlabeled_idx,
            n_features: self.n_features,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn samples(&self) -> &[SparseVector] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &SparseVector {
        &self.samples[i]
    }

    pub fn labeled_idx(&self) -> &[usize] {
        &self.labeled_idx
    }

    pub fn unlabeled_idx(&self) -> &[usize] {
        &self.unlabeled_idx
    }

    pub fn n_labeled(&self) -> usize {
        self.labeled_idx.len()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.unlabeled_idx.len()
    }

    /// Visible label: `None` for unlabeled samples.
    pub fn label(&self, i: usize) -> Option<Label> {
        self.is_labeled[i].then(|| self.truth[i])
    }

    /// Labels of `L` in `labeled_idx` order.
    pub fn labeled_labels(&self) -> Vec<Label> {
        self.labeled_idx.iter().map(|&i| self.truth[i]).collect()
    }

    /// Ground truth of any sample. Reserved for accuracy scoring.
    pub fn ground_truth(&self, i: usize) -> Label {
        self.truth[i]
    }

    /// Fraction of positive samples in `U` according to the ground truth.
    pub fn unlabeled_positive_ratio(&self) -> f64 {
        if self.unlabeled_idx.is_empty() {
            return 0.0;
        }
        let pos = self
            .unlabeled_idx
            .iter()
            .filter(|&&i| self.truth[i] == Label::Positive)
            .count();
        pos as f64 / self.unlabeled_idx.len() as f64
    }

    /// Percentage of unlabeled samples whose predicted label matches the truth.
    /// `predicted` follows `unlabeled_idx` order.
    pub fn transductive_accuracy(&self, predicted: &[Label]) -> Result<f64> {
        if predicted.len() != self.unlabeled_idx.len() {
            return Err(Error::DimensionMismatch {
                expected: self.unlabeled_idx.len(),
                found: predicted.len(),
            });
        }
        if predicted.is_empty() {
            return Ok(0.0);
        }
        let hits = self
            .unlabeled_idx
            .iter()
            .zip(predicted)
            .filter(|(&i, &p)| self.truth[i] == p)
            .count();
        Ok(100.0 * hits as f64 / predicted.len() as f64)
    }

    /// Average number of explicit non-zero entries per sample.
    pub fn mean_nonzeros(&self) -> f64 {
        let nz: usize = self
            .samples
            .iter()
            .map(|s| s.values().iter().filter(|v| **v != 0.0).count())
            .sum();
        nz as f64 / self.samples.len() as f64
    }

    /// Min-max scales every feature column to `[0, 1]`.
    ///
    /// Column statistics are taken jointly over `L ∪ U` and count implicit
    /// zeros as values. A column with a negative minimum is densified; a
    /// constant column maps to zero. Entries that end up exactly zero are
    /// dropped from the sparse representation.
    pub fn normalize_features(&self) -> Dataset {
        let nf = self.n_features;
        let n = self.samples.len();
        let mut min = vec![f64::INFINITY; nf];
        let mut max = vec![f64::NEG_INFINITY; nf];
        let mut count = vec![0usize; nf];
        for s in &self.samples {
            for (i, v) in s.iter() {
                let c = i as usize - 1;
                min[c] = min[c].min(v);
                max[c] = max[c].max(v);
                count[c] += 1;
            }
        }
        for c in 0..nf {
            if count[c] < n {
                min[c] = min[c].min(0.0);
                max[c] = max[c].max(0.0);
            }
        }
        let scale = |c: usize, v: f64| {
            let range = max[c] - min[c];
            if range > 0.0 {
                ((v - min[c]) / range).clamp(0.0, 1.0)
            } else {
                0.0
            }
        };
        // Columns whose implicit zeros scale to a non-zero value.
        let dense_cols: Vec<u32> = (0..nf)
            .filter(|&c| count[c] < n && min[c] < 0.0)
            .map(|c| c as u32 + 1)
            .collect();

        let samples = self
            .samples
            .iter()
            .map(|s| {
                let mut entries = Vec::with_capacity(s.nnz() + dense_cols.len());
                let mut explicit = s.iter().peekable();
                let mut implicit = dense_cols.iter().copied().peekable();
                loop {
                    let (idx, raw) = match (explicit.peek().copied(), implicit.peek().copied()) {
                        (None, None) => break,
                        (Some((i, v)), Some(j)) if i == j => {
                            explicit.next();
                            implicit.next();
                            (i, v)
                        }
                        (Some((i, v)), Some(j)) if i < j => {
                            explicit.next();
                            (i, v)
                        }
                        (Some((i, v)), None) => {
                            explicit.next();
                            (i, v)
                        }
                        (_, Some(j)) => {
                            implicit.next();
                            (j, 0.0)
                        }
                    };
                    let value = scale(idx as usize - 1, raw);
                    if value != 0.0 {
                        entries.push((idx, value));
                    }
                }
                let (indices, values) = entries.into_iter().unzip();
                SparseVector { indices, values }
            })
            .collect();

        Dataset {
            samples,
            truth: self.truth.clone(),
            is_labeled: self.is_labeled.clone(),
            labeled_idx: self.labeled_idx.clone(),
            unlabeled_idx: self.unlabeled_idx.clone(),
            n_features: nf,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(d: &Dataset, feature: u32) -> Vec<f64> {
        d.samples()
            .iter()
            .map(|s| s.iter().find(|(i, _)| *i == feature).map_or(0.0, |(_, v)| v))
            .collect()
    }

    fn dataset(rows: &[&[f64]]) -> Dataset {
        let samples = rows.iter().map(|r| SparseVector::from_dense(r)).collect();
        let labels = (0..rows.len())
            .map(|i| if i % 2 == 0 { Label::Positive } else { Label::Negative })
            .collect();
        Dataset::new(samples, labels).unwrap()
    }

    #[test]
    fn min_max_scaling_of_a_column() {
        let d = dataset(&[&[0.0, 1.0], &[2.0, 1.0], &[4.0, 1.0]]);
        let n = d.normalize_features();
        assert_eq!(column(&n, 1), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let d = dataset(&[&[3.0, 1.0], &[3.0, 2.0], &[3.0, 5.0]]);
        let n = d.normalize_features();
        assert_eq!(column(&n, 1), vec![0.0, 0.0, 0.0]);
        assert!(n.samples().iter().all(|s| s.is_empty() || s.indices()[0] == 2));
    }

    #[test]
    fn unit_range_column_is_unchanged() {
        let d = dataset(&[&[0.0, 0.25], &[1.0, 0.75], &[0.5, 0.5]]);
        let n = d.normalize_features();
        assert_eq!(column(&n, 1), vec![0.0, 1.0, 0.5]);
    }

    #[test]
    fn negative_minimum_densifies_the_column() {
        let d = dataset(&[&[-1.0], &[0.0], &[1.0]]);
        let n = d.normalize_features();
        assert_eq!(column(&n, 1), vec![0.0, 0.5, 1.0]);
        assert_eq!(n.sample(1).nnz(), 1);
    }

    #[test]
    fn implicit_zero_counts_toward_the_minimum() {
        // Column 1 only has explicit 2 and 4; the implicit zero of row 0 sets min = 0.
        let d = dataset(&[&[0.0, 1.0], &[2.0, 1.0], &[4.0, 0.0]]);
        let n = d.normalize_features();
        assert_eq!(column(&n, 1), vec![0.0, 0.5, 1.0]);
        assert_eq!(n.sample(0).nnz(), 1);
    }

    #[test]
    fn sparse_vector_arithmetic() {
        let a = SparseVector::new(vec![(1, 1.0), (3, 2.0)]).unwrap();
        let b = SparseVector::new(vec![(2, 5.0), (3, 1.0)]).unwrap();
        assert_eq!(a.dot(&b), 2.0);
        assert_eq!(a.squared_distance(&b), 1.0 + 25.0 + 1.0);
        assert_eq!(a.dot_dense(&[1.0, 1.0, 1.0]), 3.0);
        assert!(SparseVector::new(vec![(2, 1.0), (2, 1.0)]).is_err());
    }

    #[test]
    fn visible_labels_hide_the_unlabeled_truth() {
        let d = dataset(&[&[1.0], &[2.0], &[3.0]]).with_partition(vec![0, 1]);
        assert_eq!(d.label(0), Some(Label::Positive));
        assert_eq!(d.label(2), None);
        assert_eq!(d.ground_truth(2), Label::Positive);
        assert_eq!(d.unlabeled_idx(), &[2]);
        assert_eq!(d.transductive_accuracy(&[Label::Positive]).unwrap(), 100.0);
    }
}
