//! The discrete counterpart of the relaxation: choose the positive set `A ⊆ U`.
//!
//! ```text
//! S(A) = −½C*² Σ_{j∈A} Σ_{j'∈U} K_uu[j,j'] + C·C* Σ_{j∈A} Σ_{i∈L} y_i K_lu[i,j]
//!        + ½C*² Σ_{j,j'∈A} K_uu[j,j'] + d·(|A|·c₀ − ½C*²|A|²)
//! c₀ = (3/2)C*²|U| + C·C*|L|
//! ```
//!
//! The last term depends on `|A|` only, so for a fixed cardinality `S` ranks
//! subsets exactly like the negated relaxation objective at their indicator
//! vectors. With `0 ≤ K ≤ d` it makes `S` monotone and submodular: adding `m`
//! to `A` gains
//!
//! ```text
//! −½C*²·rowsum[m] + C·C*·ylabelsum[m] + C*²·Σ_{j∈A} K[m,j] − d·C*²|A|
//!   + ½C*²(K[m,m] − d) + d·c₀
//! ```
//!
//! and growing `A` by `q` lowers that gain by exactly `C*²(d − K[q,m]) ≥ 0`.
//! Elements are positions `0..|U|` within the unlabeled set.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataio::Label;
use crate::error::{Error, Result};
use crate::kernels::KernelBlocks;
use crate::qp::{for_each_subset, S3vmConfig};

/// Candidate scans below this size stay on one thread.
const PARALLEL_SCAN_MIN: usize = 4096;

#[derive(Debug, Clone, Copy)]
pub struct SubmodularObjective<'a> {
    blocks: &'a KernelBlocks,
    c: f64,
    c_star: f64,
    d: f64,
}

impl<'a> SubmodularObjective<'a> {
    pub fn new(blocks: &'a KernelBlocks, cfg: &S3vmConfig) -> Self {
        SubmodularObjective {
            blocks,
            c: cfg.c,
            c_star: cfg.c_star,
            d: blocks.d(),
        }
    }

    pub fn blocks(&self) -> &'a KernelBlocks {
        self.blocks
    }

    pub fn n_unlabeled(&self) -> usize {
        self.blocks.n_unlabeled()
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    fn cs2(&self) -> f64 {
        self.c_star * self.c_star
    }

    /// `(3/2)C*²|U| + C·C*|L|`
    fn c0(&self) -> f64 {
        1.5 * self.cs2() * self.blocks.n_unlabeled() as f64 + self.c * self.c_star * self.blocks.n_labeled() as f64
    }

    /// The cardinality term `d·(n·c₀ − ½C*²n²)`.
    pub fn cardinality_term(&self, n: usize) -> f64 {
        let n = n as f64;
        self.d * (n * self.c0() - 0.5 * self.cs2() * n * n)
    }

    /// Part of the gain that does not depend on `A`.
    fn base_gain(&self, m: usize) -> f64 {
        let cs2 = self.cs2();
        -0.5 * cs2 * self.blocks.rowsum_uu()[m]
            + self.c * self.c_star * self.blocks.ylabelsum_lu()[m]
            + 0.5 * cs2 * (self.blocks.diag_uu()[m] - self.d)
            + self.d * self.c0()
    }

    fn gain_from_parts(&self, base: f64, sum_a: f64, size: usize) -> f64 {
        let cs2 = self.cs2();
        base + cs2 * sum_a - self.d * cs2 * size as f64
    }

    /// Rough magnitude of the terms summed into a gain, for tolerances.
    pub fn gain_scale(&self) -> f64 {
        let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        self.d * self.c0()
            + self.cs2() * (max_abs(self.blocks.rowsum_uu()) + self.d * self.n_unlabeled() as f64)
            + self.c * self.c_star * max_abs(self.blocks.ylabelsum_lu())
    }

    fn check_set(&self, set: &[usize]) -> Result<()> {
        let n = self.n_unlabeled();
        let mut seen = vec![false; n];
        for &j in set {
            if j >= n {
                return Err(Error::NotUnlabeled(j));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(Error::AlreadySelected(j));
            }
        }
        Ok(())
    }

    /// `S(A)` evaluated term by term from the kernel rows.
    pub fn s_value(&self, set: &[usize]) -> Result<f64> {
        self.check_set(set)?;
        let cs2 = self.cs2();
        let mut first = 0.0;
        let mut second = 0.0;
        let mut pairs = 0.0;
        for &j in set {
            let row = self.blocks.uu_row(j);
            first += row.iter().sum::<f64>();
            second += self.blocks.ylabelsum_lu()[j];
            pairs += set.iter().map(|&j2| row[j2]).sum::<f64>();
        }
        Ok(-0.5 * cs2 * first + self.c * self.c_star * second + 0.5 * cs2 * pairs + self.cardinality_term(set.len()))
    }

    pub fn state(&self) -> SelectionState<'a> {
        SelectionState::new(*self)
    }
}

/// A growing positive set with `Σ_{j∈A} K[m,j]` cached for every candidate.
#[derive(Debug, Clone)]
pub struct SelectionState<'a> {
    objective: SubmodularObjective<'a>,
    selected: Vec<usize>,
    in_set: Vec<bool>,
    base: Vec<f64>,
    sum_a: Vec<f64>,
    value: f64,
}

impl<'a> SelectionState<'a> {
    pub fn new(objective: SubmodularObjective<'a>) -> Self {
        let n = objective.n_unlabeled();
        SelectionState {
            objective,
            selected: Vec::new(),
            in_set: vec![false; n],
            base: (0..n).map(|m| objective.base_gain(m)).collect(),
            sum_a: vec![0.0; n],
            value: 0.0,
        }
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn contains(&self, m: usize) -> bool {
        self.in_set.get(m).copied().unwrap_or(false)
    }

    /// Running `S(A)`, accumulated from the gains.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// `Σ_{j∈A} K_uu[m, j]`
    pub fn sum_a(&self, m: usize) -> f64 {
        self.sum_a[m]
    }

    /// `S(A ∪ {m}) − S(A)` in O(1).
    pub fn marginal_gain(&self, m: usize) -> Result<f64> {
        if m >= self.in_set.len() {
            return Err(Error::NotUnlabeled(m));
        }
        if self.in_set[m] {
            return Err(Error::AlreadySelected(m));
        }
        Ok(self.gain_unchecked(m))
    }

    fn gain_unchecked(&self, m: usize) -> f64 {
        self.objective
            .gain_from_parts(self.base[m], self.sum_a[m], self.selected.len())
    }

    /// Adds `m` and returns its gain. Costs one kernel row.
    pub fn insert(&mut self, m: usize) -> Result<f64> {
        let gain = self.marginal_gain(m)?;
        let row = self.objective.blocks.uu_row(m);
        self.sum_a.iter_mut().zip(row.iter()).for_each(|(s, k)| *s += k);
        self.in_set[m] = true;
        self.selected.push(m);
        self.value += gain;
        Ok(gain)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TraceStep {
    pub round: usize,
    pub chosen: usize,
    pub gain: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct GreedyOutcome {
    /// Chosen positions in selection order.
    pub selected: Vec<usize>,
    pub trace: Vec<TraceStep>,
    /// `S` of the final set, accumulated over rounds.
    pub value: f64,
    /// Number of marginal-gain evaluations.
    pub evaluations: usize,
    pub n_unlabeled: usize,
}

impl GreedyOutcome {
    /// Selected positions get `+1`, the rest `−1`.
    pub fn labels(&self) -> Vec<Label> {
        let mut labels = vec![Label::Negative; self.n_unlabeled];
        for &j in &self.selected {
            labels[j] = Label::Positive;
        }
        labels
    }

    pub fn sorted_selection(&self) -> Vec<usize> {
        let mut s = self.selected.clone();
        s.sort_unstable();
        s
    }

    /// CSV rows `index,label,round`, with round `-1` for unselected positions.
    pub fn to_csv(&self) -> String {
        let mut round = vec![-1i64; self.n_unlabeled];
        for (r, &j) in self.selected.iter().enumerate() {
            round[j] = r as i64;
        }
        let mut out = String::from("index,label,round\n");
        for (j, (label, r)) in self.labels().iter().zip(&round).enumerate() {
            out.push_str(&format!("{j},{label},{r}\n"));
        }
        out
    }

    pub fn trace_json(&self) -> String {
        serde_json::to_string_pretty(&self.trace).expect("trace serializes")
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Cardinality { k, max: n });
    }
    Ok(())
}

/// Larger gain first, then lower index.
fn better(a: (usize, f64), b: (usize, f64)) -> (usize, f64) {
    match b.1.total_cmp(&a.1) {
        Ordering::Greater => b,
        Ordering::Less => a,
        Ordering::Equal if b.0 < a.0 => b,
        Ordering::Equal => a,
    }
}

/// `k` rounds, each adding the candidate of largest gain (ties to the lowest
/// position) and refreshing the cached sums with its kernel row.
pub fn greedy_maximize(objective: &SubmodularObjective<'_>, k: usize) -> Result<GreedyOutcome> {
    let n = objective.n_unlabeled();
    check_k(n, k)?;
    let mut state = objective.state();
    let mut trace = Vec::with_capacity(k);
    let mut evaluations = 0;
    for round in 0..k {
        let scan = |m: usize| (m, state.gain_unchecked(m));
        let open = |m: &usize| !state.in_set[*m];
        let best = if n >= PARALLEL_SCAN_MIN {
            (0..n).into_par_iter().filter(open).map(scan).reduce_with(better)
        } else {
            (0..n).filter(open).map(scan).reduce(better)
        };
        let (m, _) = best.expect("k ≤ |U| leaves a candidate");
        evaluations += n - round;
        let gain = state.insert(m)?;
        trace.push(TraceStep {
            round,
            chosen: m,
            gain,
            cumulative: state.value(),
        });
    }
    Ok(GreedyOutcome {
        value: state.value(),
        selected: state.selected.clone(),
        trace,
        evaluations,
        n_unlabeled: n,
    })
}

#[derive(Debug, Clone, Copy)]
struct Bound {
    gain: f64,
    index: usize,
    round: usize,
}

impl PartialEq for Bound {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Bound {}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bound {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// Same selections as [`greedy_maximize`], re-evaluating only candidates whose
/// stale gain could still win. Gains only shrink as `A` grows, so a stale
/// value bounds the current one. Candidates whose bound comes within rounding
/// distance of the leader are refreshed too, so near ties resolve exactly as
/// in the plain scan.
pub fn lazy_greedy_maximize(objective: &SubmodularObjective<'_>, k: usize) -> Result<GreedyOutcome> {
    let n = objective.n_unlabeled();
    check_k(n, k)?;
    let slack = 1e-12 * objective.gain_scale().max(1.0);
    let mut state = objective.state();
    let mut heap: BinaryHeap<Bound> = (0..n)
        .map(|m| Bound {
            gain: state.gain_unchecked(m),
            index: m,
            round: 0,
        })
        .collect();
    let mut evaluations = n;
    let mut trace = Vec::with_capacity(k);

    for round in 0..k {
        let chosen = loop {
            let mut top = heap.pop().expect("k ≤ |U| leaves a candidate");
            if top.round != round {
                top.gain = state.gain_unchecked(top.index);
                top.round = round;
                evaluations += 1;
                heap.push(top);
                continue;
            }
            while let Some(next) = heap.peek() {
                if next.round == round || next.gain < top.gain - slack {
                    break;
                }
                let mut next = heap.pop().expect("peeked");
                next.gain = state.gain_unchecked(next.index);
                next.round = round;
                evaluations += 1;
                heap.push(next);
            }
            match heap.peek() {
                Some(next) if *next > top => heap.push(top),
                _ => break top,
            }
        };
        let gain = state.insert(chosen.index)?;
        trace.push(TraceStep {
            round,
            chosen: chosen.index,
            gain,
            cumulative: state.value(),
        });
    }
    Ok(GreedyOutcome {
        value: state.value(),
        selected: state.selected.clone(),
        trace,
        evaluations,
        n_unlabeled: n,
    })
}

/// Exact maximum of `S` over subsets of size at most `k`, by enumeration.
/// Ties keep the first subset in (size, lexicographic) order.
pub fn brute_force_max(objective: &SubmodularObjective<'_>, k: usize) -> Result<(Vec<usize>, f64)> {
    let n = objective.n_unlabeled();
    if n > 20 {
        return Err(Error::EnumerationTooLarge(n));
    }
    check_k(n, k)?;
    let mut best: (Vec<usize>, f64) = (Vec::new(), 0.0);
    for size in 1..=k {
        for_each_subset(n, size, |set| {
            let v = objective.s_value(set).expect("enumerated subsets are valid");
            if v > best.1 {
                best = (set.to_vec(), v);
            }
        });
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SubmodularityReport {
    pub trials: usize,
    /// `S(∅)`, which must be exactly zero.
    pub empty_value: f64,
    /// Largest `max(0, −gain)` over sampled `(A, m)`, relative to `1 + |S(A∪m)|`.
    pub max_monotonicity_violation: f64,
    /// Largest `max(0, gain(B,m) − gain(A,m))` for `A ⊆ B`, same scaling.
    pub max_submodularity_violation: f64,
    /// Largest deviation of `gain(A,m) − gain(A∪q,m)` from `C*²(d − K[q,m])`,
    /// same scaling.
    pub max_closed_form_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Samples chains `A ⊆ B ⊂ U` with `m ∉ B` and measures monotonicity and
/// diminishing-returns violations from direct evaluations of `S`.
pub fn check_submodularity(objective: &SubmodularObjective<'_>, trials: usize, seed: u64) -> SubmodularityReport {
    const TOL: f64 = 1e-9;
    let n = objective.n_unlabeled();
    let cs2 = objective.cs2();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let empty_value = objective.s_value(&[]).expect("empty set is valid");
    let mut mono: f64 = 0.0;
    let mut sub: f64 = 0.0;
    let mut closed: f64 = 0.0;
    let s = |set: &[usize]| objective.s_value(set).expect("sampled subsets are valid");
    let mut order: Vec<usize> = (0..n).collect();

    for _ in 0..trials.min(if n < 2 { 0 } else { usize::MAX }) {
        order.shuffle(&mut rng);
        let b_size = rng.gen_range(0..n - 1);
        let a_size = rng.gen_range(0..=b_size);
        let m = order[b_size];
        let q = order[b_size + 1];
        let b_set = &order[..b_size];
        let a_set = &order[..a_size];

        let with = |set: &[usize], extra: &[usize]| {
            let mut v = set.to_vec();
            v.extend_from_slice(extra);
            v
        };
        let s_am = s(&with(a_set, &[m]));
        let gain_a = s_am - s(a_set);
        let gain_b = s(&with(b_set, &[m])) - s(b_set);
        let scale = 1.0 + s_am.abs();
        mono = mono.max((-gain_a).max(0.0) / scale).max((-gain_b).max(0.0) / scale);
        sub = sub.max((gain_b - gain_a).max(0.0) / scale);

        let aq = with(a_set, &[q]);
        let gain_aq = s(&with(&aq, &[m])) - s(&aq);
        let expected = cs2 * (objective.d - objective.blocks.uu(q, m));
        closed = closed.max(((gain_a - gain_aq) - expected).abs() / scale);
    }

    SubmodularityReport {
        trials,
        empty_value,
        max_monotonicity_violation: mono,
        max_submodularity_violation: sub,
        max_closed_form_error: closed,
        tolerance: TOL,
        passed: empty_value == 0.0 && mono <= TOL && sub <= TOL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn blocks(k_lu: &[f64], k_uu: &[f64], y: &[f64], d: f64) -> KernelBlocks {
        let nl = y.len();
        let nu = (k_uu.len() as f64).sqrt() as usize;
        let k_ll = DenseMatrix::from_row_major(nl, nl, vec![0.0; nl * nl]);
        KernelBlocks::from_parts(
            k_ll,
            DenseMatrix::from_row_major(nl, nu, k_lu.to_vec()),
            DenseMatrix::from_row_major(nu, nu, k_uu.to_vec()),
            y.to_vec(),
            d,
        )
        .unwrap()
    }

    fn unit_cfg() -> S3vmConfig {
        S3vmConfig::new(1.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn scalar_fixture_values() {
        let k = blocks(&[0.5], &[1.0], &[1.0], 1.0);
        let cfg = unit_cfg();
        let obj = SubmodularObjective::new(&k, &cfg);
        assert_eq!(obj.s_value(&[]).unwrap(), 0.0);
        assert!((obj.s_value(&[0]).unwrap() - 2.5).abs() < 1e-15);
        let state = obj.state();
        assert!((state.marginal_gain(0).unwrap() - 2.5).abs() < 1e-15);
        assert!(matches!(obj.s_value(&[1]), Err(Error::NotUnlabeled(1))));
    }

    #[test]
    fn state_tracks_direct_values() {
        let k = blocks(
            &[0.3, 0.8, 0.1, 0.6, 0.2, 0.9, 0.4, 0.5],
            &[
                1.0, 0.4, 0.2, 0.1, 0.4, 1.0, 0.5, 0.3, 0.2, 0.5, 1.0, 0.6, 0.1, 0.3, 0.6, 1.0,
            ],
            &[1.0, -1.0],
            1.0,
        );
        let cfg = S3vmConfig::new(0.8, 1.7, 0.5).unwrap();
        let obj = SubmodularObjective::new(&k, &cfg);
        let mut state = obj.state();
        for m in [2, 0, 3] {
            let before = obj.s_value(state.selected()).unwrap();
            let gain = state.marginal_gain(m).unwrap();
            state.insert(m).unwrap();
            let after = obj.s_value(state.selected()).unwrap();
            assert!((gain - (after - before)).abs() < 1e-12);
            assert!((state.value() - after).abs() < 1e-12);
        }
        assert!(matches!(state.insert(2), Err(Error::AlreadySelected(2))));
        assert!((state.sum_a(1) - (0.5 + 0.4 + 0.3)).abs() < 1e-15);
    }

    #[test]
    fn modular_fixture_is_solved_exactly() {
        let k = blocks(&[0.1, 0.7, 0.3, 0.9, 0.5], &identity(5), &[1.0], 1.0);
        let cfg = unit_cfg();
        let obj = SubmodularObjective::new(&k, &cfg);
        let greedy = greedy_maximize(&obj, 2).unwrap();
        let (best, value) = brute_force_max(&obj, 2).unwrap();
        assert_eq!(greedy.sorted_selection(), best);
        assert_eq!(best, vec![1, 3]);
        assert!((greedy.value - value).abs() < 1e-12);
    }

    fn identity(n: usize) -> Vec<f64> {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 1.0;
        }
        m
    }

    #[test]
    fn saturation_and_range() {
        let k = blocks(&[0.1, 0.7, 0.3], &identity(3), &[-1.0], 1.0);
        let cfg = unit_cfg();
        let obj = SubmodularObjective::new(&k, &cfg);
        assert_eq!(greedy_maximize(&obj, 3).unwrap().sorted_selection(), vec![0, 1, 2]);
        assert_eq!(brute_force_max(&obj, 3).unwrap().0, vec![0, 1, 2]);
        assert!(greedy_maximize(&obj, 0).is_err());
        assert!(lazy_greedy_maximize(&obj, 4).is_err());
        let single = blocks(&[0.5], &[1.0], &[1.0], 1.0);
        let single_obj = SubmodularObjective::new(&single, &cfg);
        let (set, v) = brute_force_max(&single_obj, 1).unwrap();
        assert_eq!(set, vec![0]);
        assert_eq!(v, single_obj.s_value(&[0]).unwrap());
    }

    #[test]
    fn lazy_matches_plain_and_counts() {
        let k = blocks(
            &[0.3, 0.8, 0.1, 0.6],
            &[1.0, 0.9, 0.1, 0.0, 0.9, 1.0, 0.0, 0.1, 0.1, 0.0, 1.0, 0.9, 0.0, 0.1, 0.9, 1.0],
            &[1.0],
            1.0,
        );
        let cfg = unit_cfg();
        let obj = SubmodularObjective::new(&k, &cfg);
        let first = lazy_greedy_maximize(&obj, 1).unwrap();
        assert_eq!(first.evaluations, 4);
        assert_eq!(greedy_maximize(&obj, 1).unwrap().evaluations, 4);
        for k_sel in 1..=4 {
            let plain = greedy_maximize(&obj, k_sel).unwrap();
            let lazy = lazy_greedy_maximize(&obj, k_sel).unwrap();
            assert_eq!(plain.selected, lazy.selected);
            assert_eq!(plain.trace, lazy.trace);
        }
    }

    #[test]
    fn equal_gains_go_to_the_lowest_position() {
        let k = blocks(&[0.5, 0.5, 0.5], &[1.0; 9], &[1.0], 1.0);
        let cfg = unit_cfg();
        let obj = SubmodularObjective::new(&k, &cfg);
        assert_eq!(greedy_maximize(&obj, 2).unwrap().selected, vec![0, 1]);
        assert_eq!(lazy_greedy_maximize(&obj, 2).unwrap().selected, vec![0, 1]);
    }

    #[test]
    fn checker_flags_a_bound_that_is_too_small() {
        let k_uu = [1.0, 0.8, 0.6, 0.8, 1.0, 0.7, 0.6, 0.7, 1.0];
        let k = blocks(&[0.2, 0.4, 0.6], &k_uu, &[1.0], 1.0);
        let cfg = unit_cfg();
        let sound = check_submodularity(&SubmodularObjective::new(&k, &cfg), 300, 1);
        assert!(sound.passed, "{sound:?}");
        assert!(sound.max_closed_form_error < 1e-12);
        let shrunk = k.with_bound_unchecked(0.3);
        let report = check_submodularity(&SubmodularObjective::new(&shrunk, &cfg), 300, 1);
        assert!(!report.passed);
        assert!(report.max_submodularity_violation > 1e-3);
    }

    #[test]
    fn csv_and_trace_output() {
        let k = blocks(&[0.1, 0.7, 0.3], &identity(3), &[1.0], 1.0);
        let cfg = unit_cfg();
        let out = greedy_maximize(&SubmodularObjective::new(&k, &cfg), 1).unwrap();
        assert_eq!(out.to_csv(), "index,label,round\n0,-1,-1\n1,+1,0\n2,-1,-1\n");
        let trace: Vec<TraceStep> = serde_json::from_str(&out.trace_json()).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace[0].chosen, 1);
    }
}
