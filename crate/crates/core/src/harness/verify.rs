//! Property suites over random fixtures, each reduced to a pass/fail check
//! with its worst observed violation.

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::fixtures::{fixture_family, Fixture};
use crate::error::{Error, Result};
use crate::qp::{dual_objective, for_each_subset, project_capped_simplex, qp_objective_standard, upper_bound};
use crate::qp::{DualPoint, SoftLabels};
use crate::submodular::{brute_force_max, check_submodularity, greedy_maximize, SubmodularObjective};
use crate::svm::train_supervised;

pub const TOLERANCE: f64 = 1e-9;
pub const GREEDY_RATIO: f64 = 1.0 - 1.0 / std::f64::consts::E;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Bound,
    Submodularity,
    Greedy,
    Equivalence,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Suite::All),
            "bound" => Ok(Suite::Bound),
            "submodularity" => Ok(Suite::Submodularity),
            "greedy" => Ok(Suite::Greedy),
            "equivalence" => Ok(Suite::Equivalence),
            other => Err(Error::InvalidParameter(format!("unknown suite `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub fixtures: usize,
    pub samples: usize,
    /// Worst violation of the checked inequality or identity (0 when none).
    pub max_violation: f64,
    /// Number of samples that violated the check.
    pub violations: usize,
    /// A check-specific observed quantity, e.g. the smallest greedy ratio.
    pub observed: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

pub fn verify(suite: Suite, seed: u64) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    if matches!(suite, Suite::All | Suite::Bound) {
        checks.push(dual_bound_check(seed, 20, 1000)?);
    }
    if matches!(suite, Suite::All | Suite::Submodularity) {
        checks.push(submodularity_check(seed, 20, 1000)?);
    }
    if matches!(suite, Suite::All | Suite::Greedy) {
        checks.push(greedy_ratio_check(seed, 20)?);
    }
    if matches!(suite, Suite::All | Suite::Equivalence) {
        checks.push(equivalence_check(seed, 10)?);
    }
    Ok(VerifyReport {
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

fn random_soft_labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> SoftLabels {
    use rand::Rng;
    let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    SoftLabels::new(project_capped_simplex(&raw, k as f64).iter().map(|p| p.clamp(0.0, 1.0)).collect())
        .expect("projection stays in the box")
}

/// Random feasible dual points never exceed `I(w*) + C*|U| + M1 + M2`.
///
/// Fixtures use the linear kernel so that `I(w*)` from the linear supervised
/// solver is the optimum over the same feature map.
pub fn dual_bound_check(seed: u64, fixtures: usize, points: usize) -> Result<CheckResult> {
    let family: Vec<Fixture> = linear_family(seed, fixtures)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let (mut worst, mut violations, mut offending) = (0.0f64, 0, 0);
    for f in &family {
        let fit = train_supervised(&f.data, f.cfg.c, 2000, f.cfg.seed)?;
        let n_u = f.blocks.n_unlabeled();
        let k = f.cfg.cardinality(n_u)?;
        let mut bad_here = false;
        for _ in 0..points {
            let p = random_soft_labels(&mut rng, n_u, k);
            let dp = DualPoint::random(&mut rng, &p, f.blocks.n_labeled(), f.cfg.c, f.cfg.c_star);
            let dual = dual_objective(&dp, &p, &f.blocks, &f.cfg)?;
            let bound = upper_bound(&p, &f.blocks, &f.cfg, fit.objective)?;
            let excess = dual - bound;
            if excess > TOLERANCE {
                violations += 1;
                bad_here = true;
            }
            worst = worst.max(excess);
        }
        offending += bad_here as usize;
    }
    Ok(CheckResult {
        name: "dual objective below the soft-label upper bound".into(),
        passed: violations == 0,
        fixtures,
        samples: fixtures * points,
        max_violation: worst.max(0.0),
        violations,
        observed: None,
        detail: format!("{offending} of {fixtures} fixtures had at least one dual point above the bound"),
    })
}

fn linear_family(seed: u64, count: usize) -> Result<Vec<Fixture>> {
    use super::fixtures::{random_fixture, FixtureKernel, FixtureShape};
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x11);
    (0..count)
        .map(|_| {
            random_fixture(
                rng.gen(),
                FixtureShape {
                    n_labeled: rng.gen_range(4..=8),
                    n_unlabeled: rng.gen_range(6..=12),
                    n_features: rng.gen_range(2..=4),
                    kernel: FixtureKernel::Linear,
                },
            )
        })
        .collect()
}

/// Monotonicity and diminishing returns on sampled chains, plus `S(∅) = 0`.
pub fn submodularity_check(seed: u64, fixtures: usize, trials: usize) -> Result<CheckResult> {
    let family = fixture_family(seed, fixtures, (2, 6), (5, 15))?;
    let (mut mono, mut sub, mut closed) = (0.0f64, 0.0f64, 0.0f64);
    let mut failed = 0;
    let mut empty_exact = true;
    for f in &family {
        let report = check_submodularity(&SubmodularObjective::new(&f.blocks, &f.cfg), trials, f.cfg.seed);
        mono = mono.max(report.max_monotonicity_violation);
        sub = sub.max(report.max_submodularity_violation);
        closed = closed.max(report.max_closed_form_error);
        empty_exact &= report.empty_value == 0.0;
        failed += (!report.passed) as usize;
    }
    Ok(CheckResult {
        name: "monotone and submodular set function".into(),
        passed: failed == 0 && empty_exact,
        fixtures,
        samples: fixtures * trials,
        max_violation: mono.max(sub),
        violations: failed,
        observed: Some(closed),
        detail: format!(
            "monotonicity {mono:.3e}, diminishing returns {sub:.3e}, closed-form gain difference error {closed:.3e}, empty set exact: {empty_exact}"
        ),
    })
}

/// Greedy reaches at least `(1 − 1/e)` of the enumerated optimum.
pub fn greedy_ratio_check(seed: u64, fixtures: usize) -> Result<CheckResult> {
    let family = fixture_family(seed ^ 0x22, fixtures, (2, 6), (4, 12))?;
    let mut min_ratio = f64::INFINITY;
    let mut violations = 0;
    for f in &family {
        let obj = SubmodularObjective::new(&f.blocks, &f.cfg);
        let k = f.cfg.cardinality(f.blocks.n_unlabeled())?;
        let greedy = greedy_maximize(&obj, k)?;
        let (_, best) = brute_force_max(&obj, k)?;
        let ratio = obj.s_value(&greedy.selected)? / best;
        min_ratio = min_ratio.min(ratio);
        if ratio < GREEDY_RATIO {
            violations += 1;
        }
    }
    Ok(CheckResult {
        name: "greedy approximation ratio".into(),
        passed: violations == 0,
        fixtures,
        samples: fixtures,
        max_violation: (GREEDY_RATIO - min_ratio).max(0.0),
        violations,
        observed: Some(min_ratio),
        detail: format!("smallest observed ratio {min_ratio:.6} against the bound {GREEDY_RATIO:.6}"),
    })
}

/// Outcome of comparing the set function with the relaxation at binary points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceOutcome {
    /// Largest `|(S(A) − S(A')) + (f(1_A) − f(1_A'))|` over equal-size pairs,
    /// relative to `1 + max|S|`.
    pub max_pair_error: f64,
    pub pairs: usize,
    /// The size-`k` maximizer of `S` also minimizes the relaxation over size-`k` indicators.
    pub same_optimizer: bool,
}

/// For every cardinality, `S(A) + f_std(1_A)` must be the same for all `A`;
/// its spread is the worst pairwise error.
pub fn compare_with_relaxation(f: &Fixture) -> Result<EquivalenceOutcome> {
    let n = f.blocks.n_unlabeled();
    if n > 20 {
        return Err(Error::EnumerationTooLarge(n));
    }
    let obj = SubmodularObjective::new(&f.blocks, &f.cfg);
    let k = f.cfg.cardinality(n)?;
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    let mut same_optimizer = true;
    for size in 0..=n {
        let mut sums = Vec::new();
        let mut s_max: Option<(Vec<usize>, f64)> = None;
        let mut q_min: Option<(Vec<usize>, f64)> = None;
        let mut scale = 1.0f64;
        let mut err = None;
        for_each_subset(n, size, |set| {
            let s = match obj.s_value(set) {
                Ok(v) => v,
                Err(e) => return err = Some(e),
            };
            let q = match qp_objective_standard(&SoftLabels::indicator(n, set), &f.blocks, &f.cfg) {
                Ok(v) => v,
                Err(e) => return err = Some(e),
            };
            scale = scale.max(1.0 + s.abs());
            sums.push(s + q);
            if s_max.as_ref().is_none_or(|(_, b)| s > *b) {
                s_max = Some((set.to_vec(), s));
            }
            if q_min.as_ref().is_none_or(|(_, b)| q < *b) {
                q_min = Some((set.to_vec(), q));
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        let lo = sums.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max((hi - lo) / scale);
        pairs += sums.len() * (sums.len() - 1) / 2;
        if size == k {
            let (s_set, _) = s_max.expect("non-empty enumeration");
            let (q_set, q_best) = q_min.expect("non-empty enumeration");
            if s_set != q_set {
                // Distinct optimizers are acceptable only as an exact tie.
                let q_at_s = qp_objective_standard(&SoftLabels::indicator(n, &s_set), &f.blocks, &f.cfg)?;
                same_optimizer = (q_at_s - q_best).abs() <= TOLERANCE * (1.0 + q_best.abs());
            }
        }
    }
    Ok(EquivalenceOutcome {
        max_pair_error: worst,
        pairs,
        same_optimizer,
    })
}

pub fn equivalence_check(seed: u64, fixtures: usize) -> Result<CheckResult> {
    let family = fixture_family(seed ^ 0x33, fixtures, (2, 6), (4, 10))?;
    let mut worst = 0.0f64;
    let mut pairs = 0;
    let mut mismatched = 0;
    for f in &family {
        let out = compare_with_relaxation(f)?;
        worst = worst.max(out.max_pair_error);
        pairs += out.pairs;
        mismatched += (!out.same_optimizer) as usize;
    }
    Ok(CheckResult {
        name: "set function matches the relaxation at fixed cardinality".into(),
        passed: worst <= TOLERANCE && mismatched == 0,
        fixtures,
        samples: pairs,
        max_violation: worst,
        violations: mismatched,
        observed: None,
        detail: format!("{pairs} equal-size pairs, {mismatched} fixtures with differing optimizers"),
    })
}
