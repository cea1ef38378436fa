//! Experiment runs over repeated random splits, and the verification suites.

pub mod fixtures;
pub mod verify;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::dataio::{make_split, Dataset, Label, SplitSpec};
use crate::error::{Error, Result};
use crate::kernels::{build_blocks_with_mode, GramMode, KernelSpec};
use crate::qp::{round_to_labels, solve_qp, S3vmConfig};
use crate::submodular::{lazy_greedy_maximize, SubmodularObjective};
use crate::svm::{predict, train_supervised};

pub use verify::{verify, CheckResult, Suite, VerifyReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Method {
    #[serde(rename = "svm")]
    Svm,
    #[serde(rename = "qp-s3vm")]
    QpS3vm,
    #[serde(rename = "s-qp-s3vm")]
    SQpS3vm,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Svm, Method::QpS3vm, Method::SQpS3vm];

    pub fn name(self) -> &'static str {
        match self {
            Method::Svm => "svm",
            Method::QpS3vm => "qp-s3vm",
            Method::SQpS3vm => "s-qp-s3vm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentConfig {
    pub dataset: String,
    pub method: Method,
    pub c: f64,
    pub c_star: f64,
    /// Positive fraction in `U`; `None` uses the true fraction of each split.
    pub r: Option<f64>,
    pub n_labeled: usize,
    pub splits: usize,
    pub seed: u64,
    pub kernel: KernelSpec,
    /// Largest `|U|` the relaxation solver accepts.
    pub qp_cap: usize,
    pub qp_restarts: usize,
    pub qp_max_iters: usize,
    pub svm_epochs: usize,
    pub parallel_splits: bool,
}

impl ExperimentConfig {
    /// Relaxation restarts and iteration limit follow [`S3vmConfig`]'s defaults.
    pub fn new(dataset: impl Into<String>, method: Method, c: f64, c_star: f64, n_labeled: usize) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            method,
            c,
            c_star,
            r: None,
            n_labeled,
            splits: 10,
            seed: 0,
            kernel: KernelSpec::linear(),
            qp_cap: 3000,
            qp_restarts: 20,
            qp_max_iters: 500,
            svm_epochs: 1000,
            parallel_splits: false,
        }
    }

    /// Seed of split `i`. Independent of the method so every method sees the
    /// same partitions.
    pub fn split_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunReport {
    pub dataset: String,
    pub method: Method,
    pub split_seed: u64,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    /// Positives assigned in `U` (`None` for the supervised baseline).
    pub k: Option<usize>,
    pub r: f64,
    /// Transductive accuracy on `U`, in percent.
    pub accuracy: f64,
    /// Solver only: excludes loading, normalization and kernel construction.
    pub solver_seconds: f64,
    pub total_seconds: f64,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExperimentSummary {
    pub dataset: String,
    pub method: Method,
    pub runs: Vec<RunReport>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_solver_seconds: f64,
    pub mean_total_seconds: f64,
}

impl ExperimentSummary {
    fn from_runs(cfg: &ExperimentConfig, runs: Vec<RunReport>) -> Self {
        let n = runs.len().max(1) as f64;
        let mean = runs.iter().map(|r| r.accuracy).sum::<f64>() / n;
        let var = runs.iter().map(|r| (r.accuracy - mean).powi(2)).sum::<f64>() / n;
        ExperimentSummary {
            dataset: cfg.dataset.clone(),
            method: cfg.method,
            mean_accuracy: mean,
            std_accuracy: var.sqrt(),
            mean_solver_seconds: runs.iter().map(|r| r.solver_seconds).sum::<f64>() / n,
            mean_total_seconds: runs.iter().map(|r| r.total_seconds).sum::<f64>() / n,
            runs,
        }
    }

    /// CSV with one row per split.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,method,split_seed,n_labeled,n_unlabeled,k,r,accuracy,solver_seconds,total_seconds\n");
        for r in &self.runs {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.dataset,
                r.method,
                r.split_seed,
                r.n_labeled,
                r.n_unlabeled,
                r.k.map_or(String::new(), |k| k.to_string()),
                r.r,
                r.accuracy,
                r.solver_seconds,
                r.total_seconds
            ));
        }
        out
    }
}

/// Normalizes `data` once, then runs `cfg.splits` seeded splits.
pub fn run_experiment(data: &Dataset, cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    if cfg.splits == 0 {
        return Err(Error::InvalidParameter("need at least one split".into()));
    }
    let normalized = data.normalize_features();
    let runs: Vec<RunReport> = if cfg.parallel_splits {
        (0..cfg.splits)
            .into_par_iter()
            .map(|i| run_split(&normalized, cfg, i))
            .collect::<Result<_>>()?
    } else {
        (0..cfg.splits)
            .map(|i| run_split(&normalized, cfg, i))
            .collect::<Result<_>>()?
    };
    Ok(ExperimentSummary::from_runs(cfg, runs))
}

/// Labels produced by one method on one split, in `unlabeled_idx` order.
#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub split: Dataset,
    pub labels: Vec<Label>,
    pub k: Option<usize>,
    pub r: f64,
    pub solver_seconds: f64,
    pub total_seconds: f64,
}

/// Runs split `index` of an already normalized dataset.
pub fn solve_split(normalized: &Dataset, cfg: &ExperimentConfig, index: usize) -> Result<SplitOutcome> {
    let total = Instant::now();
    let split = make_split(normalized, &SplitSpec::new(cfg.n_labeled, cfg.split_seed(index)))?;
    let n_u = split.n_unlabeled();
    let r = cfg.r.unwrap_or_else(|| split.unlabeled_positive_ratio());

    let (labels, k, solver_seconds) = match cfg.method {
        Method::Svm => {
            let t = Instant::now();
            let fit = train_supervised(&split, cfg.c, cfg.svm_epochs, cfg.split_seed(index))?;
            let labels = split
                .unlabeled_idx()
                .iter()
                .map(|&j| predict(&fit.model, split.sample(j)))
                .collect();
            (labels, None, t.elapsed().as_secs_f64())
        }
        Method::QpS3vm => {
            if n_u > cfg.qp_cap {
                return Err(Error::CapExceeded {
                    method: cfg.method.to_string(),
                    n_unlabeled: n_u,
                    cap: cfg.qp_cap,
                });
            }
            let s3 = s3vm_config(cfg, r, index)?;
            let k = s3.cardinality(n_u)?;
            let blocks = build_blocks_with_mode(&split, &cfg.kernel, GramMode::Dense)?;
            let t = Instant::now();
            let sol = solve_qp(&blocks, &s3)?;
            let labels = round_to_labels(&sol.p, k);
            (labels, Some(k), t.elapsed().as_secs_f64())
        }
        Method::SQpS3vm => {
            let s3 = s3vm_config(cfg, r, index)?;
            let k = s3.cardinality(n_u)?;
            let blocks = build_blocks_with_mode(&split, &cfg.kernel, GramMode::OnDemand)?;
            let t = Instant::now();
            let out = lazy_greedy_maximize(&SubmodularObjective::new(&blocks, &s3), k)?;
            let labels = out.labels();
            (labels, Some(k), t.elapsed().as_secs_f64())
        }
    };
    Ok(SplitOutcome {
        split,
        labels,
        k,
        r,
        solver_seconds,
        total_seconds: total.elapsed().as_secs_f64(),
    })
}

fn s3vm_config(cfg: &ExperimentConfig, r: f64, index: usize) -> Result<S3vmConfig> {
    let mut s3 = S3vmConfig::new(cfg.c, cfg.c_star, r)?;
    s3.restarts = cfg.qp_restarts;
    s3.max_iters = cfg.qp_max_iters;
    s3.seed = cfg.split_seed(index);
    Ok(s3)
}

pub fn run_split(normalized: &Dataset, cfg: &ExperimentConfig, index: usize) -> Result<RunReport> {
    let out = solve_split(normalized, cfg, index)?;
    Ok(RunReport {
        dataset: cfg.dataset.clone(),
        method: cfg.method,
        split_seed: cfg.split_seed(index),
        n_labeled: out.split.n_labeled(),
        n_unlabeled: out.split.n_unlabeled(),
        k: out.k,
        r: out.r,
        accuracy: out.split.transductive_accuracy(&out.labels)?,
        solver_seconds: out.solver_seconds,
        total_seconds: out.total_seconds,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::SparseVector;

    fn blobs() -> Dataset {
        let mut samples = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let t = (i as f64 * 0.37).fract() * 0.2;
            let (x, label) = if i % 2 == 0 {
                ([0.1 + t, 0.2 + t], Label::Positive)
            } else {
                ([0.8 - t, 0.9 - t], Label::Negative)
            };
            samples.push(SparseVector::from_dense(&x));
            labels.push(label);
        }
        Dataset::new(samples, labels).unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!(matches!("tsvm".parse::<Method>(), Err(Error::UnknownMethod(_))));
    }

    #[test]
    fn methods_share_splits_and_reports_are_sane() {
        let data = blobs();
        let mut seen = Vec::new();
        for method in Method::ALL {
            let mut cfg = ExperimentConfig::new("blobs", method, 1.0, 0.5, 4);
            cfg.splits = 3;
            cfg.kernel = KernelSpec::rbf(2.0).unwrap();
            let summary = run_experiment(&data, &cfg).unwrap();
            assert_eq!(summary.runs.len(), 3);
            for r in &summary.runs {
                assert!((0.0..=100.0).contains(&r.accuracy));
                assert!(r.solver_seconds >= 0.0 && r.total_seconds >= r.solver_seconds);
            }
            let normalized = data.normalize_features();
            seen.push(solve_split(&normalized, &cfg, 1).unwrap().split.labeled_idx().to_vec());
        }
        assert!(seen.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn relaxation_respects_the_cap() {
        let mut cfg = ExperimentConfig::new("blobs", Method::QpS3vm, 1.0, 0.5, 4);
        cfg.qp_cap = 10;
        assert!(matches!(run_experiment(&blobs(), &cfg), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn repeated_runs_agree() {
        let mut cfg = ExperimentConfig::new("blobs", Method::SQpS3vm, 1.0, 0.5, 4);
        cfg.splits = 2;
        cfg.parallel_splits = true;
        let a = run_experiment(&blobs(), &cfg).unwrap();
        let b = run_experiment(&blobs(), &cfg).unwrap();
        let acc = |s: &ExperimentSummary| s.runs.iter().map(|r| r.accuracy).collect::<Vec<_>>();
        assert_eq!(acc(&a), acc(&b));
    }
}
