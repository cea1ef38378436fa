//! The continuous relaxation over soft labels `p ∈ [0,1]^|U|` with `Σ p = k`.
//!
//! Objective, in the form minimized here:
//!
//! ```text
//! f(P) = ½C*²(1−P)'K_uu P + C·C*·Y'K_lu(1−P)
//! ```
//!
//! Its Hessian is `−C*²K_uu`, so `f` is concave and the minimum over the
//! feasible polytope sits at a vertex. [`solve_qp`] is therefore a local method:
//! projected gradient from several random feasible starts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataio::Label;
use crate::error::{Error, Result};
use crate::kernels::KernelBlocks;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct S3vmConfig {
    pub c: f64,
    pub c_star: f64,
    /// Fraction of unlabeled samples assigned to the positive class.
    pub r: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl S3vmConfig {
    pub fn new(c: f64, c_star: f64, r: f64) -> Result<Self> {
        let cfg = S3vmConfig {
            c,
            c_star,
            r,
            tol: 1e-10,
            max_iters: 500,
            restarts: 20,
            seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive("C", self.c)?;
        positive("C*", self.c_star)?;
        positive("tol", self.tol)?;
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::InvalidParameter(format!("r must lie in (0, 1), got {}", self.r)));
        }
        Ok(())
    }

    /// `round(r·|U|)`, half-up, which must land in `1..=|U|`.
    pub fn cardinality(&self, n_unlabeled: usize) -> Result<usize> {
        let k = (self.r * n_unlabeled as f64 + 0.5).floor() as usize;
        if k == 0 || k > n_unlabeled {
            return Err(Error::Cardinality { k, max: n_unlabeled });
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SoftLabels {
    p: Vec<f64>,
}

impl SoftLabels {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some(v) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("soft label {v} outside [0, 1]")));
        }
        Ok(SoftLabels { p })
    }

    pub fn constant(n: usize, value: f64) -> Self {
        SoftLabels {
            p: vec![value.clamp(0.0, 1.0); n],
        }
    }

    /// Indicator vector of `selected` over `n` unlabeled positions.
    pub fn indicator(n: usize, selected: &[usize]) -> Self {
        let mut p = vec![0.0; n];
        for &j in selected {
            p[j] = 1.0;
        }
        SoftLabels { p }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn sum(&self) -> f64 {
        self.p.iter().sum()
    }

    /// CSV rows `index,p`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,p\n");
        for (j, p) in self.p.iter().enumerate() {
            out.push_str(&format!("{j},{p}\n"));
        }
        out
    }
}

/// Lagrange multipliers: `alpha` over L, `beta` and `gamma` over U.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DualPoint {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl DualPoint {
    pub fn zeros(n_labeled: usize, n_unlabeled: usize) -> Self {
        DualPoint {
            alpha: vec![0.0; n_labeled],
            beta: vec![0.0; n_unlabeled],
            gamma: vec![0.0; n_unlabeled],
        }
    }

    /// Checks `0 ≤ α ≤ C`, `0 ≤ γ ≤ C*·P`, `0 ≤ β ≤ C*·(1−P)`.
    pub fn check_box(&self, p: &SoftLabels, c: f64, c_star: f64) -> Result<()> {
        if self.beta.len() != p.len() || self.gamma.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                found: self.beta.len().min(self.gamma.len()),
            });
        }
        let slack = 1e-12 * c.max(c_star).max(1.0);
        let within = |v: f64, hi: f64| v >= -slack && v <= hi + slack;
        if let Some((i, a)) = self.alpha.iter().enumerate().find(|(_, a)| !within(**a, c)) {
            return Err(Error::BoxViolation(format!("alpha[{i}] = {a} outside [0, {c}]")));
        }
        for (j, &pj) in p.as_slice().iter().enumerate() {
            if !within(self.gamma[j], c_star * pj) {
                return Err(Error::BoxViolation(format!(
                    "gamma[{j}] = {} outside [0, {}]",
                    self.gamma[j],
                    c_star * pj
                )));
            }
            if !within(self.beta[j], c_star * (1.0 - pj)) {
                return Err(Error::BoxViolation(format!(
                    "beta[{j}] = {} outside [0, {}]",
                    self.beta[j],
                    c_star * (1.0 - pj)
                )));
            }
        }
        Ok(())
    }

    /// A point drawn uniformly from the box for `p`.
    pub fn random<R: Rng>(rng: &mut R, p: &SoftLabels, n_labeled: usize, c: f64, c_star: f64) -> Self {
        DualPoint {
            alpha: (0..n_labeled).map(|_| rng.gen::<f64>() * c).collect(),
            beta: p.as_slice().iter().map(|pj| rng.gen::<f64>() * c_star * (1.0 - pj)).collect(),
            gamma: p.as_slice().iter().map(|pj| rng.gen::<f64>() * c_star * pj).collect(),
        }
    }
}

fn check_dims(p: &SoftLabels, k: &KernelBlocks) -> Result<()> {
    if p.len() != k.n_unlabeled() {
        return Err(Error::DimensionMismatch {
            expected: k.n_unlabeled(),
            found: p.len(),
        });
    }
    Ok(())
}

/// `½C*²(1−P)'K_uu P + C·C*·Y'K_lu(1−P)`
pub fn qp_objective(p: &SoftLabels, k: &KernelBlocks, cfg: &S3vmConfig) -> Result<f64> {
    check_dims(p, k)?;
    let kp = k.uu_mul(p.as_slice());
    Ok(objective_with(p.as_slice(), &kp, k, cfg))
}

fn objective_with(p: &[f64], kp: &[f64], k: &KernelBlocks, cfg: &S3vmConfig) -> f64 {
    let cs2 = cfg.c_star * cfg.c_star;
    let mut quad = 0.0;
    let mut lin = 0.0;
    for ((pj, kpj), ys) in p.iter().zip(kp).zip(k.ylabelsum_lu()) {
        quad += (1.0 - pj) * kpj;
        lin += ys * (1.0 - pj);
    }
    0.5 * cs2 * quad + cfg.c * cfg.c_star * lin
}

/// `−½C*²P'K_uu P + (½C*²·1'K_uu − C·C*·Y'K_lu)P`, which is
/// `qp_objective(P) − qp_objective(0)`.
pub fn qp_objective_standard(p: &SoftLabels, k: &KernelBlocks, cfg: &S3vmConfig) -> Result<f64> {
    check_dims(p, k)?;
    let cs2 = cfg.c_star * cfg.c_star;
    let quad = k.uu_quad(p.as_slice(), p.as_slice());
    let linear: f64 = p
        .as_slice()
        .iter()
        .zip(k.rowsum_uu().iter().zip(k.ylabelsum_lu()))
        .map(|(pj, (rs, ys))| (0.5 * cs2 * rs - cfg.c * cfg.c_star * ys) * pj)
        .sum();
    Ok(-0.5 * cs2 * quad + linear)
}

/// `qp_objective(0) = C·C*·Σ_j Σ_i y_i K_lu[i,j]`
pub fn qp_constant(k: &KernelBlocks, cfg: &S3vmConfig) -> f64 {
    cfg.c * cfg.c_star * k.ylabelsum_lu().iter().sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Decomposition {
    /// Diagonal part of the quadratic term; zero exactly at binary `P`.
    pub diagonal: f64,
    /// Off-diagonal part, `Σ_{j<j'} K(p_j + p_j' − 2p_j p_j')`.
    pub pairwise: f64,
    /// Linear term restricted to positive labeled samples.
    pub positive_labeled: f64,
    /// Linear term restricted to negative labeled samples.
    pub negative_labeled: f64,
}

impl Decomposition {
    pub fn total(&self) -> f64 {
        self.diagonal + self.pairwise + self.positive_labeled + self.negative_labeled
    }
}

pub fn decompose(p: &SoftLabels, k: &KernelBlocks, cfg: &S3vmConfig) -> Result<Decomposition> {
    check_dims(p, k)?;
    let half_cs2 = 0.5 * cfg.c_star * cfg.c_star;
    let ps = p.as_slice();
    let n = ps.len();
    let diagonal = half_cs2
        * ps.iter()
            .zip(k.diag_uu())
            .map(|(pj, kjj)| kjj * pj * (1.0 - pj))
            .sum::<f64>();
    let pairwise = half_cs2
        * (0..n)
            .into_par_iter()
            .map(|j| {
                let row = k.uu_row(j);
                (j + 1..n)
                    .map(|j2| row[j2] * (ps[j] + ps[j2] - 2.0 * ps[j] * ps[j2]))
                    .sum::<f64>()
            })
            .sum::<f64>();
    let (mut positive_labeled, mut negative_labeled) = (0.0, 0.0);
    for (i, &y) in k.y_labeled().iter().enumerate() {
        let row = k.k_lu().row(i);
        if y > 0.0 {
            positive_labeled += row.iter().zip(ps).map(|(kij, pj)| kij * (1.0 - pj)).sum::<f64>();
        } else {
            negative_labeled += row.iter().zip(ps).map(|(kij, pj)| kij * (pj - 1.0)).sum::<f64>();
        }
    }
    let ccs = cfg.c * cfg.c_star;
    Ok(Decomposition {
        diagonal,
        pairwise,
        positive_labeled: ccs * positive_labeled,
        negative_labeled: ccs * negative_labeled,
    })
}

/// The dual of the soft-label problem at a feasible multiplier point:
///
/// ```text
/// A'1 + (Γ+B)'1 − ½(A∘Y)'K_ll(A∘Y) − ½(Γ−B)'K_uu(Γ−B) − (A∘Y)'K_lu(Γ−B)
/// ```
pub fn dual_objective(dp: &DualPoint, p: &SoftLabels, k: &KernelBlocks, cfg: &S3vmConfig) -> Result<f64> {
    check_dims(p, k)?;
    if dp.alpha.len() != k.n_labeled() {
        return Err(Error::DimensionMismatch {
            expected: k.n_labeled(),
            found: dp.alpha.len(),
        });
    }
    dp.check_box(p, cfg.c, cfg.c_star)?;
    let ay: Vec<f64> = dp.alpha.iter().zip(k.y_labeled()).map(|(a, y)| a * y).collect();
    let diff: Vec<f64> = dp.gamma.iter().zip(&dp.beta).map(|(g, b)| g - b).collect();
    let linear: f64 = dp.alpha.iter().sum::<f64>() + dp.gamma.iter().sum::<f64>() + dp.beta.iter().sum::<f64>();
    let ll = k.k_ll().quad_form(&ay, &ay);
    let uu = k.uu_quad(&diff, &diff);
    let lu = k.k_lu().quad_form(&ay, &diff);
    Ok(linear - 0.5 * ll - 0.5 * uu - lu)
}

/// `I(w*) + C*·|U| + qp_objective(P)`.
pub fn upper_bound(p: &SoftLabels, k: &KernelBlocks, cfg: &S3vmConfig, i_wstar: f64) -> Result<f64> {
    Ok(i_wstar + cfg.c_star * k.n_unlabeled() as f64 + qp_objective(p, k, cfg)?)
}

/// Euclidean projection onto `{0 ≤ p ≤ 1, Σp = total}`.
///
/// `p_j = clamp(v_j − τ, 0, 1)` with the shift `τ` found by bisection; the
/// remaining sum error is then absorbed by coordinates with room to move.
pub fn project_capped_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let n = v.len();
    if n == 0 {
        return Vec::new();
    }
    let total = total.clamp(0.0, n as f64);
    let sum_at = |tau: f64| v.iter().map(|x| (x - tau).clamp(0.0, 1.0)).sum::<f64>();
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if sum_at(mid) > total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    let mut p: Vec<f64> = v.iter().map(|x| (x - tau).clamp(0.0, 1.0)).collect();
    let mut residual = total - p.iter().sum::<f64>();
    for pj in p.iter_mut() {
        if residual == 0.0 {
            break;
        }
        let step = if residual > 0.0 {
            residual.min(1.0 - *pj)
        } else {
            residual.max(-*pj)
        };
        *pj += step;
        residual -= step;
    }
    p
}

/// Top-`k` assignment: the `k` largest entries get `+1`, ties to the lower index.
pub fn round_to_labels(p: &SoftLabels, k: usize) -> Vec<Label> {
    let mut labels = vec![Label::Negative; p.len()];
    for j in top_k(p.as_slice(), k) {
        labels[j] = Label::Positive;
    }
    labels
}

fn top_k(p: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct QpSolution {
    pub p: SoftLabels,
    pub objective: f64,
    /// Index of the restart that produced `p`.
    pub restart: usize,
    /// Objective at each restart's starting point.
    pub start_objectives: Vec<f64>,
    pub iterations: usize,
}

/// Local minimization of [`qp_objective`] over `{0 ≤ P ≤ 1, ΣP = k}`.
///
/// Each restart draws a random feasible start, runs projected gradient with
/// step `1/(C*²‖K_uu‖∞)` (halved until the objective decreases), and finally
/// compares against the top-`k` indicator of its end point. Restarts run in
/// parallel; the lowest objective wins, ties to the earlier restart.
pub fn solve_qp(k: &KernelBlocks, cfg: &S3vmConfig) -> Result<QpSolution> {
    cfg.validate()?;
    let n = k.n_unlabeled();
    let card = cfg.cardinality(n)?;
    if card == n {
        let p = SoftLabels::constant(n, 1.0);
        let objective = qp_objective(&p, k, cfg)?;
        return Ok(QpSolution {
            p,
            objective,
            restart: 0,
            start_objectives: vec![objective],
            iterations: 0,
        });
    }
    let norm = match k.k_uu_dense() {
        Some(m) => m.norm_inf(),
        None => k.rowsum_uu().iter().cloned().fold(0.0, f64::max),
    };
    let step0 = 1.0 / (cfg.c_star * cfg.c_star * norm.max(f64::MIN_POSITIVE));
    let restarts = cfg.restarts.max(1);

    let runs: Vec<Run> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            local_descent(k, cfg, card, step0, &mut rng)
        })
        .collect();

    let start_objectives = runs.iter().map(|r| r.start_objective).collect();
    let iterations = runs.iter().map(|r| r.iterations).sum();
    let (restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.objective < a.1.objective { b } else { a })
        .expect("at least one restart");
    Ok(QpSolution {
        p: SoftLabels { p: best.p },
        objective: best.objective,
        restart,
        start_objectives,
        iterations,
    })
}

struct Run {
    p: Vec<f64>,
    objective: f64,
    start_objective: f64,
    iterations: usize,
}

fn local_descent(k: &KernelBlocks, cfg: &S3vmConfig, card: usize, step0: f64, rng: &mut ChaCha8Rng) -> Run {
    let n = k.n_unlabeled();
    let cs2 = cfg.c_star * cfg.c_star;
    let ccs = cfg.c * cfg.c_star;
    let start: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mut p = project_capped_simplex(&start, card as f64);
    let mut kp = k.uu_mul(&p);
    let mut f = objective_with(&p, &kp, k, cfg);
    let start_objective = f;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        let grad: Vec<f64> = (0..n)
            .map(|j| 0.5 * cs2 * k.rowsum_uu()[j] - cs2 * kp[j] - ccs * k.ylabelsum_lu()[j])
            .collect();
        let mut step = step0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = p.iter().zip(&grad).map(|(pj, g)| pj - step * g).collect();
            let q = project_capped_simplex(&trial, card as f64);
            let kq = k.uu_mul(&q);
            let fq = objective_with(&q, &kq, k, cfg);
            if fq < f {
                accepted = Some((q, kq, fq));
                break;
            }
            step *= 0.5;
        }
        let Some((q, kq, fq)) = accepted else { break };
        let moved = q.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let gain = f - fq;
        p = q;
        kp = kq;
        f = fq;
        if moved < cfg.tol || gain <= cfg.tol * (1.0 + f.abs()) {
            break;
        }
    }

    let vertex = SoftLabels::indicator(n, &top_k(&p, card)).p;
    let kv = k.uu_mul(&vertex);
    let fv = objective_with(&vertex, &kv, k, cfg);
    if fv <= f {
        p = vertex;
        f = fv;
    }
    Run {
        p,
        objective: f,
        start_objective,
        iterations,
    }
}

/// Exact minimum of [`qp_objective`] over binary `P` with `ΣP = card`, by
/// enumeration. Returns the minimizing positive set (first in lexicographic
/// order on ties) and its value.
pub fn enumerate_binary_min(k: &KernelBlocks, cfg: &S3vmConfig, card: usize) -> Result<(Vec<usize>, f64)> {
    let n = k.n_unlabeled();
    if n > 20 {
        return Err(Error::EnumerationTooLarge(n));
    }
    if card > n {
        return Err(Error::Cardinality { k: card, max: n });
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_subset(n, card, |set| {
        let p = SoftLabels::indicator(n, set);
        let kp = k.uu_mul(&p.p);
        let f = objective_with(&p.p, &kp, k, cfg);
        if best.as_ref().is_none_or(|(_, b)| f < *b) {
            best = Some((set.to_vec(), f));
        }
    });
    Ok(best.expect("at least the empty or full subset exists"))
}

/// Calls `visit` on every `size`-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, size: usize, mut visit: impl FnMut(&[usize])) {
    if size > n {
        return;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        visit(&idx);
        let mut i = size;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < n - size + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for t in i + 1..size {
            idx[t] = idx[t - 1] + 1;
        }
    }
}
