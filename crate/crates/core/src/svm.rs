//! Supervised linear SVM on the labeled samples.
//!
//! Minimizes `½‖w‖² + C Σ_i max(0, 1 − y_i(⟨w, x_i⟩ + b))` with a stochastic
//! subgradient method (step `1/(λt)`, `λ = 1/(C|L|)`, projection onto the ball
//! that must contain the optimum). The bias is unregularized. After every epoch
//! the averaged iterate is scored with its bias re-fitted exactly, and the best
//! candidate seen so far is kept.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataio::{Dataset, Label, SparseVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinearModel {
    /// Dense weights; entry `i` belongs to feature `i + 1`.
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearModel {
    pub fn zeros(n_features: usize) -> Self {
        LinearModel {
            w: vec![0.0; n_features],
            b: 0.0,
        }
    }

    pub fn decision(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.w) + self.b
    }

    pub fn norm_sq(&self) -> f64 {
        self.w.iter().map(|v| v * v).sum()
    }

    /// Writes `index:value` for every non-zero weight, then `b:<value>`.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, v) in self.w.iter().enumerate() {
            if *v != 0.0 {
                writeln!(out, "{}:{}", i + 1, v)?;
            }
        }
        writeln!(out, "b:{}", self.b)?;
        Ok(())
    }

    pub fn parse_text(text: &str) -> Result<LinearModel> {
        let mut entries = Vec::new();
        let mut b = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| bad(format!("expected key:value, got `{line}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| bad(format!("invalid value `{value}`")))?;
            if key == "b" {
                b = Some(value);
            } else {
                let idx: usize = key
                    .parse()
                    .ok()
                    .filter(|i| *i > 0)
                    .ok_or_else(|| bad(format!("invalid index `{key}`")))?;
                entries.push((idx, value));
            }
        }
        let b = b.ok_or(Error::Parse {
            line: text.lines().count(),
            message: "missing `b:` line".into(),
        })?;
        let n = entries.iter().map(|(i, _)| *i).max().unwrap_or(0);
        let mut w = vec![0.0; n];
        for (i, v) in entries {
            w[i - 1] = v;
        }
        Ok(LinearModel { w, b })
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SvmFit {
    pub model: LinearModel,
    /// `½‖w‖² + C Σ ζ_i` at `model`.
    pub objective: f64,
    /// Hinge losses of the labeled samples, in labeled-index order.
    pub slacks: Vec<f64>,
    /// Best objective after each epoch (non-increasing).
    pub history: Vec<f64>,
}

/// Sign of the decision value; exactly zero goes to `+1`.
pub fn predict(model: &LinearModel, x: &SparseVector) -> Label {
    if model.decision(x) >= 0.0 {
        Label::Positive
    } else {
        Label::Negative
    }
}

fn hinge(model: &LinearModel, x: &SparseVector, y: f64) -> f64 {
    (1.0 - y * model.decision(x)).max(0.0)
}

/// `½‖w‖² + C Σ_{i∈L} hinge(x_i, y_i)`.
pub fn objective_value(model: &LinearModel, data: &Dataset, c: f64) -> f64 {
    let (xs, ys) = labeled_view(data);
    primal(model, &xs, &ys, c)
}

fn primal(model: &LinearModel, xs: &[&SparseVector], ys: &[f64], c: f64) -> f64 {
    let loss: f64 = xs.iter().zip(ys).map(|(x, &y)| hinge(model, x, y)).sum();
    0.5 * model.norm_sq() + c * loss
}

fn labeled_view(data: &Dataset) -> (Vec<&SparseVector>, Vec<f64>) {
    let xs = data.labeled_idx().iter().map(|&i| data.sample(i)).collect();
    let ys = data.labeled_labels().iter().map(|l| l.value()).collect();
    (xs, ys)
}

/// Trains on the labeled part of `data`.
pub fn train_supervised(data: &Dataset, c: f64, epochs: usize, seed: u64) -> Result<SvmFit> {
    let (xs, ys) = labeled_view(data);
    train_on(&xs, &ys, data.n_features(), c, epochs, seed)
}

/// Trains on explicit samples with labels in `{+1, −1}`.
pub fn train_on(
    xs: &[&SparseVector],
    ys: &[f64],
    n_features: usize,
    c: f64,
    epochs: usize,
    seed: u64,
) -> Result<SvmFit> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C must be positive, got {c}")));
    }
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if !(ys.iter().any(|&y| y > 0.0) && ys.iter().any(|&y| y < 0.0)) {
        return Err(Error::SingleClass);
    }
    let n = xs.len();
    let n_features = n_features.max(xs.iter().map(|x| x.max_index() as usize).max().unwrap_or(0));
    let lambda = 1.0 / (c * n as f64);
    let radius = (2.0 * c * n as f64).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut cur = LinearModel::zeros(n_features);
    let mut best = refit_bias(LinearModel::zeros(n_features), xs, ys);
    let mut best_obj = primal(&best, xs, ys, c);
    let mut history = Vec::with_capacity(epochs);
    let mut t = 0usize;

    // Running average of every iterate since the start, alongside the
    // per-epoch average and the last iterate.
    let mut running = LinearModel::zeros(n_features);
    for _ in 0..epochs.max(1) {
        order.shuffle(&mut rng);
        let mut avg = LinearModel::zeros(n_features);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let violated = ys[i] * cur.decision(xs[i]) < 1.0;
            let shrink = 1.0 - eta * lambda;
            cur.w.iter_mut().for_each(|v| *v *= shrink);
            if violated {
                xs[i].add_to_dense(&mut cur.w, eta * ys[i]);
                cur.b += eta * ys[i];
            }
            let norm = cur.norm_sq().sqrt();
            if norm > radius {
                let s = radius / norm;
                cur.w.iter_mut().for_each(|v| *v *= s);
            }
            for (a, v) in avg.w.iter_mut().zip(&cur.w) {
                *a += v / n as f64;
            }
            avg.b += cur.b / n as f64;
            let weight = 1.0 / t as f64;
            for (a, v) in running.w.iter_mut().zip(&cur.w) {
                *a += (v - *a) * weight;
            }
            running.b += (cur.b - running.b) * weight;
        }
        for candidate in [avg, cur.clone(), running.clone()] {
            let candidate = refit_bias(candidate, xs, ys);
            let obj = primal(&candidate, xs, ys, c);
            if obj < best_obj {
                best_obj = obj;
                best = candidate;
            }
        }
        history.push(best_obj);
    }

    let slacks = xs.iter().zip(ys).map(|(x, &y)| hinge(&best, x, y)).collect();
    Ok(SvmFit {
        model: best,
        objective: best_obj,
        slacks,
        history,
    })
}

/// Replaces `b` by an exact minimizer of `Σ hinge` for the fixed `w`. The loss
/// is convex and piecewise linear in `b` with breakpoints `y_i − ⟨w, x_i⟩`.
fn refit_bias(mut model: LinearModel, xs: &[&SparseVector], ys: &[f64]) -> LinearModel {
    let scores: Vec<f64> = xs.iter().map(|x| x.dot_dense(&model.w)).collect();
    let loss = |b: f64| -> f64 {
        scores
            .iter()
            .zip(ys)
            .map(|(s, y)| (1.0 - y * (s + b)).max(0.0))
            .sum()
    };
    let mut best = (loss(model.b), model.b);
    for (s, y) in scores.iter().zip(ys) {
        let b = y - s;
        let l = loss(b);
        if l < best.0 {
            best = (l, b);
        }
    }
    model.b = best.1;
    model
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(points: &[(&[f64], f64)]) -> Dataset {
        let samples = points.iter().map(|(x, _)| SparseVector::from_dense(x)).collect();
        let labels = points.iter().map(|(_, y)| Label::from_value(*y)).collect();
        Dataset::new(samples, labels).unwrap()
    }

    #[test]
    fn predict_signs() {
        let m = LinearModel { w: vec![1.0], b: 0.0 };
        assert_eq!(predict(&m, &SparseVector::from_dense(&[2.0])), Label::Positive);
        assert_eq!(predict(&m, &SparseVector::from_dense(&[-2.0])), Label::Negative);
        assert_eq!(predict(&m, &SparseVector::from_dense(&[0.0])), Label::Positive);
    }

    #[test]
    fn objective_special_cases() {
        let d = data(&[(&[0.0, 1.0], -1.0), (&[1.0, 0.0], 1.0), (&[0.5, 0.5], 1.0)]);
        let zero = LinearModel::zeros(2);
        assert_eq!(objective_value(&zero, &d, 0.7), 0.7 * 3.0);
        let sep = LinearModel { w: vec![4.0, -4.0], b: 1.0 };
        assert_eq!(objective_value(&sep, &d, 0.7), 16.0);
    }

    #[test]
    fn separable_pair() {
        let d = data(&[(&[0.0], -1.0), (&[1.0], 1.0)]);
        let fit = train_supervised(&d, 100.0, 500, 3).unwrap();
        assert_eq!(predict(&fit.model, d.sample(0)), Label::Negative);
        assert_eq!(predict(&fit.model, d.sample(1)), Label::Positive);
        let boundary = -fit.model.b / fit.model.w[0];
        assert!(boundary > 0.0 && boundary < 1.0);
        // Optimum is w = 2, b = −1 with objective 2.
        assert!((fit.objective - 2.0).abs() < 0.02 * 2.0, "{}", fit.objective);
    }

    #[test]
    fn tiny_c_shrinks_weights() {
        let d = data(&[(&[0.0, 1.0], -1.0), (&[1.0, 0.2], 1.0), (&[0.9, 0.1], 1.0)]);
        let fit = train_supervised(&d, 1e-8, 50, 1).unwrap();
        assert!(fit.model.norm_sq().sqrt() < 1e-3);
    }

    #[test]
    fn slacks_and_history_are_consistent() {
        let d = data(&[(&[0.1, 0.9], -1.0), (&[0.8, 0.3], 1.0), (&[0.6, 0.7], -1.0), (&[0.7, 0.1], 1.0)]);
        let fit = train_supervised(&d, 2.0, 200, 9).unwrap();
        for (k, &i) in d.labeled_idx().iter().enumerate() {
            let y = d.ground_truth(i).value();
            assert_eq!(fit.slacks[k], (1.0 - y * fit.model.decision(d.sample(i))).max(0.0));
        }
        assert!(fit.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(fit.objective, objective_value(&fit.model, &d, 2.0));
        let again = train_supervised(&d, 2.0, 200, 9).unwrap();
        assert_eq!(again.model, fit.model);
    }

    #[test]
    fn rejects_bad_input() {
        let single = data(&[(&[0.0], 1.0), (&[1.0], 1.0)]);
        assert!(matches!(train_supervised(&single, 1.0, 10, 0), Err(Error::SingleClass)));
        let d = data(&[(&[0.0], -1.0), (&[1.0], 1.0)]);
        assert!(train_supervised(&d, 0.0, 10, 0).is_err());
    }

    #[test]
    fn model_text_round_trip() {
        let m = LinearModel {
            w: vec![0.5, 0.0, -1.25],
            b: 0.125,
        };
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "1:0.5\n3:-1.25\nb:0.125\n");
        assert_eq!(LinearModel::parse_text(std::str::from_utf8(&buf).unwrap()).unwrap(), m);
        assert!(LinearModel::parse_text("1:0.5\n").is_err());
    }
}
