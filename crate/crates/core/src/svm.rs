//! One-vs-rest linear SVM trained by primal stochastic subgradient descent.
//!
//! Each binary problem minimizes
//! `λ/2 ‖(w, b)‖² + (1/M) Σ_m max(0, 1 − y_m (w·x_m + b))` with `λ = 1/(c·M)`
//! and step `1/(λ t)`. Inputs are rescaled by `1 / max_m ‖x_m‖` before
//! training (the scale is folded back into the stored weights), the bias is
//! treated as a regularized constant feature, and after every epoch the
//! iterate with the lowest full objective so far is kept.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::mlda::class_indices;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmConfig {
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { c: 1.0, epochs: 100 }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c.is_nan() || self.c <= 0.0 {
            return Err(Error::InvalidConfig("svm c must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("svm epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvmModel {
    /// Class labels in inventory order; row `k` of `weights` scores `classes[k]`.
    pub classes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub config: SvmConfig,
    pub seed: u64,
}

impl LinearSvmModel {
    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn scores(&self, feature: &[f64]) -> Result<Vec<f64>> {
        if feature.len() != self.dim() {
            return Err(Error::dims(format!(
                "feature has length {}, model expects {}",
                feature.len(),
                self.dim()
            )));
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, feature) + b)
            .collect())
    }

    /// Label of the highest score; the earliest class in inventory order wins ties.
    pub fn predict(&self, feature: &[f64]) -> Result<usize> {
        let scores = self.scores(feature)?;
        let mut best = 0;
        for (k, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = k;
            }
        }
        Ok(self.classes[best])
    }

    /// Fraction of exact label matches.
    pub fn accuracy(&self, features: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
        if features.is_empty() {
            return Err(Error::Empty("accuracy of an empty set".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::dims(format!(
                "{} features, {} labels",
                features.len(),
                labels.len()
            )));
        }
        let mut hits = 0usize;
        for (f, &l) in features.iter().zip(labels) {
            if self.predict(f)? == l {
                hits += 1;
            }
        }
        Ok(hits as f64 / features.len() as f64)
    }
}

pub fn accuracy(model: &LinearSvmModel, features: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    model.accuracy(features, labels)
}

fn class_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct Binary {
    w: Vec<f64>,
    b: f64,
    trace: Vec<f64>,
}

fn objective(xs: &[Vec<f64>], ys: &[f64], w: &[f64], b: f64, lambda: f64) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (1.0 - y * (dot(w, x) + b)).max(0.0))
        .sum();
    0.5 * lambda * (dot(w, w) + b * b) + hinge / xs.len() as f64
}

fn train_binary(xs: &[Vec<f64>], ys: &[f64], lambda: f64, epochs: usize, seed: u64) -> Binary {
    let d = xs[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut best_obj = objective(xs, ys, &w, b, lambda);
    let mut best_w = w.clone();
    let mut best_b = b;
    let mut trace = Vec::with_capacity(epochs);
    let radius2 = 1.0 / lambda;
    let mut t = 0u64;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let step = 1.0 / (lambda * t as f64);
            let margin = ys[i] * (dot(&w, &xs[i]) + b);
            let shrink = 1.0 - step * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            b *= shrink;
            if margin < 1.0 {
                let g = step * ys[i];
                w.iter_mut().zip(&xs[i]).for_each(|(v, x)| *v += g * x);
                b += g;
            }
            let n2 = dot(&w, &w) + b * b;
            if n2 > radius2 {
                let s = (radius2 / n2).sqrt();
                w.iter_mut().for_each(|v| *v *= s);
                b *= s;
            }
        }
        let obj = objective(xs, ys, &w, b, lambda);
        if obj < best_obj {
            best_obj = obj;
            best_w.clone_from(&w);
            best_b = b;
        }
        trace.push(best_obj);
    }
    Binary {
        w: best_w,
        b: best_b,
        trace,
    }
}

/// Trains one binary SVM per class; returns the model and, per class, the
/// best-so-far objective after each epoch.
pub fn train_linear_svm_traced(
    features: &[Vec<f64>],
    labels: &[usize],
    cfg: &SvmConfig,
    seed: u64,
) -> Result<(LinearSvmModel, Vec<Vec<f64>>)> {
    cfg.validate()?;
    if features.len() != labels.len() {
        return Err(Error::dims(format!(
            "{} features, {} labels",
            features.len(),
            labels.len()
        )));
    }
    if features.len() < 2 {
        return Err(Error::DegenerateClasses("need at least 2 training samples".into()));
    }
    let d = features[0].len();
    if d == 0 || features.iter().any(|f| f.len() != d) {
        return Err(Error::dims("features must share a positive length"));
    }
    let (classes, idx) = class_indices(labels);
    if classes.len() < 2 {
        return Err(Error::DegenerateClasses(format!(
            "need at least 2 classes, found {}",
            classes.len()
        )));
    }
    let max_norm = features.iter().map(|f| dot(f, f).sqrt()).fold(0.0, f64::max);
    let scale = if max_norm > 0.0 { 1.0 / max_norm } else { 1.0 };
    let xs: Vec<Vec<f64>> = features
        .iter()
        .map(|f| f.iter().map(|v| v * scale).collect())
        .collect();
    let lambda = 1.0 / (cfg.c * xs.len() as f64);

    let solved: Vec<Binary> = (0..classes.len())
        .into_par_iter()
        .map(|k| {
            let ys: Vec<f64> = idx.iter().map(|&c| if c == k { 1.0 } else { -1.0 }).collect();
            train_binary(&xs, &ys, lambda, cfg.epochs, class_seed(seed, k))
        })
        .collect();

    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    let mut traces = Vec::with_capacity(classes.len());
    for s in solved {
        weights.push(s.w.into_iter().map(|v| v * scale).collect());
        biases.push(s.b);
        traces.push(s.trace);
    }
    Ok((
        LinearSvmModel {
            classes,
            weights,
            biases,
            config: *cfg,
            seed,
        },
        traces,
    ))
}

pub fn train_linear_svm(features: &[Vec<f64>], labels: &[usize], cfg: &SvmConfig, seed: u64) -> Result<LinearSvmModel> {
    train_linear_svm_traced(features, labels, cfg, seed).map(|(m, _)| m)
}
