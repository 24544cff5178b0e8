//! L2-regularised multinomial logistic regression.
//!
//! Minimises
//!
//! ```text
//! J(W, b) = 1/N Σ_i −log softmax(W x_i + b)[y_i]  +  ‖W‖²_F / (2 C N)
//! ```
//!
//! by full-batch descent from zero. Search directions come from a
//! limited-memory quasi-Newton (L-BFGS) estimate built from past gradients,
//! and every step is halved until the Armijo sufficient decrease condition
//! holds, so the objective never increases. The bias is not regularised.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const LBFGS_MEMORY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    /// Inverse regularisation strength `C`.
    pub c_reg: f64,
    pub max_iters: usize,
    /// Stop once the max-norm of the gradient falls to this value.
    pub tol: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            c_reg: 15.0,
            max_iters: 500,
            tol: 1e-6,
        }
    }
}

impl TrainOptions {
    pub fn with_c_reg(c_reg: f64) -> Self {
        Self {
            c_reg,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_reg > 0.0 && self.c_reg.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "c_reg must be positive, got {}",
                self.c_reg
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidParams("max_iters must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Softmax classifier: `n_classes × n_dims` weights (row-major) and one
/// bias per class.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    weights: Vec<f64>,
    biases: Vec<f64>,
    n_dims: usize,
}

/// Optimiser outcome. Hitting `max_iters` is not an error; `converged`
/// records whether the gradient tolerance was met.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub iterations: usize,
    pub converged: bool,
    pub grad_max_norm: f64,
    /// Objective at the start and after every accepted step.
    pub loss_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl LogRegModel {
    pub fn new(weights: Vec<f64>, biases: Vec<f64>, n_dims: usize) -> Result<Self> {
        let k = biases.len();
        if k < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least 2 classes, got {k}"
            )));
        }
        if n_dims == 0 || weights.len() != k * n_dims {
            return Err(Error::DimensionMismatch {
                expected: k * n_dims,
                actual: weights.len(),
            });
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self {
            weights,
            biases,
            n_dims,
        })
    }

    pub fn zeros(n_classes: usize, n_dims: usize) -> Result<Self> {
        Self::new(vec![0.0; n_classes * n_dims], vec![0.0; n_classes], n_dims)
    }

    pub fn n_classes(&self) -> usize {
        self.biases.len()
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    fn check_dims(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_dims {
            return Err(Error::DimensionMismatch {
                expected: self.n_dims,
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(x)?;
        let mut out = vec![0.0; self.n_classes()];
        self.proba_into(x, &mut out);
        Ok(out)
    }

    /// Class probabilities written into `out`; no dimension check.
    pub(crate) fn proba_into(&self, x: &[f64], out: &mut [f64]) {
        logits_into(&self.weights, &self.biases, x, out);
        softmax_in_place(out);
    }

    /// Most probable class, lowest id on ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }

    pub fn predict_all(&self, m: &FeatureMatrix) -> Result<Vec<usize>> {
        self.check_dims(m.row(0))?;
        let mut buf = vec![0.0; self.n_classes()];
        Ok(m.rows()
            .map(|row| {
                self.proba_into(row, &mut buf);
                argmax(&buf)
            })
            .collect())
    }
}

/// Index of the first maximum.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[inline]
fn logits_into(weights: &[f64], biases: &[f64], x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for (c, z) in out.iter_mut().enumerate() {
        let w = &weights[c * d..(c + 1) * d];
        *z = biases[c] + dot(w, x);
    }
}

/// Max-subtracted softmax; returns log-sum-exp of the input logits.
#[inline]
fn softmax_in_place(z: &mut [f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
    max + sum.ln()
}

#[inline]
fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Objective over a flat parameter vector `[W | b]`.
struct Objective<'a> {
    x: &'a FeatureMatrix,
    y: &'a [usize],
    k: usize,
    reg: f64,
}

impl Objective<'_> {
    fn split<'p>(&self, theta: &'p [f64]) -> (&'p [f64], &'p [f64]) {
        theta.split_at(self.k * self.x.n_dims())
    }

    fn penalty(&self, w: &[f64]) -> f64 {
        0.5 * self.reg * w.iter().map(|v| v * v).sum::<f64>()
    }

    fn loss(&self, theta: &[f64], z: &mut [f64]) -> f64 {
        let (w, b) = self.split(theta);
        let mut total = 0.0;
        for (row, &label) in self.x.rows().zip(self.y) {
            logits_into(w, b, row, z);
            total += log_sum_exp(z) - z[label];
        }
        total / self.y.len() as f64 + self.penalty(w)
    }

    fn loss_grad(&self, theta: &[f64], grad: &mut [f64], z: &mut [f64]) -> f64 {
        let d = self.x.n_dims();
        let (w, b) = self.split(theta);
        grad.fill(0.0);
        let (gw, gb) = grad.split_at_mut(self.k * d);
        let mut total = 0.0;
        for (row, &label) in self.x.rows().zip(self.y) {
            logits_into(w, b, row, z);
            let zy = z[label];
            total += softmax_in_place(z) - zy;
            z[label] -= 1.0;
            for (c, &p) in z.iter().enumerate() {
                gb[c] += p;
                for (g, &xv) in gw[c * d..(c + 1) * d].iter_mut().zip(row) {
                    *g += p * xv;
                }
            }
        }
        let inv_n = 1.0 / self.y.len() as f64;
        for (g, &wv) in gw.iter_mut().zip(w) {
            *g = *g * inv_n + self.reg * wv;
        }
        gb.iter_mut().for_each(|g| *g *= inv_n);
        total * inv_n + self.penalty(w)
    }
}

fn check_problem(x: &FeatureMatrix, y: &[usize], n_classes: usize) -> Result<()> {
    if y.len() != x.n_samples() {
        return Err(Error::LengthMismatch {
            left: x.n_samples(),
            right: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= n_classes) {
        return Err(Error::Validation(format!(
            "label {bad} out of range for {n_classes} classes"
        )));
    }
    Ok(())
}

/// Objective value and gradient at `(weights, biases)`.
pub fn loss_and_gradient(
    weights: &[f64],
    biases: &[f64],
    x: &FeatureMatrix,
    y: &[usize],
    c_reg: f64,
) -> Result<(f64, Gradient)> {
    let k = biases.len();
    if weights.len() != k * x.n_dims() {
        return Err(Error::DimensionMismatch {
            expected: k * x.n_dims(),
            actual: weights.len(),
        });
    }
    check_problem(x, y, k)?;
    let obj = Objective {
        x,
        y,
        k,
        reg: 1.0 / (c_reg * y.len() as f64),
    };
    let theta = [weights, biases].concat();
    let mut grad = vec![0.0; theta.len()];
    let loss = obj.loss_grad(&theta, &mut grad, &mut vec![0.0; k]);
    let biases = grad.split_off(weights.len());
    Ok((
        loss,
        Gradient {
            weights: grad,
            biases,
        },
    ))
}

pub fn train(
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
    opts: &TrainOptions,
) -> Result<LogRegModel> {
    train_with_report(x, y, n_classes, opts).map(|(m, _)| m)
}

pub fn train_with_report(
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
    opts: &TrainOptions,
) -> Result<(LogRegModel, TrainReport)> {
    opts.validate()?;
    if n_classes < 2 {
        return Err(Error::InvalidParams(format!(
            "need at least 2 classes, got {n_classes}"
        )));
    }
    check_problem(x, y, n_classes)?;
    let mut present = vec![false; n_classes];
    y.iter().for_each(|&l| present[l] = true);
    if let Some(missing) = present.iter().position(|p| !p) {
        return Err(Error::MissingClass(missing));
    }

    let d = x.n_dims();
    let obj = Objective {
        x,
        y,
        k: n_classes,
        reg: 1.0 / (opts.c_reg * y.len() as f64),
    };
    let dim = n_classes * (d + 1);
    let mut z = vec![0.0; n_classes];
    let mut theta = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut loss = obj.loss_grad(&theta, &mut grad, &mut z);
    let mut cand = vec![0.0; dim];
    let mut cand_grad = vec![0.0; dim];
    let mut dir = vec![0.0; dim];
    let mut history = History::new(LBFGS_MEMORY);
    let mut trace = vec![loss];
    let mut iterations = 0;
    let mut grad_norm = max_norm(&grad);

    while grad_norm > opts.tol && iterations < opts.max_iters {
        history.direction(&grad, &mut dir);
        let mut slope = dot(&grad, &dir);
        if slope.is_nan() || slope >= 0.0 {
            history.clear();
            history.direction(&grad, &mut dir);
            slope = dot(&grad, &dir);
        }
        let mut step = if history.is_empty() {
            (1.0 / dot(&grad, &grad).sqrt()).min(1.0)
        } else {
            1.0
        };
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            for ((c, t), p) in cand.iter_mut().zip(&theta).zip(&dir) {
                *c = t + step * p;
            }
            if obj.loss(&cand, &mut z) <= loss + ARMIJO * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            if history.is_empty() {
                // no representable decrease left along the gradient
                break;
            }
            history.clear();
            continue;
        }
        let new_loss = obj.loss_grad(&cand, &mut cand_grad, &mut z);
        history.push(
            cand.iter().zip(&theta).map(|(a, b)| a - b).collect(),
            cand_grad.iter().zip(&grad).map(|(a, b)| a - b).collect(),
        );
        std::mem::swap(&mut theta, &mut cand);
        std::mem::swap(&mut grad, &mut cand_grad);
        loss = new_loss;
        trace.push(loss);
        grad_norm = max_norm(&grad);
        iterations += 1;
    }

    let biases = theta.split_off(n_classes * d);
    let model = LogRegModel::new(theta, biases, d)?;
    Ok((
        model,
        TrainReport {
            iterations,
            converged: grad_norm <= opts.tol,
            grad_max_norm: grad_norm,
            loss_trace: trace,
        },
    ))
}

/// Limited-memory inverse-Hessian approximation built from recent steps.
struct History {
    cap: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    alphas: Vec<f64>,
}

impl History {
    fn new(cap: usize) -> Self {
        Self {
            cap,
            pairs: VecDeque::with_capacity(cap),
            alphas: vec![0.0; cap],
        }
    }

    fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Keeps the pair only if it has positive curvature.
    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if sy <= 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() || sy <= 0.0 {
            return;
        }
        if self.pairs.len() == self.cap {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// Two-loop recursion: `out = -H g`.
    fn direction(&mut self, grad: &[f64], out: &mut [f64]) {
        out.copy_from_slice(grad);
        for (i, (s, y, rho)) in self.pairs.iter().enumerate().rev() {
            let a = rho * dot(s, out);
            self.alphas[i] = a;
            out.iter_mut().zip(y).for_each(|(q, yv)| *q -= a * yv);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            out.iter_mut().for_each(|q| *q *= gamma);
        }
        for (i, (s, y, rho)) in self.pairs.iter().enumerate() {
            let b = rho * dot(y, out);
            let a = self.alphas[i];
            out.iter_mut().zip(s).for_each(|(r, sv)| *r += (a - b) * sv);
        }
        out.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Dot product with four independent accumulators.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ac, ar) = a.split_at(a.len() & !3);
    let (bc, br) = b.split_at(ac.len());
    for (x, y) in ac.chunks_exact(4).zip(bc.chunks_exact(4)) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ar.iter().zip(br).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
