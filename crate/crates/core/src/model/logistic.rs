//! L2-regularized logistic regression fit by L-BFGS.

use ndarray::{Array1, ArrayView2, CowArray, Ix2};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seed;

/// Mean log-loss plus `(lambda / 2n) * |w|^2`; the bias is not penalized.
/// Parameters are laid out as `[w_0, ..., w_{d-1}, b]`.
#[derive(Debug, Clone)]
pub struct LogisticObjective<'a> {
    x: CowArray<'a, f64, Ix2>,
    t: Array1<f64>,
    lambda: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(x: ArrayView2<'a, f64>, y: &[bool], lambda: f64) -> Self {
        let t = y.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
        let x = if x.is_standard_layout() {
            CowArray::from(x)
        } else {
            CowArray::from(x.as_standard_layout().into_owned())
        };
        LogisticObjective { x, t, lambda }
    }

    pub fn n_params(&self) -> usize {
        self.x.ncols() + 1
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        self.evaluate(params, false).0
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        self.evaluate(params, true).1
    }

    pub fn value_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        self.evaluate(params, true)
    }

    fn evaluate(&self, params: &[f64], with_grad: bool) -> (f64, Vec<f64>) {
        let d = self.x.ncols();
        let n = self.x.nrows() as f64;
        let (w, b) = params.split_at(d);
        let b = b[0];
        let mut loss = 0.0;
        let mut grad = vec![0.0; if with_grad { d + 1 } else { 0 }];
        let mut resid_sum = 0.0;
        for (row, &ti) in self.x.rows().into_iter().zip(&self.t) {
            let row = row.as_slice().expect("contiguous rows");
            let zi = b + dot(row, w);
            loss += softplus(zi) - ti * zi;
            if with_grad {
                let r = sigmoid(zi) - ti;
                resid_sum += r;
                axpy(r, row, &mut grad[..d]);
            }
        }
        let wsq: f64 = w.iter().map(|v| v * v).sum();
        let value = loss / n + self.lambda / (2.0 * n) * wsq;
        if with_grad {
            for (g, wj) in grad.iter_mut().zip(w) {
                *g = *g / n + self.lambda / n * wj;
            }
            grad[d] = resid_sum / n;
        }
        (value, grad)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

const MEMORY: usize = 10;
const GRAD_TOL: f64 = 1e-6;

pub fn fit_logistic(x: ArrayView2<'_, f64>, y: &[bool], lambda: f64, max_iter: usize) -> LogisticFit {
    let obj = LogisticObjective::new(x, y, lambda);
    let p = obj.n_params();
    let mut params = vec![0.0; p];
    let (mut f, mut g) = obj.value_and_gradient(&params);
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::with_capacity(MEMORY);
    let mut iterations = 0;
    let mut converged = max_norm(&g) < GRAD_TOL;

    while !converged && iterations < max_iter {
        iterations += 1;
        let mut dir = two_loop(&g, &history);
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
        }
        let mut step = if history.is_empty() {
            1.0 / max_norm(&g).max(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = params.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (ft, gt) = obj.value_and_gradient(&trial);
            if ft <= f + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((next, fn_, gn)) = accepted else {
            break;
        };
        let s: Vec<f64> = next.iter().zip(&params).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 {
            if history.len() == MEMORY {
                history.remove(0);
            }
            history.push((s, yv, 1.0 / sy));
        }
        params = next;
        f = fn_;
        g = gn;
        converged = max_norm(&g) < GRAD_TOL;
    }

    let bias = params.pop().expect("bias parameter");
    LogisticFit {
        weights: params,
        bias,
        iterations,
        converged,
    }
}

fn two_loop(g: &[f64], history: &[(Vec<f64>, Vec<f64>, f64)]) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        axpy(-a, y, &mut q);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.last() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        axpy(a - b, s, &mut q);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Worst relative error between the analytic gradient and central differences
/// (step 1e-5) over ten standard-normal parameter points drawn from `seed`.
pub fn gradient_check(x: ArrayView2<'_, f64>, y: &[bool], lambda: f64, seed: u64) -> Result<f64> {
    if x.nrows() != y.len() {
        return Err(Error::Validation(format!(
            "{} rows for {} labels",
            x.nrows(),
            y.len()
        )));
    }
    const STEP: f64 = 1e-5;
    let obj = LogisticObjective::new(x, y, lambda);
    let mut rng = seed::rng(seed, "gradient_check");
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let point: Vec<f64> = (0..obj.n_params())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let analytic = obj.gradient(&point);
        let numeric: Vec<f64> = (0..point.len())
            .map(|j| {
                let mut hi = point.clone();
                let mut lo = point.clone();
                hi[j] += STEP;
                lo[j] -= STEP;
                (obj.value(&hi) - obj.value(&lo)) / (2.0 * STEP)
            })
            .collect();
        worst = worst.max(relative_error(&analytic, &numeric));
    }
    Ok(worst)
}

/// `|a - b| / max(|a|, |b|, 1e-8)` in the Euclidean norm.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-8)
}
