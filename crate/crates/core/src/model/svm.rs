//! Linear SVM on the primal hinge objective, solved by averaged stochastic
//! subgradient steps over seeded epoch permutations.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;

use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct SvmFit {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Minimizes `(1/2)|w|^2 + C * sum(hinge)` with the bias carried as a constant
/// feature (and therefore regularized along with the weights).
pub fn fit_linear_svm(x: ArrayView2<'_, f64>, y: &[bool], c: f64, epochs: usize, seed: u64) -> SvmFit {
    let (n, d) = x.dim();
    let lambda = 1.0 / (c * n as f64);
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0; d + 1];
    let mut avg = vec![0.0; d + 1];
    let mut averaged = 0usize;
    let total = epochs.max(1) * n;
    let average_from = total / 2;
    let mut rng = seed::rng(seed, "svm_epochs");
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;

    for _ in 0..epochs.max(1) {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let yi = if y[i] { 1.0 } else { -1.0 };
            let row = x.row(i);
            let margin = yi * (row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + w[d]);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (wj, xj) in w.iter_mut().zip(row.iter()) {
                    *wj += eta * yi * xj;
                }
                w[d] += eta * yi;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
            if t > average_from {
                averaged += 1;
                let k = averaged as f64;
                for (a, v) in avg.iter_mut().zip(&w) {
                    *a += (v - *a) / k;
                }
            }
        }
    }
    let bias = avg.pop().expect("bias slot");
    SvmFit { weights: avg, bias }
}

/// `(1/2)|w|^2 + C * sum(max(0, 1 - y * score))` with the bias inside the norm.
pub fn primal_objective(x: ArrayView2<'_, f64>, y: &[bool], c: f64, fit: &SvmFit) -> f64 {
    let reg = 0.5 * (fit.weights.iter().map(|v| v * v).sum::<f64>() + fit.bias * fit.bias);
    let hinge: f64 = x
        .rows()
        .into_iter()
        .zip(y)
        .map(|(row, &yi)| {
            let s = row.iter().zip(&fit.weights).map(|(a, b)| a * b).sum::<f64>() + fit.bias;
            let yi = if yi { 1.0 } else { -1.0 };
            (1.0 - yi * s).max(0.0)
        })
        .sum();
    reg + c * hinge
}
