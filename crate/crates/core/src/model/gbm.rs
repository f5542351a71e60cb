//! Gradient boosting on the logistic loss with depth-limited regression trees.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::logistic::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Node 0 is the root. Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn predict(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &RegressionTree, at: usize) -> usize {
            match t.nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    /// Log-odds of the training positive rate.
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
}

impl GbmModel {
    pub fn raw_score(&self, row: ArrayView1<'_, f64>) -> f64 {
        self.init
            + self
                .trees
                .iter()
                .map(|t| self.learning_rate * t.predict(row))
                .sum::<f64>()
    }

    pub fn probability(&self, row: ArrayView1<'_, f64>) -> f64 {
        sigmoid(self.raw_score(row))
    }

    /// The model made of the first `k` stages.
    pub fn truncated(&self, k: usize) -> GbmModel {
        GbmModel {
            init: self.init,
            learning_rate: self.learning_rate,
            trees: self.trees[..k.min(self.trees.len())].to_vec(),
        }
    }
}

pub fn fit_gbm(x: ArrayView2<'_, f64>, y: &[bool], stages: usize, learning_rate: f64, max_depth: usize) -> GbmModel {
    let (n, d) = x.dim();
    let t: Vec<f64> = y.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
    let rate = t.iter().sum::<f64>() / n as f64;
    let init = (rate / (1.0 - rate)).ln();

    let sorted: Vec<Vec<(usize, f64)>> = (0..d)
        .map(|f| {
            let col = x.column(f);
            let mut pairs: Vec<(usize, f64)> = (0..n).map(|i| (i, col[i])).collect();
            pairs.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            pairs
        })
        .collect();

    let mut score = vec![init; n];
    let mut trees = Vec::with_capacity(stages);
    let mut builder = TreeBuilder {
        x,
        sorted: &sorted,
        resid: vec![0.0; n],
        hess: vec![0.0; n],
        max_depth,
    };
    for _ in 0..stages {
        for i in 0..n {
            let p = sigmoid(score[i]);
            builder.resid[i] = t[i] - p;
            builder.hess[i] = p * (1.0 - p);
        }
        let tree = builder.build();
        for (i, s) in score.iter_mut().enumerate() {
            *s += learning_rate * tree.predict(x.row(i));
        }
        trees.push(tree);
    }
    GbmModel {
        init,
        learning_rate,
        trees,
    }
}

/// Grows trees one level at a time; each level is a single pass over every
/// feature's presorted values, with running sums kept per open node.
struct TreeBuilder<'a> {
    x: ArrayView2<'a, f64>,
    sorted: &'a [Vec<(usize, f64)>],
    resid: Vec<f64>,
    hess: Vec<f64>,
    max_depth: usize,
}

#[derive(Clone, Copy)]
struct SplitChoice {
    feature: usize,
    threshold: f64,
}

const NO_SLOT: usize = usize::MAX;

impl TreeBuilder<'_> {
    fn build(&mut self) -> RegressionTree {
        let n = self.x.nrows();
        let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
        let mut node_of = vec![0usize; n];
        let mut open = vec![0usize];
        for _ in 0..self.max_depth {
            let splits = self.best_splits(&open, &node_of, nodes.len());
            let mut child_of = vec![(0, 0); nodes.len()];
            let mut next = Vec::new();
            for (&node, split) in open.iter().zip(&splits) {
                let Some(SplitChoice { feature, threshold }) = *split else {
                    continue;
                };
                let (left, right) = (nodes.len(), nodes.len() + 1);
                nodes.push(TreeNode::Leaf { value: 0.0 });
                nodes.push(TreeNode::Leaf { value: 0.0 });
                nodes[node] = TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                child_of[node] = (left, right);
                next.extend([left, right]);
            }
            if next.is_empty() {
                break;
            }
            for (i, node) in node_of.iter_mut().enumerate() {
                if let TreeNode::Split { feature, threshold, .. } = nodes[*node] {
                    let (l, r) = child_of[*node];
                    *node = if self.x[[i, feature]] <= threshold { l } else { r };
                }
            }
            open = next;
        }
        // Newton step for the logistic loss.
        let mut num = vec![0.0; nodes.len()];
        let mut den = vec![0.0; nodes.len()];
        for (i, &node) in node_of.iter().enumerate() {
            num[node] += self.resid[i];
            den[node] += self.hess[i];
        }
        for (j, node) in nodes.iter_mut().enumerate() {
            if let TreeNode::Leaf { value } = node {
                *value = if den[j].abs() < 1e-150 { 0.0 } else { num[j] / den[j] };
            }
        }
        RegressionTree { nodes }
    }

    /// Maximizes squared-error reduction on the residuals for each open node.
    /// Only strictly better candidates replace the incumbent, so ties keep the
    /// lower feature index and the lower threshold.
    fn best_splits(&self, open: &[usize], node_of: &[usize], n_nodes: usize) -> Vec<Option<SplitChoice>> {
        let k = open.len();
        let mut slot_of = vec![NO_SLOT; n_nodes];
        for (s, &node) in open.iter().enumerate() {
            slot_of[node] = s;
        }
        let mut total = vec![0.0; k];
        let mut count = vec![0usize; k];
        for (i, &node) in node_of.iter().enumerate() {
            let s = slot_of[node];
            if s != NO_SLOT {
                total[s] += self.resid[i];
                count[s] += 1;
            }
        }
        let parent: Vec<f64> = (0..k).map(|s| total[s] * total[s] / count[s] as f64).collect();
        let mut best_gain = vec![1e-12; k];
        let mut best = vec![None; k];
        let mut left_sum = vec![0.0; k];
        let mut left_n = vec![0usize; k];
        let mut prev = vec![0.0; k];
        for (f, pairs) in self.sorted.iter().enumerate() {
            left_sum.iter_mut().for_each(|v| *v = 0.0);
            left_n.iter_mut().for_each(|v| *v = 0);
            for &(i, b) in pairs {
                let s = slot_of[node_of[i]];
                if s == NO_SLOT {
                    continue;
                }
                let a = prev[s];
                if left_n[s] > 0 && a != b {
                    let nl = left_n[s] as f64;
                    let nr = count[s] as f64 - nl;
                    let right_sum = total[s] - left_sum[s];
                    let gain = left_sum[s] * left_sum[s] / nl + right_sum * right_sum / nr - parent[s];
                    if gain > best_gain[s] {
                        best_gain[s] = gain;
                        let mid = a + (b - a) / 2.0;
                        let threshold = if mid < b { mid } else { a };
                        best[s] = Some(SplitChoice { feature: f, threshold });
                    }
                }
                left_sum[s] += self.resid[i];
                left_n[s] += 1;
                prev[s] = b;
            }
        }
        best
    }
}
