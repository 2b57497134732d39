//! Exhaustive search over axis-aligned trees of depth at most two.
//!
//! Depth two: every root split is visited in a forward and a backward sweep
//! over the root feature's sorted distinct values. Each sweep inserts units
//! into one prefix-extremum segment tree per feature, keyed by the unit's
//! distinct-value rank in that feature, so the best depth-one subtree of the
//! units seen so far is read off the segment-tree roots in O(p). The whole
//! search costs O(p^2 n log n).

use serde::{Deserialize, Serialize};

use super::ScoreTable;
use crate::data::Action;
use crate::learners::Matrix;
use crate::policy::{PolicyError, ScoreFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "node")]
pub enum TreeNode {
    Leaf {
        action: Action,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn decide(&self, x: &[f64]) -> Action {
        match self {
            TreeNode::Leaf { action } => *action,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.decide(x)
                } else {
                    right.decide(x)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreePolicy {
    pub root: TreeNode,
    /// `sum_i gamma_{d(x_i)}(i)` over the training units.
    pub objective: f64,
}

impl ScoreFunction for TreePolicy {
    fn score(&self, x: &[f64]) -> f64 {
        self.root.decide(x).sign()
    }

    fn export(&self) -> serde_json::Value {
        serde_json::json!({ "scorer": "policy_tree", "tree": self })
    }
}

/// Per-feature sort order and distinct-value ranks.
struct Columns {
    order: Vec<Vec<usize>>,
    rank: Vec<Vec<usize>>,
    values: Vec<Vec<f64>>,
}

impl Columns {
    fn new(x: &Matrix) -> Columns {
        let (n, p) = (x.rows(), x.cols());
        let mut order = Vec::with_capacity(p);
        let mut rank = Vec::with_capacity(p);
        let mut values = Vec::with_capacity(p);
        for k in 0..p {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| x.row(a)[k].total_cmp(&x.row(b)[k]).then(a.cmp(&b)));
            let mut r = vec![0; n];
            let mut vals: Vec<f64> = Vec::new();
            for &i in &idx {
                let v = x.row(i)[k];
                if vals.last() != Some(&v) {
                    vals.push(v);
                }
                r[i] = vals.len() - 1;
            }
            order.push(idx);
            rank.push(r);
            values.push(vals);
        }
        Columns { order, rank, values }
    }

    fn threshold(&self, k: usize, lo_rank: usize, hi_rank: usize) -> f64 {
        let (lo, hi) = (self.values[k][lo_rank], self.values[k][hi_rank]);
        let mid = 0.5 * (lo + hi);
        // adjacent floats: fall back to the lower value so `hi` still goes right
        if mid < hi { mid } else { lo }
    }
}

/// Prefix-sum extremes over ranks: every node keeps its total and the
/// largest and smallest sum over prefixes that end inside it.
struct PrefixTree {
    size: usize,
    sum: Vec<f64>,
    max: Vec<f64>,
    min: Vec<f64>,
}

impl PrefixTree {
    fn new(m: usize) -> PrefixTree {
        let size = m.next_power_of_two();
        PrefixTree {
            size,
            sum: vec![0.0; 2 * size],
            max: vec![0.0; 2 * size],
            min: vec![0.0; 2 * size],
        }
    }

    fn reset(&mut self) {
        self.sum.fill(0.0);
        self.max.fill(0.0);
        self.min.fill(0.0);
    }

    fn add(&mut self, pos: usize, v: f64) {
        let mut i = pos + self.size;
        self.sum[i] += v;
        self.max[i] = self.sum[i];
        self.min[i] = self.sum[i];
        i /= 2;
        while i >= 1 {
            let (l, r) = (2 * i, 2 * i + 1);
            self.sum[i] = self.sum[l] + self.sum[r];
            self.max[i] = self.max[l].max(self.sum[l] + self.max[r]);
            self.min[i] = self.min[l].min(self.sum[l] + self.min[r]);
            i /= 2;
        }
    }
}

struct Search<'a> {
    cols: Columns,
    scores: &'a ScoreTable,
    eps: f64,
}

fn leaf(plus: f64, minus: f64) -> (f64, TreeNode) {
    if plus > minus {
        (plus, TreeNode::Leaf { action: Action::Plus })
    } else {
        (minus, TreeNode::Leaf { action: Action::Minus })
    }
}

impl Search<'_> {
    fn delta(&self, i: usize) -> f64 {
        self.scores.gamma_plus[i] - self.scores.gamma_minus[i]
    }

    /// Best tree of depth at most one on `units`, by direct summation.
    fn depth_one(&self, units: &[usize]) -> (f64, TreeNode) {
        let g = self.scores;
        let tp: f64 = units.iter().map(|&i| g.gamma_plus[i]).sum();
        let tm: f64 = units.iter().map(|&i| g.gamma_minus[i]).sum();
        let mut best = leaf(tp, tm);
        let mut sorted = units.to_vec();
        for k in 0..self.cols.rank.len() {
            let rank = &self.cols.rank[k];
            sorted.sort_by_key(|&i| (rank[i], i));
            let (mut lp, mut lm) = (0.0, 0.0);
            for w in 0..sorted.len().saturating_sub(1) {
                let i = sorted[w];
                lp += g.gamma_plus[i];
                lm += g.gamma_minus[i];
                let next = sorted[w + 1];
                if rank[next] == rank[i] {
                    continue;
                }
                let threshold = self.cols.threshold(k, rank[i], rank[next]);
                for (left, right, value) in [
                    (Action::Minus, Action::Plus, lm + (tp - lp)),
                    (Action::Plus, Action::Minus, lp + (tm - lm)),
                ] {
                    if value > best.0 + self.eps {
                        best = (
                            value,
                            TreeNode::Split {
                                feature: k,
                                threshold,
                                left: Box::new(TreeNode::Leaf { action: left }),
                                right: Box::new(TreeNode::Leaf { action: right }),
                            },
                        );
                    }
                }
            }
        }
        best
    }

    /// Best depth-at-most-one value of the units on one side of every root
    /// boundary of feature `j`, sweeping in `order`. Entry `b` covers the
    /// first `b + 1` distinct-value groups visited.
    fn sweep(&self, order: impl Iterator<Item = usize>, j: usize, trees: &mut [PrefixTree], out: &mut Vec<f64>) {
        for t in trees.iter_mut() {
            t.reset();
        }
        out.clear();
        let rank_j = &self.cols.rank[j];
        let (mut tp, mut tm) = (0.0, 0.0);
        let mut current: Option<usize> = None;
        let best_of = |tp: f64, tm: f64, trees: &[PrefixTree]| {
            trees
                .iter()
                .map(|t| (tm + t.max[1]).max(tp - t.min[1]))
                .fold(tp.max(tm), f64::max)
        };
        for i in order {
            if current.is_some_and(|r| r != rank_j[i]) {
                out.push(best_of(tp, tm, trees));
            }
            current = Some(rank_j[i]);
            tp += self.scores.gamma_plus[i];
            tm += self.scores.gamma_minus[i];
            let d = self.delta(i);
            for (k, t) in trees.iter_mut().enumerate() {
                t.add(self.cols.rank[k][i], d);
            }
        }
    }

    fn depth_two(&self, n: usize) -> TreeNode {
        let g = self.scores;
        let tp: f64 = g.gamma_plus.iter().sum();
        let tm: f64 = g.gamma_minus.iter().sum();
        let p = self.cols.rank.len();
        let mut trees: Vec<PrefixTree> = self.cols.values.iter().map(|v| PrefixTree::new(v.len())).collect();
        let (mut fwd, mut bwd) = (Vec::new(), Vec::new());
        let mut best_value = tp.max(tm);
        let mut best_split: Option<(usize, usize)> = None;
        for j in 0..p {
            let order = &self.cols.order[j];
            self.sweep(order.iter().copied(), j, &mut trees, &mut fwd);
            self.sweep(order.iter().rev().copied(), j, &mut trees, &mut bwd);
            let boundaries = fwd.len();
            debug_assert_eq!(boundaries, bwd.len());
            for b in 0..boundaries {
                // forward entry b: groups 0..=b; backward entry covering groups b+1..
                let value = fwd[b] + bwd[boundaries - 1 - b];
                if value > best_value + self.eps {
                    best_value = value;
                    best_split = Some((j, b));
                }
            }
        }
        let Some((j, b)) = best_split else {
            return leaf(tp, tm).1;
        };
        // group b of feature j is the (b)-th distinct value present, which is
        // rank b since all units are present at the root
        let rank = &self.cols.rank[j];
        let (left, right): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| rank[i] <= b);
        TreeNode::Split {
            feature: j,
            threshold: self.cols.threshold(j, b, b + 1),
            left: Box::new(self.depth_one(&left).1),
            right: Box::new(self.depth_one(&right).1),
        }
    }
}

/// Exact maximizer of `sum_i gamma_{d(x_i)}(i)` over trees of depth at most
/// `depth` (1 or 2) with thresholds at midpoints of adjacent observed values.
/// Ties prefer, in order: fewer splits at the node, lower feature index,
/// lower threshold, and `-1` on the left.
pub fn fit_policy_tree(x: &Matrix, scores: &ScoreTable, depth: usize) -> Result<TreePolicy, PolicyError> {
    if !(1..=2).contains(&depth) {
        return Err(PolicyError::Config(format!("policy tree depth must be 1 or 2, got {depth}")));
    }
    let n = x.rows();
    if scores.len() != n || scores.gamma_minus.len() != n {
        return Err(PolicyError::LengthMismatch(n, scores.len()));
    }
    if n < 2 {
        return Err(PolicyError::Config(format!("policy tree needs at least 2 units, got {n}")));
    }
    if scores.gamma_plus.iter().chain(&scores.gamma_minus).any(|v| !v.is_finite()) {
        return Err(PolicyError::Config("non-finite policy-tree score".into()));
    }
    let scale: f64 = scores.gamma_plus.iter().chain(&scores.gamma_minus).map(|v| v.abs()).sum();
    let search = Search {
        cols: Columns::new(x),
        scores,
        eps: 1e-12 * scale,
    };
    let root = if depth == 1 {
        let all: Vec<usize> = (0..n).collect();
        search.depth_one(&all).1
    } else {
        search.depth_two(n)
    };
    let objective = (0..n).map(|i| scores.gamma(i, root.decide(x.row(i)))).sum();
    Ok(TreePolicy { root, objective })
}
