//! CART regression tree grown by weighted child variance minimisation.

use rand::seq::index::sample;
use rand::Rng;

use super::{ForestConfig, Matrix};

/// Relative tolerance under which two split impurities count as tied.
pub const IMPURITY_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { value: f64 },
}

/// Nodes stored in pre-order; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub(crate) nodes: Vec<Node>,
}

/// A chosen split: sum of child squared deviations and where to cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub impurity: f64,
}

impl RegressionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn leaf(value: f64) -> Self {
        RegressionTree { nodes: vec![Node::Leaf { value }] }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Internal { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((i, d)) = stack.pop() {
            max = max.max(d);
            if let Node::Internal { left, right, .. } = self.nodes[i] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        max
    }

    /// Grows a tree on the rows listed in `rows` (repeats allowed, as in a
    /// bootstrap sample). `rng` drives per-split feature subsampling.
    pub fn grow<R: Rng>(x: &Matrix, y: &[f64], rows: Vec<usize>, config: &ForestConfig, rng: &mut R) -> Self {
        struct Task {
            lo: usize,
            hi: usize,
            depth: usize,
            parent: Option<(usize, bool)>,
        }

        let mut rows = rows;
        let mut nodes: Vec<Node> = Vec::new();
        let mut finder = SplitFinder::default();
        let mut stack = vec![Task { lo: 0, hi: rows.len(), depth: 0, parent: None }];

        while let Some(task) = stack.pop() {
            let id = nodes.len();
            if let Some((p, is_left)) = task.parent {
                if let Node::Internal { left, right, .. } = &mut nodes[p] {
                    if is_left {
                        *left = id;
                    } else {
                        *right = id;
                    }
                }
            }
            let slice = &mut rows[task.lo..task.hi];
            let stop = slice.len() < config.min_samples_split
                || config.max_depth.is_some_and(|m| task.depth >= m)
                || is_constant(y, slice);
            let split = if stop {
                None
            } else {
                let features = sample_features(x.n_cols(), config.max_features_per_split, rng);
                finder.best(x, y, slice, &features, config.min_samples_leaf)
            };
            match split {
                None => nodes.push(Node::Leaf { value: leaf_value(y, slice) }),
                Some(s) => {
                    let n_left = partition(slice, |r| x.get(r, s.feature) <= s.threshold);
                    nodes.push(Node::Internal { feature: s.feature, threshold: s.threshold, left: 0, right: 0 });
                    let mid = task.lo + n_left;
                    stack.push(Task { lo: mid, hi: task.hi, depth: task.depth + 1, parent: Some((id, false)) });
                    stack.push(Task { lo: task.lo, hi: mid, depth: task.depth + 1, parent: Some((id, true)) });
                }
            }
        }
        RegressionTree { nodes }
    }
}

fn sample_features<R: Rng>(d: usize, k: usize, rng: &mut R) -> Vec<usize> {
    if k >= d {
        return (0..d).collect();
    }
    let mut f = sample(rng, d, k).into_vec();
    f.sort_unstable();
    f
}

fn is_constant(y: &[f64], rows: &[usize]) -> bool {
    let first = y[rows[0]];
    rows.iter().all(|&r| y[r] == first)
}

/// Mean of the routed targets, kept inside their range despite rounding.
fn leaf_value(y: &[f64], rows: &[usize]) -> f64 {
    if is_constant(y, rows) {
        return y[rows[0]];
    }
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &r in rows {
        lo = lo.min(y[r]);
        hi = hi.max(y[r]);
        sum += y[r];
    }
    (sum / rows.len() as f64).clamp(lo, hi)
}

/// Stable-enough in-place partition; returns the size of the `true` prefix.
fn partition(rows: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut k = 0;
    for i in 0..rows.len() {
        if pred(rows[i]) {
            rows.swap(i, k);
            k += 1;
        }
    }
    k
}

/// Midpoint between two consecutive distinct values, guaranteed to satisfy
/// `a <= m < b`.
pub fn midpoint(a: f64, b: f64) -> f64 {
    let m = (a + b) / 2.0;
    let m = if m.is_finite() { m } else { a / 2.0 + b / 2.0 };
    if m < b && m >= a {
        m
    } else {
        a
    }
}

#[derive(Default)]
struct SplitFinder {
    buf: Vec<(f64, f64)>,
}

impl SplitFinder {
    /// Scans every candidate threshold of every listed feature (ascending).
    /// A candidate replaces the incumbent only when it is better by more
    /// than the tie tolerance, so ties keep the lower feature index and
    /// then the lower threshold.
    fn best(&mut self, x: &Matrix, y: &[f64], rows: &[usize], features: &[usize], min_leaf: usize) -> Option<Split> {
        let n = rows.len();
        if n < 2 * min_leaf {
            return None;
        }
        let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / n as f64;
        let total: f64 = rows.iter().map(|&r| (y[r] - mean) * (y[r] - mean)).sum();
        let tol = IMPURITY_TIE_TOL * (1.0 + total);
        let mut best: Option<Split> = None;

        for &f in features {
            self.buf.clear();
            self.buf.extend(rows.iter().map(|&r| (x.get(r, f), y[r] - mean)));
            let (lo, hi) = self
                .buf
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
            if lo == hi {
                continue;
            }
            self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

            let sum_all: f64 = self.buf.iter().map(|p| p.1).sum();
            let sq_all: f64 = self.buf.iter().map(|p| p.1 * p.1).sum();
            let (mut sum_l, mut sq_l) = (0.0, 0.0);
            for i in 0..n - 1 {
                let (xi, yi) = self.buf[i];
                sum_l += yi;
                sq_l += yi * yi;
                let n_l = i + 1;
                let n_r = n - n_l;
                let next = self.buf[i + 1].0;
                if xi == next || n_l < min_leaf || n_r < min_leaf {
                    continue;
                }
                let sum_r = sum_all - sum_l;
                let sq_r = sq_all - sq_l;
                let sse_l = (sq_l - sum_l * sum_l / n_l as f64).max(0.0);
                let sse_r = (sq_r - sum_r * sum_r / n_r as f64).max(0.0);
                let impurity = sse_l + sse_r;
                if best.is_none_or(|b| impurity < b.impurity - tol) {
                    best = Some(Split { feature: f, threshold: midpoint(xi, next), impurity });
                }
            }
        }
        best
    }
}

/// Best root split over all features, as [`RegressionTree::grow`] would
/// choose it. Exposed for verification.
pub fn best_split(x: &Matrix, y: &[f64], min_samples_leaf: usize) -> Option<Split> {
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    let features: Vec<usize> = (0..x.n_cols()).collect();
    SplitFinder::default().best(x, y, &rows, &features, min_samples_leaf)
}
