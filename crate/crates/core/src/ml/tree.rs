//! Binary CART trees: Gini classification trees for the forest and
//! squared-error regression trees with Newton leaves for boosting.

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use super::preprocess::FeatureMatrix;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features examined per split; `None` means all.
    pub mtry: Option<usize>,
}

/// Split gain is `split_score(left, right) - node_score(parent)`.
trait Criterion {
    fn node_score(&self, s: &Stats) -> f64;
    fn split_score(&self, left: &Stats, right: &Stats) -> f64 {
        self.node_score(left) + self.node_score(right)
    }
    fn leaf_value(&self, stats: &Stats) -> f64;
    fn is_pure(&self, stats: &Stats) -> bool;
}

/// Running sums over a set of rows: count, sum of targets, sum of squared
/// targets (or hessians for boosting).
#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    n: f64,
    s1: f64,
    s2: f64,
}

impl Stats {
    fn add(&mut self, a: f64, b: f64) {
        self.n += 1.0;
        self.s1 += a;
        self.s2 += b;
    }

    fn minus(&self, o: &Stats) -> Stats {
        Stats {
            n: self.n - o.n,
            s1: self.s1 - o.s1,
            s2: self.s2 - o.s2,
        }
    }
}

/// Gini criterion; `s1` counts positives.
struct Gini;

impl Criterion for Gini {
    /// Negative weighted Gini impurity, up to the constant 2.
    fn node_score(&self, s: &Stats) -> f64 {
        if s.n == 0.0 {
            0.0
        } else {
            -s.s1 * (s.n - s.s1) / s.n
        }
    }

    fn leaf_value(&self, s: &Stats) -> f64 {
        s.s1 / s.n
    }

    fn is_pure(&self, s: &Stats) -> bool {
        s.s1 == 0.0 || s.s1 == s.n
    }
}

/// Squared error on gradients, Newton leaf `sum g / sum h`; `s1` sums
/// gradients and `s2` sums hessians.
struct NewtonSquaredError;

impl Criterion for NewtonSquaredError {
    fn node_score(&self, s: &Stats) -> f64 {
        if s.n == 0.0 {
            0.0
        } else {
            s.s1 * s.s1 / s.n
        }
    }

    fn leaf_value(&self, s: &Stats) -> f64 {
        if s.s2.abs() < 1e-150 {
            0.0
        } else {
            s.s1 / s.s2
        }
    }

    fn is_pure(&self, _s: &Stats) -> bool {
        false
    }
}

/// Per-feature dense ranks of every row and the sorted distinct values, built
/// once per training matrix and shared by all trees grown on it.
#[derive(Debug, Clone)]
pub struct ColumnIndex {
    ranks: Vec<Vec<u32>>,
    values: Vec<Vec<f64>>,
    n_rows: usize,
}

impl ColumnIndex {
    pub fn new(x: &FeatureMatrix) -> Self {
        let n = x.n_rows();
        let mut ranks = Vec::with_capacity(x.n_cols());
        let mut values = Vec::with_capacity(x.n_cols());
        for j in 0..x.n_cols() {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| x.get(a, j).total_cmp(&x.get(b, j)));
            let mut r = vec![0u32; n];
            let mut distinct: Vec<f64> = Vec::new();
            for &i in &order {
                let v = x.get(i, j);
                if distinct.last() != Some(&v) {
                    distinct.push(v);
                }
                r[i] = (distinct.len() - 1) as u32;
            }
            ranks.push(r);
            values.push(distinct);
        }
        Self {
            ranks,
            values,
            n_rows: n,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.ranks.len()
    }
}

struct Builder<'a, C: Criterion> {
    index: &'a ColumnIndex,
    a: &'a [f64],
    b: &'a [f64],
    params: GrowParams,
    criterion: C,
    nodes: Vec<Node>,
    hist: Vec<Stats>,
    keys: Vec<u64>,
    groups: Vec<(u32, Stats)>,
}

impl<'a, C: Criterion> Builder<'a, C> {
    fn new(index: &'a ColumnIndex, a: &'a [f64], b: &'a [f64], params: GrowParams, criterion: C) -> Self {
        Self {
            index,
            a,
            b,
            params,
            criterion,
            nodes: Vec::new(),
            hist: Vec::new(),
            keys: Vec::new(),
            groups: Vec::new(),
        }
    }

    fn stats(&self, rows: &[usize]) -> Stats {
        let mut s = Stats::default();
        for &r in rows {
            s.add(self.a[r], self.b[r]);
        }
        s
    }

    /// Fill `self.groups` with per-distinct-value sums of the node rows, in
    /// increasing value order.
    fn group_by_value(&mut self, rows: &[usize], f: usize) {
        let ranks = &self.index.ranks[f];
        let k = self.index.values[f].len();
        self.groups.clear();
        if k <= 2 * rows.len() {
            if self.hist.len() < k {
                self.hist.resize(k, Stats::default());
            }
            for &r in rows {
                self.hist[ranks[r] as usize].add(self.a[r], self.b[r]);
            }
            for (q, h) in self.hist[..k].iter_mut().enumerate() {
                if h.n > 0.0 {
                    self.groups.push((q as u32, *h));
                    *h = Stats::default();
                }
            }
        } else {
            self.keys.clear();
            self.keys
                .extend(rows.iter().map(|&r| (u64::from(ranks[r]) << 32) | r as u64));
            self.keys.sort_unstable();
            for &key in &self.keys {
                let q = (key >> 32) as u32;
                let r = (key & 0xFFFF_FFFF) as usize;
                match self.groups.last_mut() {
                    Some((last, s)) if *last == q => s.add(self.a[r], self.b[r]),
                    _ => {
                        let mut s = Stats::default();
                        s.add(self.a[r], self.b[r]);
                        self.groups.push((q, s));
                    }
                }
            }
        }
    }

    fn grow<R: Rng + ?Sized>(&mut self, rows: Vec<usize>, depth: usize, rng: &mut R) -> usize {
        let idx = self.nodes.len();
        let parent = self.stats(&rows);
        self.nodes.push(Node::Leaf {
            value: self.criterion.leaf_value(&parent),
        });

        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        let min_leaf = self.params.min_leaf.max(1) as f64;
        if !depth_ok || (rows.len() as f64) < 2.0 * min_leaf || self.criterion.is_pure(&parent) {
            return idx;
        }

        let p = self.index.n_cols();
        let features: Vec<usize> = match self.params.mtry {
            Some(m) if m < p => sample_indices(rng, p, m.max(1)).into_vec(),
            _ => (0..p).collect(),
        };

        let parent_score = self.criterion.node_score(&parent);
        // (gain, feature, rank of the last value going left)
        let mut best: Option<(f64, usize, u32)> = None;
        for &f in &features {
            if self.index.values[f].len() < 2 {
                continue;
            }
            self.group_by_value(&rows, f);
            let mut left = Stats::default();
            for g in 0..self.groups.len().saturating_sub(1) {
                let (q, s) = self.groups[g];
                left.n += s.n;
                left.s1 += s.s1;
                left.s2 += s.s2;
                if left.n < min_leaf || parent.n - left.n < min_leaf {
                    continue;
                }
                let right = parent.minus(&left);
                let gain = self.criterion.split_score(&left, &right) - parent_score;
                if best.is_none_or(|(b, _, _)| gain > b + 1e-12) {
                    best = Some((gain, f, q));
                }
            }
        }

        let Some((gain, feature, q)) = best else {
            return idx;
        };
        if gain < -1e-12 {
            return idx;
        }
        let ranks = &self.index.ranks[feature];
        let values = &self.index.values[feature];
        // next distinct value present in this node
        let next = rows
            .iter()
            .map(|&r| ranks[r])
            .filter(|&r| r > q)
            .min()
            .expect("split has a non-empty right side");
        let (xv, xn) = (values[q as usize], values[next as usize]);
        let mut threshold = xv + (xn - xv) / 2.0;
        if threshold >= xn {
            threshold = xv;
        }
        let (lrows, rrows): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| ranks[r] <= q);
        let left = self.grow(lrows, depth + 1, rng);
        let right = self.grow(rrows, depth + 1, rng);
        self.nodes[idx] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        idx
    }
}

/// Gini tree on `rows` (duplicates allowed, e.g. a bootstrap sample). Leaves
/// hold the fraction of positives.
pub fn grow_classification_tree<R: Rng + ?Sized>(
    index: &ColumnIndex,
    y: &[f64],
    rows: Vec<usize>,
    params: GrowParams,
    rng: &mut R,
) -> Tree {
    let zeros = vec![0.0; y.len()];
    let mut b = Builder::new(index, y, &zeros, params, Gini);
    b.grow(rows, 0, rng);
    Tree { nodes: b.nodes }
}

/// Regression tree fitted to `grad` by squared error; leaves hold the
/// Newton step `sum grad / sum hess`.
pub fn grow_newton_tree<R: Rng + ?Sized>(
    index: &ColumnIndex,
    grad: &[f64],
    hess: &[f64],
    rows: Vec<usize>,
    params: GrowParams,
    rng: &mut R,
) -> Tree {
    let mut b = Builder::new(index, grad, hess, params, NewtonSquaredError);
    b.grow(rows, 0, rng);
    Tree { nodes: b.nodes }
}
