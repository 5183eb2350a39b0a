use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::encode::Matrix;
use crate::par::{self, Exec};

/// Gains within this of the current best count as ties.
const GAIN_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` = all.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: 8, min_samples_leaf: 5, max_features: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf { p: f64 },
    /// `x[feature] <= threshold` goes left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// CART classification tree with gini impurity.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    /// Weighted impurity decrease per feature (not normalised).
    importance: Vec<f64>,
}

#[inline]
fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

/// Impurity decrease of splitting `(pos, n)` into `(lp, ln)` and the rest.
#[inline]
pub(crate) fn split_gain(pos: usize, n: usize, lp: usize, ln: usize) -> f64 {
    let (rp, rn) = (pos - lp, n - ln);
    gini(pos, n) - (ln as f64 / n as f64) * gini(lp, ln) - (rn as f64 / n as f64) * gini(rp, rn)
}

/// Midpoint that keeps `lo` on the left even when the two are adjacent floats.
#[inline]
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi {
        lo
    } else {
        m
    }
}

#[derive(Debug, Clone, Copy)]
struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [bool],
    params: TreeParams,
    n_root: usize,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    order: Vec<(f64, bool)>,
}

impl Builder<'_> {
    fn best_split(&mut self, idx: &[usize], features: &[usize]) -> Option<Best> {
        let n = idx.len();
        let min_leaf = self.params.min_samples_leaf.max(1);
        if n < 2 * min_leaf {
            return None;
        }
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        if pos == 0 || pos == n {
            return None;
        }
        let mut best: Option<Best> = None;
        for &f in features {
            self.order.clear();
            self.order.extend(idx.iter().map(|&i| (self.x.at(i, f), self.y[i])));
            self.order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut lp = 0;
            for i in 1..n {
                lp += self.order[i - 1].1 as usize;
                if i < min_leaf || n - i < min_leaf || self.order[i - 1].0 == self.order[i].0 {
                    continue;
                }
                let gain = split_gain(pos, n, lp, i);
                if gain > best.map_or(GAIN_TIE, |b| b.gain + GAIN_TIE) {
                    best = Some(Best { gain, feature: f, threshold: midpoint(self.order[i - 1].0, self.order[i].0) });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize, rng: Option<&mut ChaCha8Rng>) -> usize {
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf { p: pos as f64 / idx.len().max(1) as f64 });
        if depth >= self.params.max_depth {
            return me;
        }
        let d = self.x.cols;
        let (features, rng) = match (self.params.max_features, rng) {
            (Some(m), Some(rng)) if m < d => {
                let mut f = sample(rng, d, m).into_vec();
                f.sort_unstable();
                (f, Some(rng))
            }
            (_, rng) => ((0..d).collect(), rng),
        };
        let Some(best) = self.best_split(&idx, &features) else { return me };
        self.importance[best.feature] += idx.len() as f64 / self.n_root as f64 * best.gain;
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x.at(i, best.feature) <= best.threshold);
        drop(idx);
        let (left, right) = match rng {
            Some(rng) => {
                let left = self.grow(l, depth + 1, Some(rng));
                (left, self.grow(r, depth + 1, Some(rng)))
            }
            None => {
                let left = self.grow(l, depth + 1, None);
                (left, self.grow(r, depth + 1, None))
            }
        };
        self.nodes[me] = Node::Split { feature: best.feature, threshold: best.threshold, left, right };
        me
    }
}

impl Tree {
    /// Fits on the rows listed in `idx` (repeats allowed, as in a bootstrap).
    /// `rng` is only used when `params.max_features` restricts the search.
    pub fn fit_rows(x: &Matrix, y: &[bool], idx: Vec<usize>, params: TreeParams, rng: Option<&mut ChaCha8Rng>) -> Self {
        let mut b = Builder {
            x,
            y,
            params,
            n_root: idx.len().max(1),
            nodes: Vec::new(),
            importance: vec![0.0; x.cols],
            order: Vec::with_capacity(idx.len()),
        };
        b.grow(idx, 0, rng);
        Tree { nodes: b.nodes, importance: b.importance }
    }

    pub fn fit(x: &Matrix, y: &[bool], params: TreeParams) -> Self {
        Tree::fit_rows(x, y, (0..x.rows).collect(), TreeParams { max_features: None, ..params }, None)
    }

    pub fn proba(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { p } => return p,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    /// `(feature, threshold)` of the root, if it splits.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first()? {
            Node::Split { feature, threshold, .. } => Some((*feature, *threshold)),
            Node::Leaf { .. } => None,
        }
    }

    /// All splits in preorder.
    pub fn splits(&self) -> Vec<(usize, f64)> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, threshold, .. } => Some((*feature, *threshold)),
                Node::Leaf { .. } => None,
            })
            .collect()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn raw_importance(&self) -> &[f64] {
        &self.importance
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { trees: 100, tree: TreeParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    /// Bootstrap forest; tree `t` draws from its own ChaCha stream of `seed`,
    /// so the result does not depend on scheduling.
    pub fn fit(exec: Exec, x: &Matrix, y: &[bool], params: ForestParams, seed: u64) -> Self {
        let m = params.tree.max_features.unwrap_or_else(|| ((x.cols as f64).sqrt().floor() as usize).max(1));
        let tree_params = TreeParams { max_features: Some(m), ..params.tree };
        let trees = par::map_range(exec, params.trees, |t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let idx: Vec<usize> = (0..x.rows).map(|_| rng.random_range(0..x.rows)).collect();
            Tree::fit_rows(x, y, idx, tree_params, Some(&mut rng))
        });
        Forest { trees }
    }

    pub fn from_trees(trees: Vec<Tree>) -> Self {
        Forest { trees }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn proba(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.proba(row)).sum::<f64>() / self.trees.len() as f64
    }

    /// Per-column importance: each tree's decreases normalised to sum 1, then
    /// averaged over trees that split at all, then renormalised.
    pub fn importance(&self, cols: usize) -> Vec<f64> {
        let mut acc = vec![0.0; cols];
        for t in &self.trees {
            let s: f64 = t.importance.iter().sum();
            if s > 0.0 {
                for (a, v) in acc.iter_mut().zip(&t.importance) {
                    *a += v / s;
                }
            }
        }
        let total: f64 = acc.iter().sum();
        if total > 0.0 {
            acc.iter_mut().for_each(|a| *a /= total);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_training_accuracy() {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            let (a, b) = ((i * 7 % 40) as f64, (i * 13 % 40) as f64);
            rows.push(vec![a, b]);
            y.push(a + b > 40.0);
        }
        let x = Matrix::from_rows(rows);
        let t = Tree::fit(&x, &y, TreeParams { max_depth: 20, min_samples_leaf: 1, max_features: None });
        let acc = (0..x.rows).filter(|&i| (t.proba(x.row(i)) >= 0.5) == y[i]).count();
        assert_eq!(acc, 40);
    }

    #[test]
    fn limits_respected() {
        let x = Matrix::from_rows((0..100).map(|i| vec![(i as f64 * 1.3).sin()]).collect());
        let y: Vec<bool> = (0..100).map(|i| i % 3 == 0).collect();
        let t = Tree::fit(&x, &y, TreeParams { max_depth: 3, min_samples_leaf: 5, max_features: None });
        assert!(t.depth() <= 3);
        let pure = Tree::fit(&x, &[true; 100], TreeParams::default());
        assert_eq!(pure.root_split(), None);
        assert_eq!(pure.proba(&[0.0]), 1.0);
    }

    #[test]
    fn identical_trees_and_stumps() {
        let x = Matrix::from_rows((0..30).map(|i| vec![i as f64, (i % 4) as f64]).collect());
        let y: Vec<bool> = (0..30).map(|i| i >= 15).collect();
        let stump = Tree::fit(&x, &y, TreeParams { max_depth: 1, ..Default::default() });
        assert_eq!(stump.root_split(), Some((0, 14.5)));
        let f = Forest::from_trees(vec![stump.clone(); 5]);
        for i in 0..30 {
            assert_eq!(f.proba(x.row(i)), stump.proba(x.row(i)));
        }
        assert_eq!(f.importance(2), vec![1.0, 0.0]);
    }

    #[test]
    fn forest_is_schedule_independent() {
        let x = Matrix::from_rows((0..80).map(|i| vec![(i as f64).sin(), (i as f64 * 0.7).cos(), i as f64]).collect());
        let y: Vec<bool> = (0..80).map(|i| (i as f64).sin() > 0.1).collect();
        let p = ForestParams { trees: 20, ..Default::default() };
        let a = Forest::fit(Exec::Sequential, &x, &y, p, 9);
        let b = Forest::fit(Exec::Parallel, &x, &y, p, 9);
        assert_eq!(a, b);
        let s: f64 = a.importance(3).iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
    }
}
