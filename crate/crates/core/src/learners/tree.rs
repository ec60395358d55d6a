//! CART classification trees (Gini impurity) and bagged random forests.

use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;

use super::{argmax, Rows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features examined per split; `None` examines all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        distribution: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub importances: Vec<f64>,
}

fn gini(counts: &[f64], total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
}

struct SplitCandidate {
    feature: usize,
    threshold: f64,
    /// Weighted impurity of the two children, summed.
    child_impurity: f64,
}

struct Builder<'a> {
    x: Rows<'a>,
    y: &'a [usize],
    n_classes: usize,
    params: &'a TreeParams,
    rng: SplitMix64,
    nodes: Vec<Node>,
    importances: Vec<f64>,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.n_classes];
        for &i in idx {
            c[self.y[i]] += 1.0;
        }
        c
    }

    fn best_split_on(&self, idx: &[usize], feature: usize, parent_counts: &[f64]) -> Option<SplitCandidate> {
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]).then(a.cmp(&b)));
        let n = order.len() as f64;
        let mut left = vec![0.0; self.n_classes];
        let mut best: Option<SplitCandidate> = None;
        for k in 0..order.len() - 1 {
            left[self.y[order[k]]] += 1.0;
            let lo = self.x[order[k]][feature];
            let hi = self.x[order[k + 1]][feature];
            if lo >= hi {
                continue;
            }
            let nl = (k + 1) as f64;
            let nr = n - nl;
            let right: Vec<f64> = parent_counts.iter().zip(&left).map(|(p, l)| p - l).collect();
            let impurity = nl * gini(&left, nl) + nr * gini(&right, nr);
            if best.as_ref().is_none_or(|b| impurity < b.child_impurity) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(SplitCandidate {
                    feature,
                    threshold,
                    child_impurity: impurity,
                });
            }
        }
        best
    }

    fn leaf(&mut self, counts: Vec<f64>) -> usize {
        let total: f64 = counts.iter().sum();
        let distribution = counts.iter().map(|c| c / total).collect();
        self.nodes.push(Node::Leaf { distribution });
        self.nodes.len() - 1
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let n = idx.len() as f64;
        let pure = counts.iter().filter(|c| **c > 0.0).count() <= 1;
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || idx.len() < self.params.min_samples_split.max(2) {
            return self.leaf(counts);
        }
        let d = self.x[0].len();
        let mut features: Vec<usize> = (0..d).collect();
        let budget = match self.params.max_features {
            Some(m) if m < d => {
                self.rng.shuffle(&mut features);
                m.max(1)
            }
            _ => d,
        };
        // Keep looking past the budget until some feature admits a split.
        let mut best: Option<SplitCandidate> = None;
        for (visited, &f) in features.iter().enumerate() {
            if visited >= budget && best.is_some() {
                break;
            }
            if let Some(c) = self.best_split_on(&idx, f, &counts) {
                if best.as_ref().is_none_or(|b| c.child_impurity < b.child_impurity) {
                    best = Some(c);
                }
            }
        }
        let Some(split) = best else {
            return self.leaf(counts);
        };
        let decrease = n * gini(&counts, n) - split.child_impurity;
        self.importances[split.feature] += decrease.max(0.0);
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x[i][split.feature] <= split.threshold);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { distribution: vec![] });
        let left = self.build(left_idx, depth + 1);
        let right = self.build(right_idx, depth + 1);
        self.nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        slot
    }
}

impl DecisionTree {
    /// Fits on the rows listed in `sample` (duplicates allowed, as produced by
    /// bootstrapping).
    pub fn fit_on(
        x: Rows<'_>,
        y: &[usize],
        sample: Vec<usize>,
        n_classes: usize,
        params: &TreeParams,
        seed: u64,
    ) -> Self {
        assert!(!sample.is_empty(), "cannot fit a tree on zero rows");
        let d = x[0].len();
        let mut b = Builder {
            x,
            y,
            n_classes,
            params,
            rng: SplitMix64::new(seed),
            nodes: Vec::new(),
            importances: vec![0.0; d],
        };
        b.build(sample, 0);
        let total: f64 = b.importances.iter().sum();
        if total > 0.0 {
            for v in &mut b.importances {
                *v /= total;
            }
        }
        Self {
            nodes: b.nodes,
            importances: b.importances,
        }
    }

    pub fn fit(x: Rows<'_>, y: &[usize], n_classes: usize, params: &TreeParams, seed: u64) -> Self {
        Self::fit_on(x, y, (0..x.len()).collect(), n_classes, params, seed)
    }

    pub fn distribution(&self, row: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { distribution } => return distribution,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        argmax(self.distribution(row))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    Sqrt,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub n_classes: usize,
}

impl RandomForest {
    pub fn fit(x: Rows<'_>, y: &[usize], n_classes: usize, params: &ForestParams, seed: u64) -> Self {
        let n = x.len();
        let d = x[0].len();
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_samples_split: params.min_samples_split,
            max_features: match params.max_features {
                MaxFeatures::Sqrt => Some(((d as f64).sqrt().floor() as usize).max(1)),
                MaxFeatures::All => None,
            },
        };
        let trees = (0..params.n_trees)
            .map(|t| {
                let mut rng = SplitMix64::derive(seed, t as u64);
                let sample = if params.bootstrap {
                    (0..n).map(|_| rng.below(n as u64) as usize).collect()
                } else {
                    (0..n).collect()
                };
                DecisionTree::fit_on(x, y, sample, n_classes, &tree_params, rng.next_u64())
            })
            .collect();
        Self { trees, n_classes }
    }

    pub fn proba(&self, row: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (a, p) in acc.iter_mut().zip(t.distribution(row)) {
                *a += p;
            }
        }
        let k = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= k);
        acc
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        argmax(&self.proba(row))
    }

    pub fn importances(&self) -> Vec<f64> {
        let d = self.trees.first().map_or(0, |t| t.importances.len());
        let mut acc = vec![0.0; d];
        for t in &self.trees {
            for (a, v) in acc.iter_mut().zip(&t.importances) {
                *a += v;
            }
        }
        let total: f64 = acc.iter().sum();
        if total > 0.0 {
            acc.iter_mut().for_each(|a| *a /= total);
        }
        acc
    }
}
