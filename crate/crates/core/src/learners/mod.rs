//! The five classifier families used for recommendation and feature ranking.
//! All of them are deterministic given their seed.

pub mod knn;
pub mod logistic;
pub mod mlp;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use knn::{Knn, KnnParams};
pub use logistic::{Logistic, LogisticParams};
pub use mlp::{Mlp, MlpParams};
pub use tree::{DecisionTree, ForestParams, MaxFeatures, RandomForest, TreeParams};

pub type Rows<'a> = &'a [Vec<f64>];

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in xs.iter().enumerate() {
        if *v > xs[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dt,
    Knn,
    Lr,
    Mlp,
    Rf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [ModelKind::Dt, ModelKind::Knn, ModelKind::Lr, ModelKind::Mlp, ModelKind::Rf];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Dt => "dt",
            ModelKind::Knn => "knn",
            ModelKind::Lr => "lr",
            ModelKind::Mlp => "mlp",
            ModelKind::Rf => "rf",
        }
    }

    /// Whether the fitted model exposes per-feature importances.
    pub fn ranks_features(self) -> bool {
        matches!(self, ModelKind::Dt | ModelKind::Lr | ModelKind::Rf)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown model kind {s:?}")))
    }
}

/// A model family together with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelConfig {
    Dt(TreeParams),
    Knn(KnnParams),
    Lr(LogisticParams),
    Mlp(MlpParams),
    Rf(ForestParams),
}

impl ModelConfig {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Dt => ModelConfig::Dt(TreeParams::default()),
            ModelKind::Knn => ModelConfig::Knn(KnnParams::default()),
            ModelKind::Lr => ModelConfig::Lr(LogisticParams::default()),
            ModelKind::Mlp => ModelConfig::Mlp(MlpParams::default()),
            ModelKind::Rf => ModelConfig::Rf(ForestParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Dt(_) => ModelKind::Dt,
            ModelConfig::Knn(_) => ModelKind::Knn,
            ModelConfig::Lr(_) => ModelKind::Lr,
            ModelConfig::Mlp(_) => ModelKind::Mlp,
            ModelConfig::Rf(_) => ModelKind::Rf,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        match self {
            ModelConfig::Dt(p) if p.min_samples_split < 2 => bad("min_samples_split must be >= 2"),
            ModelConfig::Knn(p) if p.k == 0 => bad("k must be positive"),
            ModelConfig::Lr(p) if !(p.l2 >= 0.0 && p.learning_rate > 0.0) => bad("bad logistic parameters"),
            ModelConfig::Mlp(p) if p.hidden == 0 || !(p.learning_rate > 0.0) || !(0.0..1.0).contains(&p.momentum) => {
                bad("bad mlp parameters")
            }
            ModelConfig::Rf(p) if p.n_trees == 0 || p.min_samples_split < 2 => bad("bad forest parameters"),
            _ => Ok(()),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("hyperparameters serialize")
    }

    pub fn from_json(kind: ModelKind, v: serde_json::Value) -> Result<Self> {
        let err = |e: serde_json::Error| Error::Schema(format!("hyperparameters: {e}"));
        Ok(match kind {
            ModelKind::Dt => ModelConfig::Dt(serde_json::from_value(v).map_err(err)?),
            ModelKind::Knn => ModelConfig::Knn(serde_json::from_value(v).map_err(err)?),
            ModelKind::Lr => ModelConfig::Lr(serde_json::from_value(v).map_err(err)?),
            ModelKind::Mlp => ModelConfig::Mlp(serde_json::from_value(v).map_err(err)?),
            ModelKind::Rf => ModelConfig::Rf(serde_json::from_value(v).map_err(err)?),
        })
    }
}

/// Fitted parameters of one of the five families.
#[derive(Debug, Clone, PartialEq)]
pub enum Learned {
    Dt(DecisionTree),
    Knn(Knn),
    Lr(Logistic),
    Mlp(Mlp),
    Rf(RandomForest),
}

impl Learned {
    /// Fits on rows `x` with class indices `y` in `0..n_classes`.
    pub fn fit(config: &ModelConfig, x: Rows<'_>, y: &[usize], n_classes: usize, seed: u64) -> Self {
        assert!(!x.is_empty() && x.len() == y.len(), "fit needs matching, non-empty rows");
        match config {
            ModelConfig::Dt(p) => Learned::Dt(DecisionTree::fit(x, y, n_classes, p, seed)),
            ModelConfig::Knn(p) => Learned::Knn(Knn::fit(x, y, n_classes, p)),
            ModelConfig::Lr(p) => Learned::Lr(Logistic::fit(x, y, n_classes, p)),
            ModelConfig::Mlp(p) => Learned::Mlp(Mlp::fit(x, y, n_classes, p, seed)),
            ModelConfig::Rf(p) => Learned::Rf(RandomForest::fit(x, y, n_classes, p, seed)),
        }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        match self {
            Learned::Dt(m) => m.predict(row),
            Learned::Knn(m) => m.predict(row),
            Learned::Lr(m) => m.predict(row),
            Learned::Mlp(m) => m.predict(row),
            Learned::Rf(m) => m.predict(row),
        }
    }

    /// Impurity decrease for trees and forests, mean absolute coefficient for
    /// logistic regression, `None` otherwise.
    pub fn importances(&self) -> Option<Vec<f64>> {
        match self {
            Learned::Dt(m) => Some(m.importances.clone()),
            Learned::Rf(m) => Some(m.importances()),
            Learned::Lr(m) => Some(m.importances()),
            Learned::Knn(_) | Learned::Mlp(_) => None,
        }
    }

    /// Checks that deserialized parameters fit `d` features and `n_classes`
    /// classes, so prediction cannot index out of range or loop.
    pub fn check_shape(&self, d: usize, n_classes: usize) -> Result<()> {
        let ok = match self {
            Learned::Dt(m) => tree_ok(m, d, n_classes),
            Learned::Rf(m) => {
                m.n_classes == n_classes && !m.trees.is_empty() && m.trees.iter().all(|t| tree_ok(t, d, n_classes))
            }
            Learned::Knn(m) => {
                m.k > 0
                    && m.n_classes == n_classes
                    && !m.rows.is_empty()
                    && m.rows.len() == m.labels.len()
                    && m.rows.iter().all(|r| r.len() == d)
                    && m.labels.iter().all(|l| *l < n_classes)
            }
            Learned::Lr(m) => {
                m.weights.len() == n_classes && m.bias.len() == n_classes && m.weights.iter().all(|w| w.len() == d)
            }
            Learned::Mlp(m) => {
                !m.w1.is_empty()
                    && m.b1.len() == m.w1.len()
                    && m.w1.iter().all(|w| w.len() == d)
                    && m.w2.len() == n_classes
                    && m.b2.len() == n_classes
                    && m.w2.iter().all(|w| w.len() == m.w1.len())
            }
        };
        if ok && n_classes > 0 {
            Ok(())
        } else {
            Err(Error::Schema("model parameters do not match the feature or class count".into()))
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let v = match self {
            Learned::Dt(m) => serde_json::to_value(m),
            Learned::Knn(m) => serde_json::to_value(m),
            Learned::Lr(m) => serde_json::to_value(m),
            Learned::Mlp(m) => serde_json::to_value(m),
            Learned::Rf(m) => serde_json::to_value(m),
        };
        v.expect("parameters serialize")
    }

    pub fn from_json(kind: ModelKind, v: serde_json::Value) -> Result<Self> {
        let err = |e: serde_json::Error| Error::Schema(format!("model parameters: {e}"));
        Ok(match kind {
            ModelKind::Dt => Learned::Dt(serde_json::from_value(v).map_err(err)?),
            ModelKind::Knn => Learned::Knn(serde_json::from_value(v).map_err(err)?),
            ModelKind::Lr => Learned::Lr(serde_json::from_value(v).map_err(err)?),
            ModelKind::Mlp => Learned::Mlp(serde_json::from_value(v).map_err(err)?),
            ModelKind::Rf => Learned::Rf(serde_json::from_value(v).map_err(err)?),
        })
    }
}

fn tree_ok(t: &DecisionTree, d: usize, n_classes: usize) -> bool {
    let n = t.nodes.len();
    n > 0
        && t.nodes.iter().enumerate().all(|(i, node)| match node {
            tree::Node::Leaf { distribution } => distribution.len() == n_classes,
            tree::Node::Split { feature, left, right, .. } => {
                *feature < d && *left > i && *right > i && *left < n && *right < n
            }
        })
}
