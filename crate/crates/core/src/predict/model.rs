use std::sync::Arc;

use serde::Serialize;

use super::bayes::GaussianNb;
use super::data::LabeledSample;
use super::encode::Encoder;
use super::logistic::Logistic;
use super::tree::{Forest, ForestParams, Tree, TreeParams};
use super::PredictError;
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    NaiveBayes,
    LogisticRegression,
    DecisionTree,
    RandomForest,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::NaiveBayes,
        ClassifierKind::LogisticRegression,
        ClassifierKind::DecisionTree,
        ClassifierKind::RandomForest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "naive_bayes",
            ClassifierKind::LogisticRegression => "logistic_regression",
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::RandomForest => "random_forest",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| format!("unknown classifier {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hyperparams {
    pub nb_var_smoothing: f64,
    pub lr_lambda: f64,
    pub lr_tol: f64,
    pub lr_max_iter: usize,
    pub tree_max_depth: usize,
    pub tree_min_samples_leaf: usize,
    pub forest_trees: usize,
    /// Features tried per forest split; `None` = floor(sqrt(d)).
    pub forest_max_features: Option<usize>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            nb_var_smoothing: 1e-9,
            lr_lambda: 1.0,
            lr_tol: 1e-6,
            lr_max_iter: 10_000,
            tree_max_depth: 8,
            tree_min_samples_leaf: 5,
            forest_trees: 100,
            forest_max_features: None,
        }
    }
}

impl Hyperparams {
    fn tree(&self) -> TreeParams {
        TreeParams { max_depth: self.tree_max_depth, min_samples_leaf: self.tree_min_samples_leaf, max_features: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Learned {
    NaiveBayes(GaussianNb),
    Logistic(Logistic),
    Tree(Tree),
    Forest(Forest),
}

/// A fitted classifier together with the preprocessing fitted on its
/// training split.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ClassifierKind,
    encoder: Encoder,
    learned: Learned,
}

pub fn train_classifier(
    kind: ClassifierKind,
    train: &[&LabeledSample],
    params: &Hyperparams,
    seed: u64,
) -> Result<TrainedModel, PredictError> {
    train_classifier_with(Exec::default(), kind, train, params, seed)
}

pub fn train_classifier_with(
    exec: Exec,
    kind: ClassifierKind,
    train: &[&LabeledSample],
    params: &Hyperparams,
    seed: u64,
) -> Result<TrainedModel, PredictError> {
    let first = train.first().ok_or(PredictError::SingleClass)?;
    let schema: Arc<_> = first.schema.clone();
    let pos = train.iter().filter(|s| s.improved).count();
    if pos == 0 || pos == train.len() {
        return Err(PredictError::SingleClass);
    }
    let encoder = Encoder::fit(&schema, train, kind == ClassifierKind::LogisticRegression);
    let x = encoder.encode_all(train)?;
    let y: Vec<bool> = train.iter().map(|s| s.improved).collect();
    let learned = match kind {
        ClassifierKind::NaiveBayes => Learned::NaiveBayes(GaussianNb::fit(&x, &y, params.nb_var_smoothing)),
        ClassifierKind::LogisticRegression => {
            Learned::Logistic(Logistic::fit(&x, &y, params.lr_lambda, params.lr_tol, params.lr_max_iter))
        }
        ClassifierKind::DecisionTree => Learned::Tree(Tree::fit(&x, &y, params.tree())),
        ClassifierKind::RandomForest => {
            let fp = ForestParams {
                trees: params.forest_trees,
                tree: TreeParams { max_features: params.forest_max_features, ..params.tree() },
            };
            Learned::Forest(Forest::fit(exec, &x, &y, fp, seed))
        }
    };
    Ok(TrainedModel { kind, encoder, learned })
}

impl TrainedModel {
    /// Probability of "improved".
    pub fn predict_proba(&self, s: &LabeledSample) -> Result<f64, PredictError> {
        let mut row = Vec::with_capacity(self.encoder.width());
        self.encoder.encode_into(s, &mut row)?;
        Ok(match &self.learned {
            Learned::NaiveBayes(m) => m.proba(&row),
            Learned::Logistic(m) => m.proba(&row),
            Learned::Tree(m) => m.proba(&row),
            Learned::Forest(m) => m.proba(&row),
        })
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn forest(&self) -> Option<&Forest> {
        match &self.learned {
            Learned::Forest(f) => Some(f),
            _ => None,
        }
    }

    pub fn tree(&self) -> Option<&Tree> {
        match &self.learned {
            Learned::Tree(t) => Some(t),
            _ => None,
        }
    }

    pub fn logistic(&self) -> Option<&Logistic> {
        match &self.learned {
            Learned::Logistic(m) => Some(m),
            _ => None,
        }
    }
}

/// Forest importances per schema feature (one-hot columns summed back into
/// their categorical parent), in schema order.
pub fn forest_importance(model: &TrainedModel) -> Result<Vec<(String, f64)>, PredictError> {
    let forest = model.forest().ok_or(PredictError::NotForest(model.kind))?;
    let schema = model.encoder.schema();
    let mut out: Vec<(String, f64)> = schema.columns.iter().map(|c| (c.name.clone(), 0.0)).collect();
    for (v, p) in forest.importance(model.encoder.width()).into_iter().zip(model.encoder.parents()) {
        out[p].1 += v;
    }
    Ok(out)
}
