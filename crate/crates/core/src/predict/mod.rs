//! Ward features, binary deprivation-change labels and the classifiers
//! evaluated on them.

mod bayes;
mod data;
mod encode;
mod evaluate;
mod logistic;
mod model;
mod tree;

pub use bayes::GaussianNb;
pub use data::{
    assemble_dataset, subset_by_change, ward_feature_schema, AssembledDataset, Column, ColumnKind, Dataset,
    FeatureClass, LabeledSample, Schema, Value,
};
pub use encode::{Encoder, Matrix};
pub use evaluate::{
    ablation_by_class, cross_validate, evaluate_cv, fold_metrics, fold_seed, roc_auc, stratified_folds,
    ClassifierReport, CvConfig, EvaluationReport, FeatureSet, FoldMetrics,
};
pub use logistic::Logistic;
pub use model::{forest_importance, train_classifier, train_classifier_with, ClassifierKind, Hyperparams, TrainedModel};
pub use tree::{Forest, ForestParams, Tree, TreeParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PredictError {
    #[error("training data holds a single class")]
    SingleClass,
    #[error("sample schema [{found}] does not match the model's [{expected}]")]
    SchemaMismatch { expected: String, found: String },
    #[error("class {class} has {count} samples, fewer than k = {k}; use a smaller k")]
    ClassTooSmall { class: &'static str, count: usize, k: usize },
    #[error("k must be at least 2, got {0}")]
    BadFoldCount(usize),
    #[error("feature importance needs a random forest, got {}", .0.as_str())]
    NotForest(ClassifierKind),
}
