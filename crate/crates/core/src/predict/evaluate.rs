use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::data::{Dataset, FeatureClass, LabeledSample};
use super::model::{train_classifier_with, ClassifierKind, Hyperparams};
use super::PredictError;
use crate::par::{self, Exec};

/// Rank-sum AUC with average ranks for ties.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, PredictError> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(PredictError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of (1-based) ranks of positives; ties share the mean rank. Kept as
    // twice the value so it stays an exact integer.
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let twice_mean = (i + 1 + j) as u64; // 2 * mean of ranks i+1..=j
        let pos_in_tie = order[i..j].iter().filter(|&&k| labels[k]).count() as u64;
        twice_rank_sum += twice_mean * pos_in_tie;
        i = j;
    }
    let twice_u = twice_rank_sum - (n_pos as u64) * (n_pos as u64 + 1);
    Ok(twice_u as f64 / 2.0 / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_test: usize,
    /// Missing when the test fold holds a single class.
    pub auc: Option<f64>,
    pub accuracy: f64,
    /// Zero when nothing is predicted positive.
    pub precision: f64,
}

/// Threshold 0.5: `p >= 0.5` predicts "improved".
pub fn fold_metrics(fold: usize, scores: &[f64], labels: &[bool]) -> FoldMetrics {
    let (mut tp, mut fp, mut correct) = (0usize, 0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        let pred = s >= 0.5;
        correct += (pred == l) as usize;
        if pred {
            if l {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    FoldMetrics {
        fold,
        n_test: labels.len(),
        auc: roc_auc(scores, labels).ok(),
        accuracy: correct as f64 / labels.len().max(1) as f64,
        precision: if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 },
    }
}

/// Stream seed for fold `fold` (splitmix64 finaliser).
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    let mut z = seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Test fold of every sample. Each class is shuffled and dealt round-robin,
/// continuing from where the previous class stopped, so per-fold class counts
/// and fold sizes differ by at most one.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>, PredictError> {
    if k < 2 {
        return Err(PredictError::BadFoldCount(k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; labels.len()];
    let mut next = 0;
    for class in [true, false] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(PredictError::ClassTooSmall { class: label_name(class), count: members.len(), k });
        }
        members.shuffle(&mut rng);
        for i in members {
            fold[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(fold)
}

fn label_name(improved: bool) -> &'static str {
    if improved {
        "improved"
    } else {
        "worsened"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierReport {
    pub classifier: ClassifierKind,
    pub mean_auc: Option<f64>,
    pub mean_accuracy: f64,
    pub mean_precision: f64,
    pub auc_skipped_folds: usize,
    pub folds: Vec<FoldMetrics>,
}

impl ClassifierReport {
    fn from_folds(classifier: ClassifierKind, folds: Vec<FoldMetrics>) -> Self {
        let aucs: Vec<f64> = folds.iter().filter_map(|f| f.auc).collect();
        let k = folds.len().max(1) as f64;
        ClassifierReport {
            classifier,
            mean_auc: (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64),
            mean_accuracy: folds.iter().map(|f| f.accuracy).sum::<f64>() / k,
            mean_precision: folds.iter().map(|f| f.precision).sum::<f64>() / k,
            auc_skipped_folds: folds.len() - aucs.len(),
            folds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub samples: usize,
    pub features: usize,
    pub k: usize,
    pub seed: u64,
    pub classifiers: Vec<ClassifierReport>,
}

impl EvaluationReport {
    pub fn get(&self, kind: ClassifierKind) -> Option<&ClassifierReport> {
        self.classifiers.iter().find(|c| c.classifier == kind)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub kinds: Vec<ClassifierKind>,
    pub k: usize,
    pub seed: u64,
    pub params: Hyperparams,
    pub exec: Exec,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { kinds: ClassifierKind::ALL.to_vec(), k: 10, seed: 0, params: Hyperparams::default(), exec: Exec::default() }
    }
}

/// Runs a scorer over the stratified folds; `score(fold, train, test)` returns one
/// probability per test sample.
pub fn cross_validate<F>(data: &Dataset, k: usize, seed: u64, exec: Exec, score: F) -> Result<Vec<FoldMetrics>, PredictError>
where
    F: Fn(usize, &[&LabeledSample], &[&LabeledSample]) -> Result<Vec<f64>, PredictError> + Sync,
{
    let folds = stratified_folds(&data.labels(), k, seed)?;
    par::map_range(exec, k, |f| {
        let mut train = Vec::with_capacity(data.len());
        let mut test = Vec::new();
        for (s, &g) in data.samples.iter().zip(&folds) {
            if g == f {
                test.push(s);
            } else {
                train.push(s);
            }
        }
        let scores = score(f, &train, &test)?;
        let labels: Vec<bool> = test.iter().map(|s| s.improved).collect();
        Ok(fold_metrics(f, &scores, &labels))
    })
    .into_iter()
    .collect()
}

/// Stratified k-fold evaluation of every configured classifier on the same
/// folds. Forest fold `f` is seeded with `fold_seed(seed, f)`.
pub fn evaluate_cv(data: &Dataset, cfg: &CvConfig) -> Result<EvaluationReport, PredictError> {
    let classifiers = cfg
        .kinds
        .iter()
        .map(|&kind| {
            let folds = cross_validate(data, cfg.k, cfg.seed, cfg.exec, |f, train, test| {
                let model = train_classifier_with(cfg.exec, kind, train, &cfg.params, fold_seed(cfg.seed, f))?;
                test.iter().map(|s| model.predict_proba(s)).collect()
            })?;
            Ok(ClassifierReport::from_folds(kind, folds))
        })
        .collect::<Result<Vec<_>, PredictError>>()?;
    Ok(EvaluationReport { samples: data.len(), features: data.schema.len(), k: cfg.k, seed: cfg.seed, classifiers })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    Full,
    MinusGeographic,
    MinusNetwork,
    MinusExpenditure,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 4] =
        [FeatureSet::Full, FeatureSet::MinusGeographic, FeatureSet::MinusNetwork, FeatureSet::MinusExpenditure];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Full => "full",
            FeatureSet::MinusGeographic => "minus_geographic",
            FeatureSet::MinusNetwork => "minus_network",
            FeatureSet::MinusExpenditure => "minus_expenditure",
        }
    }

    pub fn apply(self, data: &Dataset) -> Dataset {
        match self {
            FeatureSet::Full => data.clone(),
            FeatureSet::MinusGeographic => data.without_class(FeatureClass::Geographic),
            FeatureSet::MinusNetwork => data.without_class(FeatureClass::Network),
            FeatureSet::MinusExpenditure => data.without_class(FeatureClass::Expenditure),
        }
    }
}

/// Full model and the three single-class ablations. Folds depend only on
/// labels and seed, so all four runs share them.
pub fn ablation_by_class(data: &Dataset, cfg: &CvConfig) -> Result<Vec<(FeatureSet, EvaluationReport)>, PredictError> {
    FeatureSet::ALL.iter().map(|&fs| Ok((fs, evaluate_cv(&fs.apply(data), cfg)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut num = 0.0;
        let (mut np, mut nn) = (0.0, 0.0);
        for (i, &li) in labels.iter().enumerate() {
            if li {
                np += 1.0;
            } else {
                nn += 1.0;
            }
            if !li {
                continue;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if !lj {
                    num += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        num / (np * nn)
    }

    #[test]
    fn auc_cases() {
        assert_eq!(roc_auc(&[0.9, 0.8, 0.7, 0.85], &[true, true, false, false]).unwrap(), 0.75);
        assert_eq!(roc_auc(&[0.9, 0.8, 0.1, 0.2], &[true, true, false, false]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.3; 6], &[true, false, true, false, false, true]).unwrap(), 0.5);
        assert!(roc_auc(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn folds_are_balanced() {
        let labels: Vec<bool> = (0..100).map(|i| i < 60).collect();
        let f = stratified_folds(&labels, 10, 3).unwrap();
        for k in 0..10 {
            let pos = (0..100).filter(|&i| f[i] == k && labels[i]).count();
            let neg = (0..100).filter(|&i| f[i] == k && !labels[i]).count();
            assert_eq!((pos, neg), (6, 4));
        }
        let labels: Vec<bool> = (0..101).map(|i| i % 3 == 0).collect();
        let f = stratified_folds(&labels, 10, 3).unwrap();
        let sizes: Vec<usize> = (0..10).map(|k| f.iter().filter(|&&x| x == k).count()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert_eq!(stratified_folds(&labels, 10, 3).unwrap(), f);
        assert_ne!(stratified_folds(&labels, 10, 4).unwrap(), f);
        let small: Vec<bool> = (0..30).map(|i| i < 5).collect();
        assert!(matches!(stratified_folds(&small, 10, 0), Err(PredictError::ClassTooSmall { count: 5, .. })));
    }

    #[test]
    fn metrics_cases() {
        let labels = [true, false, true, true, false];
        let perfect: Vec<f64> = labels.iter().map(|&l| l as u8 as f64).collect();
        let m = fold_metrics(0, &perfect, &labels);
        assert_eq!((m.auc, m.accuracy, m.precision), (Some(1.0), 1.0, 1.0));
        let m = fold_metrics(0, &[0.2; 5], &labels);
        assert_eq!((m.auc, m.precision), (Some(0.5), 0.0));
        assert_eq!(m.accuracy, 0.4);
        let m = fold_metrics(1, &[0.6; 2], &[true, true]);
        assert_eq!(m.auc, None);
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise(pairs in proptest::collection::vec((0u8..12, any::<bool>()), 2..200)) {
            let scores: Vec<f64> = pairs.iter().map(|p| p.0 as f64 / 4.0).collect();
            let labels: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            let np = labels.iter().filter(|&&l| l).count();
            prop_assume!(np > 0 && np < labels.len());
            let a = roc_auc(&scores, &labels).unwrap();
            prop_assert_eq!(a, pairwise_auc(&scores, &labels));
            let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
            prop_assert!((roc_auc(&scores, &flipped).unwrap() - (1.0 - a)).abs() < 1e-12);
            let squashed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp()).collect();
            prop_assert!((roc_auc(&squashed, &labels).unwrap() - a).abs() < 1e-12);
        }
    }
}
