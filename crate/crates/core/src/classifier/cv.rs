//! Stratified k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    train, ClassificationMetrics, ClassifierConfig, ClassifierError, Label, LabeledSentence,
    WordVectors,
};
use crate::eval::ConfusionCounts;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub counts: ConfusionCounts,
    pub metrics: ClassificationMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub k: usize,
    pub folds: Vec<FoldResult>,
    pub mean: ClassificationMetrics,
}

/// Partition sample indices into `k` folds, class by class. Each class is
/// shuffled with a seeded RNG and dealt round-robin, so every fold holds
/// `floor` or `ceil` of `class_count / k` samples of each class.
pub fn stratified_folds(
    labels: &[Label],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, ClassifierError> {
    let mut req: Vec<usize> = Vec::new();
    let mut non_req: Vec<usize> = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        match l {
            Label::Req => req.push(i),
            Label::NonReq => non_req.push(i),
        }
    }
    let minority = req.len().min(non_req.len());
    if k < 2 || k > minority {
        return Err(ClassifierError::InvalidFolds { k, max: minority });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    for class in [&mut req, &mut non_req] {
        class.shuffle(&mut rng);
        for (pos, &idx) in class.iter().enumerate() {
            folds[pos % k].push(idx);
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Train on `k − 1` folds and score the held-out fold, for each fold.
/// Folds run in parallel; each uses a seed derived from `(config.seed, fold)`.
pub fn cross_validate(
    data: &[LabeledSentence],
    k: usize,
    config: &ClassifierConfig,
    vectors: Option<&WordVectors>,
) -> Result<CrossValidation, ClassifierError> {
    config.validate()?;
    if data.is_empty() {
        return Err(ClassifierError::EmptyData);
    }
    let labels: Vec<Label> = data.iter().map(|s| s.label()).collect();
    let folds = stratified_folds(&labels, k, config.seed)?;

    let results = folds
        .par_iter()
        .enumerate()
        .map(|(fold, test_idx)| {
            let mut in_test = vec![false; data.len()];
            for &i in test_idx {
                in_test[i] = true;
            }
            let train_set: Vec<LabeledSentence> = data
                .iter()
                .zip(&in_test)
                .filter(|(_, &t)| !t)
                .map(|(s, _)| s.clone())
                .collect();
            let fold_config = ClassifierConfig {
                seed: fold_seed(config.seed, fold),
                ..config.clone()
            };
            let model = train(&train_set, &fold_config, vectors)?;
            let mut counts = ConfusionCounts::default();
            for &i in test_idx {
                counts.record(model.predict(data[i].text()).label, data[i].label());
            }
            Ok(FoldResult {
                fold,
                train_size: train_set.len(),
                test_size: test_idx.len(),
                metrics: ClassificationMetrics::from_counts(&counts),
                counts,
            })
        })
        .collect::<Result<Vec<FoldResult>, ClassifierError>>()?;

    let per_fold: Vec<ClassificationMetrics> = results.iter().map(|r| r.metrics).collect();
    Ok(CrossValidation {
        k,
        mean: ClassificationMetrics::mean(&per_fold),
        folds: results,
    })
}
