use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::{ClassLabel, SubjectId};

pub const N_FOLDS: usize = 5;
pub const N_ITERATIONS: usize = 3;

/// Subject-to-fold assignment shared by every iteration, plus one training
/// seed per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub assignments: BTreeMap<SubjectId, usize>,
    pub labels: BTreeMap<SubjectId, ClassLabel>,
    pub iteration_seeds: Vec<u64>,
}

impl FoldPlan {
    pub fn test_subjects(&self, fold: usize) -> BTreeSet<SubjectId> {
        self.assignments
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(s, _)| s.clone())
            .collect()
    }

    pub fn train_subjects(&self, fold: usize) -> BTreeSet<SubjectId> {
        self.assignments
            .iter()
            .filter(|(_, &f)| f != fold)
            .map(|(s, _)| s.clone())
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in self.assignments.values() {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Five stratified folds over `subjects` with three iteration seeds.
pub fn make_folds(subjects: &[(SubjectId, ClassLabel)], seed: u64) -> Result<FoldPlan, ExperimentError> {
    make_folds_with(subjects, N_FOLDS, N_ITERATIONS, seed)
}

/// Shuffles each class by `seed` and deals its subjects round-robin into
/// `n_folds` folds. The dealer position carries over from one class to the
/// next so fold sizes differ by at most one.
pub fn make_folds_with(
    subjects: &[(SubjectId, ClassLabel)],
    n_folds: usize,
    n_iterations: usize,
    seed: u64,
) -> Result<FoldPlan, ExperimentError> {
    let mut labels = BTreeMap::new();
    for (s, l) in subjects {
        if let Some(prev) = labels.insert(s.clone(), *l) {
            if prev != *l {
                return Err(ExperimentError::ConflictingLabels(s.clone()));
            }
        }
    }
    if n_folds == 0 || labels.len() < n_folds {
        return Err(ExperimentError::TooFewSubjects {
            found: labels.len(),
            needed: n_folds.max(1),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = BTreeMap::new();
    let mut dealer = 0usize;
    for class in ClassLabel::ALL {
        let mut members: Vec<&SubjectId> = labels.iter().filter(|(_, &l)| l == class).map(|(s, _)| s).collect();
        members.shuffle(&mut rng);
        for s in members {
            assignments.insert(s.clone(), dealer % n_folds);
            dealer += 1;
        }
    }
    let iteration_seeds = (0..n_iterations).map(|_| rng.random()).collect();
    Ok(FoldPlan {
        n_folds,
        assignments,
        labels,
        iteration_seeds,
    })
}
