use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{subject_accuracy, window_metrics, ExperimentError, FoldPlan, WindowMetrics};
use crate::gcn::{normalize_adjacency, train, DenseMatrix, GcnModel, GraphInput, LabeledGraph, ModelConfig};
use crate::graph::BrainGraph;
use crate::SubjectId;

/// Per-column standardization of node features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureScaler {
    /// Statistics over every node of every graph given. Zero-variance columns
    /// get unit scale.
    pub fn fit<'a>(graphs: impl IntoIterator<Item = &'a BrainGraph>) -> Result<Self, ExperimentError> {
        let mut sum: Vec<f64> = Vec::new();
        let mut sq: Vec<f64> = Vec::new();
        let mut n = 0usize;
        for g in graphs {
            let f = &g.node_features;
            if sum.is_empty() {
                sum = vec![0.0; f.cols];
                sq = vec![0.0; f.cols];
            } else if f.cols != sum.len() {
                return Err(ExperimentError::InconsistentGraphs("feature widths differ".into()));
            }
            for r in 0..f.rows {
                for (c, v) in f.row(r).iter().enumerate() {
                    sum[c] += v;
                    sq[c] += v * v;
                }
            }
            n += f.rows;
        }
        if n == 0 {
            return Err(ExperimentError::EmptyInput);
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let var = (q / n as f64 - m * m).max(0.0);
                if var > 1e-24 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn transform(&self, features: &DenseMatrix) -> DenseMatrix {
        let mut out = features.clone();
        for r in 0..out.rows {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = (*v - self.mean[c]) / self.std[c];
            }
        }
        out
    }
}

/// What a report was computed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDescriptor {
    pub label: String,
    pub window_seconds: f64,
    pub use_distance_term: bool,
    pub omitted_channel: Option<String>,
}

impl ConfigDescriptor {
    /// Labelled `omit <channel>` or `<window>s combined|coherence`.
    pub fn new(window_seconds: f64, use_distance_term: bool, omit: Option<&str>) -> Self {
        let mode = if use_distance_term { "combined" } else { "coherence" };
        let label = match omit {
            Some(c) => format!("omit {c}"),
            None => format!("{window_seconds}s {mode}"),
        };
        Self {
            label,
            window_seconds,
            use_distance_term,
            omitted_channel: omit.map(str::to_owned),
        }
    }
}

/// One fold of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub iteration: usize,
    pub fold: usize,
    pub seed: u64,
    /// Subjects whose windows were used for training.
    pub train_subjects: Vec<SubjectId>,
    /// Subjects whose windows were evaluated.
    pub test_subjects: Vec<SubjectId>,
    pub n_train_windows: usize,
    pub n_test_windows: usize,
    pub metrics: WindowMetrics,
    pub subject_accuracies: BTreeMap<SubjectId, f64>,
    pub loss_history: Vec<f64>,
    /// Standardization fitted for this run.
    pub feature_scaler: FeatureScaler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub descriptor: ConfigDescriptor,
    pub runs: Vec<RunLog>,
    /// Arithmetic mean of the per-run window metrics.
    pub mean: MeanMetrics,
    /// Mean over iterations of the mean over subjects of each subject's
    /// window accuracy in its test fold.
    pub subject_accuracy: f64,
}

impl ExperimentReport {
    pub fn from_runs(descriptor: ConfigDescriptor, runs: Vec<RunLog>) -> Result<Self, ExperimentError> {
        if runs.is_empty() {
            return Err(ExperimentError::EmptyInput);
        }
        let n = runs.len() as f64;
        let avg = |f: fn(&WindowMetrics) -> f64| runs.iter().map(|r| f(&r.metrics)).sum::<f64>() / n;
        let mean = MeanMetrics {
            accuracy: avg(|m| m.accuracy),
            precision: avg(|m| m.precision),
            recall: avg(|m| m.recall),
            f1: avg(|m| m.f1),
        };
        let mut by_iteration: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for r in &runs {
            by_iteration.entry(r.iteration).or_default().extend(r.subject_accuracies.values());
        }
        let subject_accuracy = by_iteration
            .values()
            .map(|v| v.iter().sum::<f64>() / v.len() as f64)
            .sum::<f64>()
            / by_iteration.len() as f64;
        Ok(Self {
            descriptor,
            runs,
            mean,
            subject_accuracy,
        })
    }
}

/// Runs every (iteration, fold) pair of `plan`: trains on out-of-fold
/// subjects and evaluates on in-fold subjects. Node features are
/// standardized with training-fold statistics.
pub fn run_cv(
    graphs: &[BrainGraph],
    model_config: &ModelConfig,
    plan: &FoldPlan,
    descriptor: ConfigDescriptor,
) -> Result<ExperimentReport, ExperimentError> {
    if graphs.is_empty() {
        return Err(ExperimentError::EmptyInput);
    }
    let mut folds = Vec::with_capacity(graphs.len());
    for g in graphs {
        let fold = *plan
            .assignments
            .get(&g.subject_id)
            .ok_or_else(|| ExperimentError::UnknownSubject(g.subject_id.clone()))?;
        folds.push(fold);
    }
    let width = graphs[0].node_features.cols;
    if graphs.iter().any(|g| g.node_features.cols != width) {
        return Err(ExperimentError::InconsistentGraphs("feature widths differ".into()));
    }
    let adjacency: Vec<DenseMatrix> = graphs
        .par_iter()
        .map(|g| normalize_adjacency(&g.connectivity))
        .collect::<Result<_, _>>()?;

    let jobs: Vec<(usize, usize)> = (0..plan.iteration_seeds.len())
        .flat_map(|it| (0..plan.n_folds).map(move |f| (it, f)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(iteration, fold)| {
            let seed = plan.iteration_seeds[iteration].wrapping_add(fold as u64);
            run_fold(graphs, &folds, &adjacency, model_config, iteration, fold, seed)
        })
        .collect::<Result<Vec<_>, _>>()?;
    ExperimentReport::from_runs(descriptor, runs)
}

fn run_fold(
    graphs: &[BrainGraph],
    folds: &[usize],
    adjacency: &[DenseMatrix],
    model_config: &ModelConfig,
    iteration: usize,
    fold: usize,
    seed: u64,
) -> Result<RunLog, ExperimentError> {
    let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..graphs.len()).partition(|&i| folds[i] == fold);
    if test_idx.is_empty() {
        return Err(ExperimentError::FoldWithoutTestData { fold });
    }
    if train_idx.is_empty() {
        return Err(ExperimentError::FoldWithoutTrainingData { fold });
    }
    let scaler = FeatureScaler::fit(train_idx.iter().map(|&i| &graphs[i]))?;
    let input = |i: usize| GraphInput {
        adjacency: adjacency[i].clone(),
        features: scaler.transform(&graphs[i].node_features),
    };
    let training: Vec<LabeledGraph> = train_idx
        .iter()
        .map(|&i| LabeledGraph {
            input: input(i),
            label: graphs[i].class_label,
        })
        .collect();
    let config = ModelConfig {
        seed,
        ..model_config.clone()
    };
    let width = graphs[0].node_features.cols;
    let outcome = train(GcnModel::new(config, width)?, &training)?;

    let mut predictions = Vec::with_capacity(test_idx.len());
    let mut labels = Vec::with_capacity(test_idx.len());
    let mut per_window = Vec::with_capacity(test_idx.len());
    for &i in &test_idx {
        let p = outcome.model.predict(&input(i))?.predicted_class;
        predictions.push(p);
        labels.push(graphs[i].class_label);
        per_window.push((graphs[i].subject_id.clone(), p == graphs[i].class_label));
    }
    let subjects = |idx: &[usize]| -> Vec<SubjectId> {
        idx.iter()
            .map(|&i| graphs[i].subject_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    };
    let subject_accuracies = super::metrics::per_subject_accuracy(&per_window);
    debug_assert!((subject_accuracy(&per_window)? - subject_accuracies.values().sum::<f64>() / subject_accuracies.len() as f64).abs() < 1e-12);
    Ok(RunLog {
        iteration,
        fold,
        seed,
        train_subjects: subjects(&train_idx),
        test_subjects: subjects(&test_idx),
        n_train_windows: train_idx.len(),
        n_test_windows: test_idx.len(),
        metrics: window_metrics(&predictions, &labels)?,
        subject_accuracies,
        loss_history: outcome.loss_history,
        feature_scaler: scaler,
    })
}
