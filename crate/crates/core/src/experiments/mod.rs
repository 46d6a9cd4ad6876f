//! Subject-independent cross-validation and the window length, connectivity
//! and channel studies.

mod cv;
mod folds;
mod metrics;
mod reference;
mod report;
mod studies;
mod synth;

pub use cv::{run_cv, ConfigDescriptor, ExperimentReport, FeatureScaler, MeanMetrics, RunLog};
pub use folds::{make_folds, make_folds_with, FoldPlan, N_FOLDS, N_ITERATIONS};
pub use metrics::{per_subject_accuracy, subject_accuracy, window_metrics, Confusion, WindowMetrics};
pub use reference::{ReferenceTarget, FULL_DATA_REFERENCES, REFERENCE_TOLERANCE};
pub use report::{plot_csv, runs_csv, summary, summary_table, SummaryEntry};
pub use studies::{
    channel_ablation, connectivity_ablation, fold_plan, graphs_for, rank_channels, single_run, window_length_sweep,
    synthetic_study, ChannelImportance, StudyConfig, SYNTHETIC_BATCH_SIZE,
};
pub use synth::{synth_dataset, SynthConfig};

use crate::gcn::GcnError;
use crate::graph::GraphError;
use crate::SubjectId;

/// Window lengths, in seconds, of the connectivity study.
pub const CONNECTIVITY_LENGTHS: [f64; 3] = [10.0, 50.0, 90.0];

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("need at least {needed} subjects, found {found}")]
    TooFewSubjects { found: usize, needed: usize },
    #[error("subject {0} listed with two different labels")]
    ConflictingLabels(SubjectId),
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("fold {fold} has no test windows")]
    FoldWithoutTestData { fold: usize },
    #[error("fold {fold} leaves no training windows")]
    FoldWithoutTrainingData { fold: usize },
    #[error("subject {0} is not in the fold plan")]
    UnknownSubject(SubjectId),
    #[error("inconsistent graphs: {0}")]
    InconsistentGraphs(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Gcn(#[from] GcnError),
    #[error("report: {0}")]
    Report(String),
}

impl From<csv::Error> for ExperimentError {
    fn from(e: csv::Error) -> Self {
        ExperimentError::Report(e.to_string())
    }
}
