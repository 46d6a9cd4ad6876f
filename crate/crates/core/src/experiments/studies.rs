use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{make_folds, run_cv, ConfigDescriptor, ExperimentError, ExperimentReport, FoldPlan};
use crate::edf::Recording;
use crate::gcn::ModelConfig;
use crate::graph::{build_graphs, BrainGraph, ConnectivityConfig};

/// Settings shared by every arm of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct StudyConfig {
    pub connectivity: ConnectivityConfig,
    pub model: ModelConfig,
    /// Seeds the fold assignment and the per-iteration training seeds.
    pub fold_seed: u64,
}

pub fn fold_plan(recordings: &[Recording], seed: u64) -> Result<FoldPlan, ExperimentError> {
    let subjects: Vec<_> = recordings.iter().map(|r| (r.subject_id.clone(), r.class_label)).collect();
    make_folds(&subjects, seed)
}

/// Graphs for all recordings, in recording order.
pub fn graphs_for(
    recordings: &[Recording],
    window_seconds: f64,
    connectivity: &ConnectivityConfig,
    omit_channel: Option<&str>,
) -> Result<Vec<BrainGraph>, ExperimentError> {
    let per: Vec<Vec<BrainGraph>> = recordings
        .par_iter()
        .map(|r| build_graphs(r, window_seconds, connectivity, omit_channel))
        .collect::<Result<_, _>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// One cross-validated configuration.
pub fn single_run(
    recordings: &[Recording],
    window_seconds: f64,
    omit_channel: Option<&str>,
    study: &StudyConfig,
    plan: &FoldPlan,
) -> Result<ExperimentReport, ExperimentError> {
    let graphs = graphs_for(recordings, window_seconds, &study.connectivity, omit_channel)?;
    log::info!(
        "{} graphs at {window_seconds} s{}",
        graphs.len(),
        omit_channel.map(|c| format!(", without {c}")).unwrap_or_default()
    );
    run_cv(
        &graphs,
        &study.model,
        plan,
        ConfigDescriptor::new(window_seconds, study.connectivity.use_distance_term, omit_channel),
    )
}

/// One report per window length, all on the same fold plan.
pub fn window_length_sweep(
    recordings: &[Recording],
    lengths: &[f64],
    study: &StudyConfig,
) -> Result<Vec<ExperimentReport>, ExperimentError> {
    let plan = fold_plan(recordings, study.fold_seed)?;
    lengths
        .iter()
        .map(|&w| {
            let mut r = single_run(recordings, w, None, study, &plan)?;
            r.descriptor.label = format!("{w}s");
            Ok(r)
        })
        .collect()
}

/// Coherence-only then combined, for each length, sharing folds and seeds.
pub fn connectivity_ablation(
    recordings: &[Recording],
    lengths: &[f64],
    study: &StudyConfig,
) -> Result<Vec<ExperimentReport>, ExperimentError> {
    let plan = fold_plan(recordings, study.fold_seed)?;
    let mut out = Vec::with_capacity(2 * lengths.len());
    for &w in lengths {
        for use_distance_term in [false, true] {
            let arm = StudyConfig {
                connectivity: ConnectivityConfig {
                    use_distance_term,
                    ..study.connectivity.clone()
                },
                ..study.clone()
            };
            out.push(single_run(recordings, w, None, &arm, &plan)?);
        }
    }
    Ok(out)
}

/// One report per omitted channel at a fixed window length.
pub fn channel_ablation(
    recordings: &[Recording],
    window_seconds: f64,
    channels: &[&str],
    study: &StudyConfig,
) -> Result<Vec<ExperimentReport>, ExperimentError> {
    let plan = fold_plan(recordings, study.fold_seed)?;
    channels
        .iter()
        .map(|c| single_run(recordings, window_seconds, Some(c), study, &plan))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelImportance {
    pub channel: String,
    pub window_accuracy: f64,
    /// Baseline accuracy minus accuracy without the channel.
    pub drop: f64,
}

/// Channel ablation reports ordered from largest to smallest accuracy drop.
pub fn rank_channels(baseline_accuracy: f64, reports: &[ExperimentReport]) -> Vec<ChannelImportance> {
    let mut ranked: Vec<ChannelImportance> = reports
        .iter()
        .filter_map(|r| {
            r.descriptor.omitted_channel.as_ref().map(|c| ChannelImportance {
                channel: c.clone(),
                window_accuracy: r.mean.accuracy,
                drop: baseline_accuracy - r.mean.accuracy,
            })
        })
        .collect();
    ranked.sort_by(|a, b| b.drop.total_cmp(&a.drop).then_with(|| a.channel.cmp(&b.channel)));
    ranked
}

/// Batch size of the synthetic study. The synthetic cohort is small enough
/// that the default batch gives too few updates for the step-decay schedule
/// to converge.
pub const SYNTHETIC_BATCH_SIZE: usize = 1;

/// Study settings for the synthetic cohort: defaults except the batch size.
pub fn synthetic_study(seed: u64) -> StudyConfig {
    StudyConfig {
        model: ModelConfig {
            batch_size: SYNTHETIC_BATCH_SIZE,
            ..ModelConfig::default()
        },
        fold_seed: seed,
        ..StudyConfig::default()
    }
}
