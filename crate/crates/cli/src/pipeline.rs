//! Manifest → EDF → preprocessing → graph cache.

use std::path::{Path, PathBuf};

use anyhow::Context;
use brainnet::dsp::preprocess_recording;
use brainnet::edf::{read_edf_file, read_manifest, select_channels, ManifestEntry, Recording};
use brainnet::graph::{build_graphs, read_graph_cache, write_graph_cache, BrainGraph, ConnectivityConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{GraphKey, RunConfig};
use crate::files::{content_hash, sanitize, write_atomic, WrittenFiles};

/// One set of graph-building settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub window_seconds: f64,
    pub omit_channel: Option<String>,
    pub connectivity: ConnectivityConfig,
}

#[derive(Debug, Serialize)]
pub struct RecordingLog {
    pub subject_id: String,
    pub class_label: String,
    pub source: PathBuf,
    pub channels: Vec<String>,
    pub source_rates_hz: Vec<f64>,
    pub filters: Vec<String>,
    pub variants: Vec<VariantLog>,
}

#[derive(Debug, Serialize)]
pub struct VariantLog {
    pub window_seconds: f64,
    pub omit_channel: Option<String>,
    pub use_distance_term: bool,
    pub windows: usize,
    pub cache_file: PathBuf,
    pub reused: bool,
}

pub fn load_manifest(config: &RunConfig) -> anyhow::Result<Vec<ManifestEntry>> {
    let path = config.manifest()?;
    read_manifest(path).with_context(|| format!("manifest {}", path.display()))
}

/// Reads one recording's configured channels, in configured order.
pub fn load_recording(entry: &ManifestEntry, channels: &[&str]) -> anyhow::Result<Recording> {
    let path = &entry.file_path;
    if !path.exists() {
        anyhow::bail!("recording file {} does not exist", path.display());
    }
    let file = read_edf_file(path, Some(channels)).with_context(|| format!("reading {}", path.display()))?;
    let rec = file.into_recording(entry.subject_id.clone(), entry.class_label);
    select_channels(&rec, channels).with_context(|| format!("selecting channels of {}", path.display()))
}

pub fn cache_path(config: &RunConfig, entry: &ManifestEntry, variant: &Variant) -> PathBuf {
    let key = GraphKey {
        subject_id: entry.subject_id.as_str(),
        source: &entry.file_path,
        channels: &config.channels,
        preprocess: &config.preprocess,
        connectivity: &variant.connectivity,
        window_seconds: variant.window_seconds,
        omit_channel: variant.omit_channel.as_deref(),
    };
    let hash = content_hash(&key);
    config
        .output_dir()
        .join("cache")
        .join(format!("{}-{}.bgc", sanitize(entry.subject_id.as_str()), &hash[..16]))
}

fn read_cache(path: &Path) -> anyhow::Result<Vec<BrainGraph>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading cache {}", path.display()))?;
    read_graph_cache(&bytes).with_context(|| format!("decoding cache {}", path.display()))
}

/// Graphs for every manifest entry and variant, as `[variant][graph]` with
/// graphs in manifest order. Existing caches are reused unless `rebuild`.
pub fn graphs_for_variants(
    config: &RunConfig,
    entries: &[ManifestEntry],
    variants: &[Variant],
    rebuild: bool,
    written: &WrittenFiles,
) -> anyhow::Result<(Vec<Vec<BrainGraph>>, Vec<RecordingLog>)> {
    let channels = config.channel_refs();
    let per_entry: Vec<(Vec<Vec<BrainGraph>>, RecordingLog)> = entries
        .par_iter()
        .map(|entry| {
            let paths: Vec<PathBuf> = variants.iter().map(|v| cache_path(config, entry, v)).collect();
            let mut recording: Option<Recording> = None;
            let mut source_rates = Vec::new();
            let mut graphs = Vec::with_capacity(variants.len());
            let mut logs = Vec::with_capacity(variants.len());
            for (variant, path) in variants.iter().zip(&paths) {
                let reused = !rebuild && path.exists();
                let gs = if reused {
                    read_cache(path)?
                } else {
                    if recording.is_none() {
                        let raw = load_recording(entry, &channels)?;
                        source_rates = raw.channels.iter().map(|c| c.sample_rate).collect();
                        recording = Some(
                            preprocess_recording(&raw, &config.preprocess)
                                .with_context(|| format!("preprocessing {}", entry.file_path.display()))?,
                        );
                    }
                    let rec = recording.as_ref().expect("loaded above");
                    let gs = build_graphs(
                        rec,
                        variant.window_seconds,
                        &variant.connectivity,
                        variant.omit_channel.as_deref(),
                    )
                    .with_context(|| format!("building graphs for {}", entry.subject_id))?;
                    write_atomic(path, &write_graph_cache(&gs))?;
                    written.push(path.clone());
                    gs
                };
                logs.push(VariantLog {
                    window_seconds: variant.window_seconds,
                    omit_channel: variant.omit_channel.clone(),
                    use_distance_term: variant.connectivity.use_distance_term,
                    windows: gs.len(),
                    cache_file: path.clone(),
                    reused,
                });
                graphs.push(gs);
            }
            let filters = config
                .preprocess
                .highpass
                .iter()
                .chain(&config.preprocess.notch)
                .map(|f| format!("{f:?}"))
                .chain(std::iter::once(format!("resample to {} Hz", config.preprocess.target_rate)))
                .collect();
            Ok((
                graphs,
                RecordingLog {
                    subject_id: entry.subject_id.to_string(),
                    class_label: entry.class_label.to_string(),
                    source: entry.file_path.clone(),
                    channels: config.channels.clone(),
                    source_rates_hz: source_rates,
                    filters,
                    variants: logs,
                },
            ))
        })
        .collect::<anyhow::Result<_>>()?;

    let mut out: Vec<Vec<BrainGraph>> = vec![Vec::new(); variants.len()];
    let mut logs = Vec::with_capacity(per_entry.len());
    for (graphs, log) in per_entry {
        for (slot, gs) in out.iter_mut().zip(graphs) {
            slot.extend(gs);
        }
        logs.push(log);
    }
    Ok((out, logs))
}
