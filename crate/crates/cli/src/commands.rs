use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use brainnet::dsp::preprocess_recording;
use brainnet::edf::{normalize_label, read_header};
use brainnet::experiments::{
    graphs_for, make_folds, plot_csv, rank_channels, run_cv, runs_csv, summary, summary_table, synth_dataset,
    ConfigDescriptor, ExperimentReport, FoldPlan, StudyConfig, FULL_DATA_REFERENCES,
};
use brainnet::graph::{read_graph_cache, BrainGraph};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::files::{write_atomic, write_json, WrittenFiles};
use crate::pipeline::{graphs_for_variants, load_manifest, Variant};

/// Minimum synthetic window and subject accuracy for `run --experiment synthetic`.
pub const SYNTHETIC_GATE: f64 = 0.90;

/// Result of a command that ran to completion.
pub enum Outcome {
    Success,
    /// Checks failed; exit code 1.
    Failed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Single,
    Sweep,
    Connectivity,
    Channels,
    Synthetic,
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::Single => "single",
            Experiment::Sweep => "sweep",
            Experiment::Connectivity => "connectivity",
            Experiment::Channels => "channels",
            Experiment::Synthetic => "synthetic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Csv,
    Json,
}

#[derive(Serialize)]
struct RecordingStatus {
    subject_id: String,
    file: PathBuf,
    usable: bool,
    problems: Vec<String>,
}

fn check_recording(path: &Path, channels: &[String]) -> Vec<String> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) => return vec![format!("cannot open {}: {e}", path.display())],
    };
    let (header, signals) = match read_header(&mut std::io::BufReader::new(file)) {
        Ok(h) => h,
        Err(e) => return vec![format!("bad header: {e}")],
    };
    let mut problems = Vec::new();
    let have: Vec<String> = signals
        .iter()
        .filter(|s| !s.is_annotation())
        .map(|s| normalize_label(&s.label))
        .collect();
    for c in channels {
        if !have.contains(&normalize_label(c)) {
            problems.push(format!("missing channel {c}"));
        }
    }
    if header.n_data_records == 0 {
        problems.push("no data records".into());
    }
    if let Ok(len) = std::fs::metadata(path).map(|m| m.len()) {
        let record_bytes: u64 = signals.iter().map(|s| 2 * s.samples_per_record as u64).sum();
        if let Ok(n) = u64::try_from(header.n_data_records) {
            let needed = header.header_bytes as u64 + n * record_bytes;
            if len < needed {
                problems.push(format!("file holds {len} bytes, header declares {needed}"));
            }
        }
    }
    problems
}

pub fn validate(config: &RunConfig) -> anyhow::Result<Outcome> {
    let mut config_problems = Vec::new();
    if let Err(e) = config.check() {
        config_problems.push(format!("config: {e:#}"));
    }
    let entries = load_manifest(config)?;
    if entries.is_empty() {
        println!("no recordings");
        return Ok(Outcome::Failed("no recordings".into()));
    }
    let statuses: Vec<RecordingStatus> = entries
        .iter()
        .map(|e| {
            let problems = check_recording(&e.file_path, &config.channels);
            RecordingStatus {
                subject_id: e.subject_id.to_string(),
                file: e.file_path.clone(),
                usable: problems.is_empty(),
                problems,
            }
        })
        .collect();
    for s in &statuses {
        if s.usable {
            println!("usable    {:<12} {}", s.subject_id, s.file.display());
        } else {
            println!("unusable  {:<12} {} ({})", s.subject_id, s.file.display(), s.problems.join("; "));
        }
    }
    for p in &config_problems {
        println!("{p}");
    }
    let unusable: Vec<&str> = statuses.iter().filter(|s| !s.usable).map(|s| s.subject_id.as_str()).collect();
    if !unusable.is_empty() {
        return Ok(Outcome::Failed(format!("unusable recordings: {}", unusable.join(", "))));
    }
    if !config_problems.is_empty() {
        return Ok(Outcome::Failed(config_problems.join("; ")));
    }
    Ok(Outcome::Success)
}

fn base_variant(config: &RunConfig) -> Variant {
    Variant {
        window_seconds: config.window_seconds,
        omit_channel: config.omit_channel.clone(),
        connectivity: config.connectivity.clone(),
    }
}

pub fn preprocess(config: &RunConfig) -> anyhow::Result<Outcome> {
    config.check()?;
    let entries = load_manifest(config)?;
    if entries.is_empty() {
        return Ok(Outcome::Failed("no recordings".into()));
    }
    let written = WrittenFiles::default();
    let result = (|| {
        let (graphs, logs) = graphs_for_variants(config, &entries, &[base_variant(config)], true, &written)?;
        let log_path = config.output_dir().join("preprocess_log.json");
        write_json(&log_path, &json!({ "config": config, "recordings": logs }))?;
        written.push(log_path);
        Ok::<_, anyhow::Error>(graphs[0].len())
    })();
    match result {
        Ok(n) => {
            println!("{} recordings, {n} graphs written to {}", entries.len(), config.output_dir().join("cache").display());
            Ok(Outcome::Success)
        }
        Err(e) => {
            written.remove_all();
            Err(e)
        }
    }
}

fn subjects_of(graph_sets: &[&[BrainGraph]]) -> Vec<(brainnet::SubjectId, brainnet::ClassLabel)> {
    let mut seen = BTreeMap::new();
    for g in graph_sets.iter().flat_map(|s| s.iter()) {
        seen.entry(g.subject_id.clone()).or_insert(g.class_label);
    }
    seen.into_iter().collect()
}

struct Study {
    reports: Vec<ExperimentReport>,
    plan: FoldPlan,
    extra: serde_json::Value,
}

fn run_manifest_study(config: &RunConfig, experiment: Experiment) -> anyhow::Result<Study> {
    let entries = load_manifest(config)?;
    if entries.is_empty() {
        anyhow::bail!("manifest lists no recordings");
    }
    let arm = |window_seconds: f64, omit: Option<&str>, use_distance_term: bool| Variant {
        window_seconds,
        omit_channel: omit.map(str::to_owned),
        connectivity: brainnet::graph::ConnectivityConfig {
            use_distance_term,
            ..config.connectivity.clone()
        },
    };
    let distance = config.connectivity.use_distance_term;
    let variants: Vec<Variant> = match experiment {
        Experiment::Single => vec![base_variant(config)],
        Experiment::Sweep => config.sweep_lengths.iter().map(|&w| arm(w, None, distance)).collect(),
        Experiment::Connectivity => config
            .connectivity_lengths
            .iter()
            .flat_map(|&w| [arm(w, None, false), arm(w, None, true)])
            .collect(),
        Experiment::Channels => std::iter::once(arm(config.window_seconds, None, distance))
            .chain(config.channels.iter().map(|c| arm(config.window_seconds, Some(c), distance)))
            .collect(),
        Experiment::Synthetic => unreachable!("synthetic runs without a manifest"),
    };
    let written = WrittenFiles::default();
    let (graph_sets, _) = graphs_for_variants(config, &entries, &variants, false, &written)?;
    let refs: Vec<&[BrainGraph]> = graph_sets.iter().map(Vec::as_slice).collect();
    let plan = make_folds(&subjects_of(&refs), config.seed)?;

    let mut reports = Vec::with_capacity(variants.len());
    for (v, graphs) in variants.iter().zip(&graph_sets) {
        let mut descriptor =
            ConfigDescriptor::new(v.window_seconds, v.connectivity.use_distance_term, v.omit_channel.as_deref());
        if experiment == Experiment::Sweep {
            descriptor.label = format!("{}s", v.window_seconds);
        }
        if experiment == Experiment::Channels && v.omit_channel.is_none() {
            descriptor.label = "all channels".into();
        }
        log::info!("running {} ({} graphs)", descriptor.label, graphs.len());
        reports.push(run_cv(graphs, &config.model, &plan, descriptor)?);
    }
    let mut extra = json!({});
    if experiment == Experiment::Channels {
        let baseline = reports.remove(0);
        extra = json!({
            "baseline": { "window_accuracy": baseline.mean.accuracy, "subject_accuracy": baseline.subject_accuracy },
            "ranking": rank_channels(baseline.mean.accuracy, &reports),
        });
    }
    Ok(Study { reports, plan, extra })
}

fn run_synthetic(config: &RunConfig) -> anyhow::Result<(Study, bool)> {
    let synth = brainnet::experiments::SynthConfig {
        seed: config.seed,
        ..config.synthetic.clone()
    };
    let raw = synth_dataset(&synth);
    let recordings = raw
        .iter()
        .map(|r| preprocess_recording(r, &config.preprocess))
        .collect::<Result<Vec<_>, _>>()?;
    let study = StudyConfig {
        connectivity: config.connectivity.clone(),
        model: brainnet::gcn::ModelConfig {
            batch_size: brainnet::experiments::SYNTHETIC_BATCH_SIZE,
            ..config.model.clone()
        },
        fold_seed: config.seed,
    };
    let graphs = graphs_for(&recordings, config.window_seconds, &study.connectivity, config.omit_channel.as_deref())?;
    let plan = make_folds(&subjects_of(&[&graphs]), config.seed)?;
    let report = run_cv(
        &graphs,
        &study.model,
        &plan,
        ConfigDescriptor::new(
            config.window_seconds,
            study.connectivity.use_distance_term,
            config.omit_channel.as_deref(),
        ),
    )?;
    let passed = report.mean.accuracy >= SYNTHETIC_GATE && report.subject_accuracy >= SYNTHETIC_GATE;
    let extra = json!({
        "gate": SYNTHETIC_GATE,
        "passed": passed,
        "synthetic": synth,
        "model": study.model,
    });
    Ok((
        Study {
            reports: vec![report],
            plan,
            extra,
        },
        passed,
    ))
}

pub fn run(config: &RunConfig, experiment: Experiment, jobs: Option<usize>) -> anyhow::Result<Outcome> {
    config.check()?;
    let (study, gate) = match experiment {
        Experiment::Synthetic => {
            let (s, passed) = run_synthetic(config)?;
            (s, Some(passed))
        }
        e => (run_manifest_study(config, e)?, None),
    };
    let dir = config.output_dir().join(experiment.name());
    let references: Vec<_> = FULL_DATA_REFERENCES
        .iter()
        .filter(|t| experiment != Experiment::Synthetic && t.study == experiment.name())
        .filter_map(|t| {
            study.reports.iter().find(|r| t.matches_config(r)).map(|r| {
                json!({
                    "target": t,
                    "window_accuracy": r.mean.accuracy,
                    "subject_accuracy": r.subject_accuracy,
                    "met": t.is_met_by(r),
                })
            })
        })
        .collect();
    write_atomic(&dir.join("runs.csv"), runs_csv(&study.reports)?.as_bytes())?;
    write_atomic(&dir.join("plot.csv"), plot_csv(&study.reports)?.as_bytes())?;
    write_json(&dir.join("reports.json"), &study.reports)?;
    write_json(
        &dir.join("summary.json"),
        &json!({
            "experiment": experiment,
            "configurations": summary(&study.reports),
            "full_data_references": references,
            "details": study.extra,
        }),
    )?;
    write_json(
        &dir.join("run_metadata.json"),
        &json!({
            "experiment": experiment,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "jobs": jobs,
            "fold_plan": study.plan,
            "fold_policy": "fold assignments fixed across iterations; each iteration reseeds model initialization and batch shuffling with iteration_seeds[i] + fold",
        }),
    )?;
    print!("{}", summary_table(&study.reports));
    if let Some(r) = study.extra.get("ranking") {
        for c in r.as_array().into_iter().flatten() {
            println!("drop without {}: {:.3}", c["channel"].as_str().unwrap_or("?"), c["drop"].as_f64().unwrap_or(f64::NAN));
        }
    }
    println!("reports written to {}", dir.display());
    match gate {
        Some(false) => Ok(Outcome::Failed(format!("synthetic accuracy below {SYNTHETIC_GATE}"))),
        _ => Ok(Outcome::Success),
    }
}

fn cache_files(input: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if input.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(input)
            .with_context(|| format!("listing {}", input.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "bgc"))
            .collect();
        files.sort();
        Ok(files)
    } else {
        Ok(vec![input.to_path_buf()])
    }
}

fn graphs_csv(graphs: &[BrainGraph]) -> String {
    let mut w = String::new();
    w.push_str("subject_id,window_index,class_label,matrix,row,col,value\n");
    for g in graphs {
        for (name, m) in [("connectivity", &g.connectivity), ("features", &g.node_features)] {
            for r in 0..m.rows {
                for c in 0..m.cols {
                    w.push_str(&format!(
                        "{},{},{},{name},{r},{c},{}\n",
                        g.subject_id,
                        g.window_index,
                        g.class_label,
                        m.get(r, c)
                    ));
                }
            }
        }
    }
    w
}

pub fn export(input: &Path, format: ExportFormat, output: Option<&Path>) -> anyhow::Result<Outcome> {
    let files = cache_files(input)?;
    if files.is_empty() {
        anyhow::bail!("no graph cache files under {}", input.display());
    }
    let mut graphs = Vec::new();
    for f in &files {
        let bytes = std::fs::read(f).with_context(|| format!("reading {}", f.display()))?;
        graphs.extend(read_graph_cache(&bytes).with_context(|| format!("decoding {}", f.display()))?);
    }
    let text = match format {
        ExportFormat::Json => serde_json::to_string_pretty(&graphs)? + "\n",
        ExportFormat::Csv => graphs_csv(&graphs),
    };
    match output {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(Outcome::Success)
}
