use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use brainnet::dsp::PreprocessConfig;
use brainnet::experiments::SynthConfig;
use brainnet::gcn::ModelConfig;
use brainnet::graph::ConnectivityConfig;
use brainnet::STANDARD_CHANNELS;
use serde::{Deserialize, Serialize};

pub const DEFAULT_OUTPUT_DIR: &str = "brainnet-out";

/// Everything a run depends on. Loaded from TOML; command-line flags are
/// applied on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub window_seconds: f64,
    pub omit_channel: Option<String>,
    pub seed: u64,
    pub channels: Vec<String>,
    /// Window lengths of the sweep experiment.
    pub sweep_lengths: Vec<f64>,
    /// Window lengths of the connectivity experiment.
    pub connectivity_lengths: Vec<f64>,
    pub preprocess: PreprocessConfig,
    pub connectivity: ConnectivityConfig,
    pub model: ModelConfig,
    pub synthetic: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            output_dir: None,
            window_seconds: 50.0,
            omit_channel: None,
            seed: 0,
            channels: STANDARD_CHANNELS.iter().map(|s| (*s).to_owned()).collect(),
            sweep_lengths: brainnet::WINDOW_LENGTHS.iter().map(|&w| f64::from(w)).collect(),
            connectivity_lengths: brainnet::experiments::CONNECTIVITY_LENGTHS.to_vec(),
            preprocess: PreprocessConfig::default(),
            connectivity: ConnectivityConfig::default(),
            model: ModelConfig::default(),
            synthetic: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        // relative paths in the file are relative to the file
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.manifest, &mut config.output_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    pub fn manifest(&self) -> anyhow::Result<&Path> {
        self.manifest
            .as_deref()
            .context("no manifest given (use --manifest or set `manifest` in the config)")
    }

    pub fn channel_refs(&self) -> Vec<&str> {
        self.channels.iter().map(String::as_str).collect()
    }

    /// Range checks that need no data.
    pub fn check(&self) -> anyhow::Result<()> {
        if self.channels.is_empty() {
            bail!("channel list is empty");
        }
        for w in std::iter::once(&self.window_seconds)
            .chain(&self.sweep_lengths)
            .chain(&self.connectivity_lengths)
        {
            if !(*w > 0.0) {
                bail!("window length must be positive, got {w}");
            }
        }
        if let Some(omit) = &self.omit_channel {
            let key = brainnet::edf::normalize_label(omit);
            if !self.channels.iter().any(|c| brainnet::edf::normalize_label(c) == key) {
                bail!("omitted channel {omit:?} is not among the configured channels");
            }
        }
        if !(self.preprocess.target_rate > 0.0) {
            bail!("target rate must be positive");
        }
        self.connectivity.validate(self.preprocess.target_rate)?;
        self.model.validate()?;
        Ok(())
    }
}

/// The subset of the config that determines graph contents, used to key
/// cache files.
#[derive(Serialize)]
pub struct GraphKey<'a> {
    pub subject_id: &'a str,
    pub source: &'a Path,
    pub channels: &'a [String],
    pub preprocess: &'a PreprocessConfig,
    pub connectivity: &'a ConnectivityConfig,
    pub window_seconds: f64,
    pub omit_channel: Option<&'a str>,
}
