//! Per-window brain networks: distance-corrected coherence as edge weights
//! and log band powers as node features.

mod cache;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::{band_power, Band, DspError, EpochWindow, SegmentSpectra, WelchParams};
use crate::edf::{normalize_label, Recording};
use crate::gcn::DenseMatrix;
use crate::montage::{DistanceMatrix, Montage, MontageError};
use crate::{ClassLabel, SubjectId};

pub use cache::{read_graph_cache, write_graph_cache, GRAPH_CACHE_MAGIC, GRAPH_CACHE_VERSION};

/// Floor added to band powers before the logarithm.
pub const POWER_FLOOR: f64 = 1e-12;

/// Value given to every off-diagonal entry when min-max normalization has no
/// spread to work with.
pub const DEGENERATE_FILL: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Montage(#[from] MontageError),
    #[error("channel {0:?} not present in recording")]
    MissingChannel(String),
    #[error("invalid connectivity config: {0}")]
    InvalidConfig(String),
    #[error("distance matrix covers {distances} channels, window has {window}")]
    ChannelCountMismatch { distances: usize, window: usize },
    #[error("bad graph cache: {0}")]
    Cache(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConnectivityConfig {
    /// Decay constant of the random-coherence term.
    pub k: f64,
    /// Band, in Hz, over which coherence is averaged to one value per pair.
    pub coherence_band: (f64, f64),
    /// Add the normalized distance to the reduced coherence.
    pub use_distance_term: bool,
    pub welch: WelchParams,
}

impl Default for ConnectivityConfig {
    fn default() -> Self {
        Self {
            k: 5.0,
            coherence_band: (1.0, 45.0),
            use_distance_term: true,
            welch: WelchParams::default(),
        }
    }
}

impl ConnectivityConfig {
    pub fn validate(&self, sample_rate: f64) -> Result<(), GraphError> {
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(GraphError::InvalidConfig(format!("k must be positive, got {}", self.k)));
        }
        let (lo, hi) = self.coherence_band;
        if !(lo >= 0.0 && lo < hi && hi <= sample_rate / 2.0) {
            return Err(GraphError::InvalidConfig(format!(
                "coherence band [{lo}, {hi}] Hz must satisfy 0 <= lo < hi <= {}",
                sample_rate / 2.0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrainGraph {
    pub subject_id: SubjectId,
    pub class_label: ClassLabel,
    pub window_index: usize,
    pub channel_labels: Vec<String>,
    /// Symmetric, zero diagonal, entries in `[0, 1]`.
    pub connectivity: DenseMatrix,
    /// `[n_nodes × 6]` log10 band powers in [`Band::ALL`] order.
    pub node_features: DenseMatrix,
}

impl BrainGraph {
    pub fn n_nodes(&self) -> usize {
        self.channel_labels.len()
    }
}

/// `min(exp((1 − d) / k), 1)`.
///
/// For normalized distances `d ∈ [0, 1]` the exponent is never negative, so
/// the clamp is always active and the result is 1.
pub fn random_coherence(d: f64, k: f64) -> f64 {
    random_coherence_raw(d, k).min(1.0)
}

/// `exp((1 − d) / k)` without the clamp.
pub fn random_coherence_raw(d: f64, k: f64) -> f64 {
    ((1.0 - d) / k).exp()
}

/// Coherence in excess of the volume-conduction baseline; may be negative.
pub fn reduced_coherence(c_computed: f64, c_random: f64) -> f64 {
    c_computed - c_random
}

/// Min-max normalizes the off-diagonal entries of a square matrix into
/// `[0, 1]` and zeroes the diagonal. Returns `false` when every off-diagonal
/// entry is equal, in which case they are all set to [`DEGENERATE_FILL`].
pub fn normalize_off_diagonal(m: &mut DenseMatrix) -> bool {
    let n = m.rows;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                lo = lo.min(m.get(i, j));
                hi = hi.max(m.get(i, j));
            }
        }
    }
    let spread = hi - lo;
    let degenerate = !(spread > 1e-12 * hi.abs().max(lo.abs()).max(1.0));
    for i in 0..n {
        for j in 0..n {
            let v = if i == j {
                0.0
            } else if degenerate {
                DEGENERATE_FILL
            } else {
                ((m.get(i, j) - lo) / spread).clamp(0.0, 1.0)
            };
            m.set(i, j, v);
        }
    }
    !degenerate
}

fn check_distances(distances: &DistanceMatrix, n: usize) -> Result<(), GraphError> {
    if distances.len() != n {
        return Err(GraphError::ChannelCountMismatch {
            distances: distances.len(),
            window: n,
        });
    }
    Ok(())
}

fn connectivity_from_spectra(
    spectra: &SegmentSpectra,
    distances: &DistanceMatrix,
    config: &ConnectivityConfig,
) -> Result<DenseMatrix, GraphError> {
    let n = distances.len();
    let (lo, hi) = config.coherence_band;
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let computed = spectra
                .msc(i, j)?
                .mean_over(lo, hi)
                .ok_or_else(|| GraphError::InvalidConfig(format!("no frequency bins inside [{lo}, {hi}] Hz")))?;
            let d = distances.get(i, j);
            let c = reduced_coherence(computed, random_coherence(d, config.k));
            let v = if config.use_distance_term { c + d } else { c };
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    if !normalize_off_diagonal(&mut m) && n > 1 {
        log::debug!("degenerate connectivity normalization; off-diagonal set to {DEGENERATE_FILL}");
    }
    Ok(m)
}

fn features_from_spectra(spectra: &SegmentSpectra, n: usize) -> Result<DenseMatrix, GraphError> {
    let mut f = DenseMatrix::zeros(n, Band::ALL.len());
    for i in 0..n {
        let psd = spectra.psd(i);
        for (b, band) in Band::ALL.iter().enumerate() {
            let (lo, hi) = band.range();
            f.set(i, b, (band_power(&psd, lo, hi)? + POWER_FLOOR).log10());
        }
    }
    Ok(f)
}

/// Normalized connectivity matrix of one window.
pub fn combined_connectivity(
    window: &EpochWindow,
    distances: &DistanceMatrix,
    config: &ConnectivityConfig,
) -> Result<DenseMatrix, GraphError> {
    config.validate(window.sample_rate)?;
    check_distances(distances, window.channels.len())?;
    let channels: Vec<&[f64]> = window.channels.iter().map(Vec::as_slice).collect();
    let spectra = SegmentSpectra::compute(&channels, window.sample_rate, &config.welch)?;
    connectivity_from_spectra(&spectra, distances, config)
}

/// `[n_channels × 6]` matrix of `log10(band power + 1e-12)`.
pub fn node_feature_matrix(window: &EpochWindow, welch: &WelchParams) -> Result<DenseMatrix, GraphError> {
    let channels: Vec<&[f64]> = window.channels.iter().map(Vec::as_slice).collect();
    let spectra = SegmentSpectra::compute(&channels, window.sample_rate, welch)?;
    features_from_spectra(&spectra, channels.len())
}

/// Builds one graph per window using the standard electrode table.
pub fn build_graphs(
    recording: &Recording,
    window_seconds: f64,
    config: &ConnectivityConfig,
    omit_channel: Option<&str>,
) -> Result<Vec<BrainGraph>, GraphError> {
    build_graphs_with_montage(recording, window_seconds, config, omit_channel, Montage::standard())
}

/// As [`build_graphs`] with a caller-supplied electrode table. When
/// `omit_channel` is set that channel is dropped before distances are
/// computed, so they are renormalized over the remaining nodes.
pub fn build_graphs_with_montage(
    recording: &Recording,
    window_seconds: f64,
    config: &ConnectivityConfig,
    omit_channel: Option<&str>,
    montage: &Montage,
) -> Result<Vec<BrainGraph>, GraphError> {
    let mut channels: Vec<&crate::edf::Channel> = recording.channels.iter().collect();
    if let Some(omit) = omit_channel {
        let key = normalize_label(omit);
        let before = channels.len();
        channels.retain(|c| normalize_label(&c.label) != key);
        if channels.len() == before {
            return Err(GraphError::MissingChannel(omit.to_owned()));
        }
    }
    let first = channels.first().ok_or(DspError::RaggedChannels)?;
    let rate = first.sample_rate;
    let len = first.samples.len();
    if channels.iter().any(|c| c.sample_rate != rate || c.samples.len() != len) {
        return Err(DspError::RaggedChannels.into());
    }
    config.validate(rate)?;
    let window_len_f = window_seconds * rate;
    let window_len = window_len_f.round() as usize;
    if !(window_seconds > 0.0) || window_len == 0 || (window_len_f - window_len as f64).abs() > 1e-9 {
        return Err(DspError::InvalidWelch(format!(
            "window of {window_seconds} s is not a whole number of samples at {rate} Hz"
        ))
        .into());
    }
    let n_windows = len / window_len;
    if n_windows == 0 {
        return Err(DspError::WindowTooLong {
            window_seconds,
            needed: window_len,
            available: len,
        }
        .into());
    }
    let labels: Vec<&str> = channels.iter().map(|c| c.label.as_str()).collect();
    let distances = montage.distance_matrix(&labels)?;
    let owned_labels: Vec<String> = labels.iter().map(|s| (*s).to_owned()).collect();

    (0..n_windows)
        .into_par_iter()
        .map(|w| {
            let slices: Vec<&[f64]> = channels
                .iter()
                .map(|c| &c.samples[w * window_len..(w + 1) * window_len])
                .collect();
            let spectra = SegmentSpectra::compute(&slices, rate, &config.welch)?;
            Ok(BrainGraph {
                subject_id: recording.subject_id.clone(),
                class_label: recording.class_label,
                window_index: w,
                channel_labels: owned_labels.clone(),
                connectivity: connectivity_from_spectra(&spectra, &distances, config)?,
                node_features: features_from_spectra(&spectra, slices.len())?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests;
