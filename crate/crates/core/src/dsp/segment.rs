use serde::{Deserialize, Serialize};

use super::DspError;
use crate::edf::Recording;
use crate::{ClassLabel, SubjectId};

/// A fixed-length, non-overlapping slice of every channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochWindow {
    pub subject_id: SubjectId,
    pub class_label: ClassLabel,
    pub window_index: usize,
    pub duration_seconds: f64,
    pub sample_rate: f64,
    pub channel_labels: Vec<String>,
    /// `channels[c][t]`, every row `duration × sample_rate` long.
    pub channels: Vec<Vec<f64>>,
}

impl EpochWindow {
    pub fn n_samples(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }
}

/// Cut a recording into consecutive windows of `window_seconds`. The
/// trailing remainder shorter than a full window is dropped.
pub fn segment(recording: &Recording, window_seconds: f64) -> Result<Vec<EpochWindow>, DspError> {
    let first = recording.channels.first().ok_or(DspError::RaggedChannels)?;
    let rate = first.sample_rate;
    let len = first.samples.len();
    if recording
        .channels
        .iter()
        .any(|c| c.sample_rate != rate || c.samples.len() != len)
    {
        return Err(DspError::RaggedChannels);
    }
    let window_len_f = window_seconds * rate;
    let window_len = window_len_f.round() as usize;
    if !(window_seconds > 0.0) || window_len == 0 || (window_len_f - window_len as f64).abs() > 1e-9 {
        return Err(DspError::InvalidWelch(format!(
            "window of {window_seconds} s is not a whole number of samples at {rate} Hz"
        )));
    }
    let n_windows = len / window_len;
    if n_windows == 0 {
        return Err(DspError::WindowTooLong {
            window_seconds,
            needed: window_len,
            available: len,
        });
    }
    let labels: Vec<String> = recording.channels.iter().map(|c| c.label.clone()).collect();
    Ok((0..n_windows)
        .map(|w| EpochWindow {
            subject_id: recording.subject_id.clone(),
            class_label: recording.class_label,
            window_index: w,
            duration_seconds: window_seconds,
            sample_rate: rate,
            channel_labels: labels.clone(),
            channels: recording
                .channels
                .iter()
                .map(|c| c.samples[w * window_len..(w + 1) * window_len].to_vec())
                .collect(),
        })
        .collect())
}
