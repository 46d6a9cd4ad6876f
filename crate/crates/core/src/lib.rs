//! Window-level EEG brain graphs and a graph convolutional classifier for
//! insomnia versus control recordings.
//!
//! The pipeline runs in the order of the modules below:
//!
//! * [`edf`] parses EDF/EDF+ recordings into physical-unit channels and
//!   attaches subject metadata from a sidecar manifest.
//! * [`dsp`] high-pass and notch filters, resamples to 250 Hz, cuts
//!   non-overlapping windows and estimates Welch spectra and coherence.
//! * [`montage`] places each bipolar channel at the spherical midpoint of its
//!   two 10-20 electrodes and measures normalized geodesic distances.
//! * [`graph`] combines coherence, volume-conduction correction and spatial
//!   distance into a per-window connectivity matrix with band-power node
//!   features.
//! * [`gcn`] is a small dense graph convolutional network with analytic
//!   gradients and step-decay SGD.
//! * [`experiments`] runs subject-independent cross-validation and the window
//!   length, connectivity, and channel ablation studies.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dsp;
pub mod edf;
pub mod experiments;
pub mod gcn;
pub mod graph;
pub mod montage;
mod subject;

pub use subject::{ClassLabel, ParseClassLabelError, SubjectId};

/// Channel set used throughout: four right-hemisphere bipolar derivations and
/// one referential channel.
pub const STANDARD_CHANNELS: [&str; 5] = ["Fp2-F4", "F4-C4", "C4-P4", "P4-O2", "C4-A1"];

/// Sample rate every recording is brought to before windowing.
pub const TARGET_SAMPLE_RATE: f64 = 250.0;

/// Window lengths, in seconds, swept by the window length study.
pub const WINDOW_LENGTHS: [u32; 5] = [10, 30, 50, 70, 90];
