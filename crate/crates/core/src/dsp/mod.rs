//! Filtering, resampling, windowing, and spectral estimation.

mod filter;
mod preprocess;
mod resample;
mod segment;
mod spectral;

pub use filter::{highpass, notch, Biquad, FilterKind, FilterSpec, SosFilter};
pub use preprocess::{preprocess_recording, PreprocessConfig};
pub use resample::{resample, Resampler};
pub use segment::{segment, EpochWindow};
pub(crate) use spectral::SegmentSpectra;
pub use spectral::{
    band_power, clipped_band, cross_spectrum, msc, welch_psd, Band, CrossSpectrum, SpectralEstimate, Taper,
    WelchParams,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DspError {
    #[error("cutoff {cutoff_hz} Hz outside (0, {nyquist_hz}) Hz")]
    InvalidCutoff { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("invalid filter parameter: {0}")]
    InvalidFilter(String),
    #[error("upsampling requested ({from_hz} Hz -> {to_hz} Hz)")]
    UpsamplingRequested { from_hz: f64, to_hz: f64 },
    #[error("sample rates {from_hz} Hz -> {to_hz} Hz do not form a rational ratio")]
    IrrationalRatio { from_hz: f64, to_hz: f64 },
    #[error("recording of {available} samples is shorter than one {window_seconds} s window ({needed} samples)")]
    WindowTooLong {
        window_seconds: f64,
        needed: usize,
        available: usize,
    },
    #[error("channels differ in length or sample rate")]
    RaggedChannels,
    #[error("segment of {needed} samples exceeds signal length {available}")]
    SegmentTooLong { needed: usize, available: usize },
    #[error("coherence needs at least 2 Welch segments, got {0}")]
    TooFewSegments(usize),
    #[error("signals differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("band [{f_lo}, {f_hi}) Hz lies entirely above Nyquist {nyquist_hz} Hz")]
    EmptyBand { f_lo: f64, f_hi: f64, nyquist_hz: f64 },
    #[error("invalid band [{f_lo}, {f_hi})")]
    InvalidBand { f_lo: f64, f_hi: f64 },
    #[error("invalid Welch parameters: {0}")]
    InvalidWelch(String),
}
