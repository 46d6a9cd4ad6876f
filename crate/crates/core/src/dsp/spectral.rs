//! Welch power and cross spectra, magnitude-squared coherence, band power.
//!
//! Segments are mean-detrended and tapered before the FFT. PSD values use
//! the one-sided density convention (units²/Hz), so integrating a PSD over
//! frequency returns the variance of a zero-mean signal.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::DspError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    Hann,
    Hamming,
    Rectangular,
}

impl Taper {
    /// Periodic (DFT-even) window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let x = 2.0 * PI * i as f64 / n as f64;
                match self {
                    Taper::Hann => 0.5 - 0.5 * x.cos(),
                    Taper::Hamming => 0.54 - 0.46 * x.cos(),
                    Taper::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WelchParams {
    pub seg_seconds: f64,
    pub overlap_fraction: f64,
    pub taper: Taper,
}

impl Default for WelchParams {
    fn default() -> Self {
        Self {
            seg_seconds: 2.0,
            overlap_fraction: 0.5,
            taper: Taper::Hann,
        }
    }
}

impl WelchParams {
    /// Segment length and hop in samples.
    pub fn layout(&self, sample_rate: f64) -> Result<(usize, usize), DspError> {
        if !(self.seg_seconds > 0.0) || !(0.0..1.0).contains(&self.overlap_fraction) || !(sample_rate > 0.0) {
            return Err(DspError::InvalidWelch(format!(
                "segment {} s, overlap {}, rate {} Hz",
                self.seg_seconds, self.overlap_fraction, sample_rate
            )));
        }
        let seg_len = (self.seg_seconds * sample_rate).round() as usize;
        if seg_len < 2 {
            return Err(DspError::InvalidWelch(format!("segment of {seg_len} samples")));
        }
        let overlap = (self.overlap_fraction * seg_len as f64).round() as usize;
        Ok((seg_len, (seg_len - overlap).max(1)))
    }

    pub fn n_segments(&self, signal_len: usize, sample_rate: f64) -> Result<usize, DspError> {
        let (seg_len, step) = self.layout(sample_rate)?;
        if signal_len < seg_len {
            return Err(DspError::SegmentTooLong {
                needed: seg_len,
                available: signal_len,
            });
        }
        Ok(1 + (signal_len - seg_len) / step)
    }
}

/// Real-valued one-sided spectrum on a uniform grid starting at 0 Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    pub n_segments: usize,
}

impl SpectralEstimate {
    pub fn resolution(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0)
    }

    pub fn nyquist(&self) -> f64 {
        self.frequencies.last().copied().unwrap_or(0.0)
    }

    /// Mean value over grid points inside `[f_lo, f_hi]`.
    pub fn mean_over(&self, f_lo: f64, f_hi: f64) -> Option<f64> {
        let (sum, n) = self
            .frequencies
            .iter()
            .zip(&self.values)
            .filter(|(f, _)| **f >= f_lo && **f <= f_hi)
            .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

/// One-sided complex cross-spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSpectrum {
    pub frequencies: Vec<f64>,
    pub values: Vec<Complex<f64>>,
    pub n_segments: usize,
}

/// Tapered segment FFTs of one or more equal-length channels, reused for
/// every auto and cross spectrum among them.
pub(crate) struct SegmentSpectra {
    /// `bins[channel][segment][k]` for `k` in `0..=seg_len/2`.
    bins: Vec<Vec<Vec<Complex<f64>>>>,
    seg_len: usize,
    sample_rate: f64,
    /// `1 / (fs · Σw²)`
    scale: f64,
}

impl SegmentSpectra {
    pub(crate) fn compute(channels: &[&[f64]], sample_rate: f64, params: &WelchParams) -> Result<Self, DspError> {
        let (seg_len, step) = params.layout(sample_rate)?;
        let len = channels.first().map_or(0, |c| c.len());
        if let Some(c) = channels.iter().find(|c| c.len() != len) {
            return Err(DspError::LengthMismatch(len, c.len()));
        }
        let n_seg = params.n_segments(len, sample_rate)?;
        let taper = params.taper.coefficients(seg_len);
        let window_power: f64 = taper.iter().map(|w| w * w).sum();
        let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(seg_len);
        let n_bins = seg_len / 2 + 1;
        let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        let mut buf = vec![Complex::default(); seg_len];

        let bins = channels
            .iter()
            .map(|signal| {
                (0..n_seg)
                    .map(|s| {
                        let seg = &signal[s * step..s * step + seg_len];
                        let mean = seg.iter().sum::<f64>() / seg_len as f64;
                        for ((b, x), w) in buf.iter_mut().zip(seg).zip(&taper) {
                            *b = Complex::new((x - mean) * w, 0.0);
                        }
                        fft.process_with_scratch(&mut buf, &mut scratch);
                        buf[..n_bins].to_vec()
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            bins,
            seg_len,
            sample_rate,
            scale: 1.0 / (sample_rate * window_power),
        })
    }

    pub(crate) fn n_segments(&self) -> usize {
        self.bins.first().map_or(0, Vec::len)
    }

    fn frequencies(&self) -> Vec<f64> {
        let df = self.sample_rate / self.seg_len as f64;
        (0..=self.seg_len / 2).map(|k| k as f64 * df).collect()
    }

    /// Factor 2 for bins whose negative-frequency mirror is folded in.
    fn one_sided(&self, k: usize) -> f64 {
        if k == 0 || (self.seg_len.is_multiple_of(2) && k == self.seg_len / 2) {
            1.0
        } else {
            2.0
        }
    }

    pub(crate) fn cross(&self, a: usize, b: usize) -> Vec<Complex<f64>> {
        let n_bins = self.seg_len / 2 + 1;
        let n_seg = self.n_segments() as f64;
        (0..n_bins)
            .map(|k| {
                let sum: Complex<f64> = self.bins[a]
                    .iter()
                    .zip(&self.bins[b])
                    .map(|(sa, sb)| sa[k] * sb[k].conj())
                    .sum();
                sum * (self.scale * self.one_sided(k) / n_seg)
            })
            .collect()
    }

    pub(crate) fn psd(&self, a: usize) -> SpectralEstimate {
        SpectralEstimate {
            frequencies: self.frequencies(),
            values: self.cross(a, a).into_iter().map(|c| c.re).collect(),
            n_segments: self.n_segments(),
        }
    }

    pub(crate) fn msc(&self, a: usize, b: usize) -> Result<SpectralEstimate, DspError> {
        if self.n_segments() < 2 {
            return Err(DspError::TooFewSegments(self.n_segments()));
        }
        let saa = self.psd(a).values;
        let sbb = self.psd(b).values;
        let sab = self.cross(a, b);
        let floor_a = saa.iter().fold(0.0f64, |m, v| m.max(*v)) * 1e-20;
        let floor_b = sbb.iter().fold(0.0f64, |m, v| m.max(*v)) * 1e-20;
        let values = sab
            .iter()
            .zip(saa.iter().zip(&sbb))
            .map(|(c, (pa, pb))| {
                if *pa <= floor_a || *pb <= floor_b {
                    0.0
                } else {
                    (c.norm_sqr() / (pa * pb)).clamp(0.0, 1.0)
                }
            })
            .collect();
        Ok(SpectralEstimate {
            frequencies: self.frequencies(),
            values,
            n_segments: self.n_segments(),
        })
    }
}

/// Welch power spectral density.
pub fn welch_psd(signal: &[f64], sample_rate: f64, params: &WelchParams) -> Result<SpectralEstimate, DspError> {
    Ok(SegmentSpectra::compute(&[signal], sample_rate, params)?.psd(0))
}

/// Welch cross-spectral density `S_ab`.
pub fn cross_spectrum(a: &[f64], b: &[f64], sample_rate: f64, params: &WelchParams) -> Result<CrossSpectrum, DspError> {
    if a.len() != b.len() {
        return Err(DspError::LengthMismatch(a.len(), b.len()));
    }
    let spectra = SegmentSpectra::compute(&[a, b], sample_rate, params)?;
    Ok(CrossSpectrum {
        frequencies: spectra.frequencies(),
        values: spectra.cross(0, 1),
        n_segments: spectra.n_segments(),
    })
}

/// Magnitude-squared coherence `|S_ab|² / (S_aa S_bb)`; zero where either
/// signal carries no power.
pub fn msc(a: &[f64], b: &[f64], sample_rate: f64, params: &WelchParams) -> Result<SpectralEstimate, DspError> {
    if a.len() != b.len() {
        return Err(DspError::LengthMismatch(a.len(), b.len()));
    }
    SegmentSpectra::compute(&[a, b], sample_rate, params)?.msc(0, 1)
}

/// Canonical EEG bands used as node features, in feature-column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Band {
    Delta,
    Theta,
    Alpha,
    LowBeta,
    HighBeta,
    Gamma,
}

impl Band {
    pub const ALL: [Band; 6] = [
        Band::Delta,
        Band::Theta,
        Band::Alpha,
        Band::LowBeta,
        Band::HighBeta,
        Band::Gamma,
    ];

    /// `[f_lo, f_hi)` in Hz before any Nyquist clipping.
    pub fn range(self) -> (f64, f64) {
        match self {
            Band::Delta => (1.0, 4.0),
            Band::Theta => (4.0, 8.0),
            Band::Alpha => (8.0, 13.0),
            Band::LowBeta => (13.0, 16.0),
            Band::HighBeta => (16.0, 30.0),
            Band::Gamma => (30.0, 150.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Band::Delta => "delta",
            Band::Theta => "theta",
            Band::Alpha => "alpha",
            Band::LowBeta => "low_beta",
            Band::HighBeta => "high_beta",
            Band::Gamma => "gamma",
        }
    }
}

/// Integration limits of `[f_lo, f_hi)` after clipping to Nyquist.
pub fn clipped_band(f_lo: f64, f_hi: f64, nyquist: f64) -> Result<(f64, f64), DspError> {
    if !(f_lo < f_hi) || f_lo < 0.0 {
        return Err(DspError::InvalidBand { f_lo, f_hi });
    }
    if f_lo >= nyquist {
        return Err(DspError::EmptyBand {
            f_lo,
            f_hi,
            nyquist_hz: nyquist,
        });
    }
    Ok((f_lo, f_hi.min(nyquist)))
}

/// Trapezoidal integral of a PSD over `[f_lo, f_hi) ∩ [0, Nyquist]`, with
/// linear interpolation at band edges that fall between grid points.
pub fn band_power(psd: &SpectralEstimate, f_lo: f64, f_hi: f64) -> Result<f64, DspError> {
    let (lo, hi) = clipped_band(f_lo, f_hi, psd.nyquist())?;
    let f = &psd.frequencies;
    let v = &psd.values;
    let interp = |x: f64| -> f64 {
        let df = psd.resolution();
        let i = ((x / df).floor() as usize).min(f.len() - 2);
        let t = (x - f[i]) / df;
        v[i] * (1.0 - t) + v[i + 1] * t
    };
    let mut total = 0.0;
    let mut prev = (lo, interp(lo));
    for (fk, vk) in f.iter().zip(v).filter(|(fk, _)| **fk > lo && **fk < hi) {
        total += 0.5 * (prev.1 + vk) * (fk - prev.0);
        prev = (*fk, *vk);
    }
    total += 0.5 * (prev.1 + interp(hi)) * (hi - prev.0);
    Ok(total)
}
