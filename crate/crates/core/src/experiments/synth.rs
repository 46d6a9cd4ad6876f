//! Synthetic two-class EEG cohort with a known discriminative structure.
//!
//! Every channel is independent pink noise. Insomnia subjects additionally
//! carry one band-limited beta source shared by the coupled channels, which
//! raises both their beta power and their mutual coherence. Control subjects
//! (with `decoy` on) carry an independent beta source of the same strength on
//! a single coupled channel picked at random, so no one channel's power
//! separates the classes on its own.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::edf::{Channel, Recording};
use crate::{ClassLabel, SubjectId, STANDARD_CHANNELS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_per_class: usize,
    pub duration_seconds: f64,
    pub sample_rate: f64,
    pub seed: u64,
    pub channels: Vec<String>,
    /// Channels sharing the insomnia beta source.
    pub coupled_channels: Vec<String>,
    pub beta_band: (f64, f64),
    /// Standard deviation of the beta source relative to the unit-variance
    /// background.
    pub beta_gain: f64,
    pub decoy: bool,
    /// Standard deviation of the per-subject, per-channel log gain.
    pub gain_jitter: f64,
    /// Overall scale in microvolts.
    pub amplitude_uv: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_per_class: 8,
            duration_seconds: 600.0,
            sample_rate: 250.0,
            seed: 0,
            channels: STANDARD_CHANNELS.iter().map(|s| (*s).to_owned()).collect(),
            coupled_channels: vec!["C4-P4".into(), "F4-C4".into()],
            beta_band: (16.0, 30.0),
            beta_gain: 0.6,
            decoy: true,
            gain_jitter: 0.1,
            amplitude_uv: 20.0,
        }
    }
}

/// Zero-mean, unit-variance noise whose amplitude spectrum is `shape(f)`.
fn shaped_noise(rng: &mut ChaCha8Rng, n: usize, fs: f64, shape: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|_| Complex::new(StandardNormal.sample(&mut *rng), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, b) in buf.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * fs / n as f64;
        *b *= shape(f);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let x: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    x.iter().map(|v| (v - mean) / sd).collect()
}

fn pink(rng: &mut ChaCha8Rng, n: usize, fs: f64) -> Vec<f64> {
    shaped_noise(rng, n, fs, |f| if f < 0.5 { 0.0 } else { 1.0 / f.sqrt() })
}

fn band(rng: &mut ChaCha8Rng, n: usize, fs: f64, (lo, hi): (f64, f64)) -> Vec<f64> {
    shaped_noise(rng, n, fs, |f| if f >= lo && f <= hi { 1.0 } else { 0.0 })
}

fn add_scaled(dst: &mut [f64], src: &[f64], gain: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += gain * s;
    }
}

/// `n_per_class` control and `n_per_class` insomnia recordings, identical for
/// identical configs.
pub fn synth_dataset(config: &SynthConfig) -> Vec<Recording> {
    let n = (config.duration_seconds * config.sample_rate).round() as usize;
    let fs = config.sample_rate;
    let jitter = Normal::new(0.0, config.gain_jitter.max(0.0)).expect("finite jitter");
    let coupled: Vec<usize> = config
        .coupled_channels
        .iter()
        .filter_map(|c| config.channels.iter().position(|x| x == c))
        .collect();
    let mut out = Vec::with_capacity(2 * config.n_per_class);
    for (ci, class) in [ClassLabel::Insomnia, ClassLabel::Control].into_iter().enumerate() {
        for s in 0..config.n_per_class {
            let subject_seed = config.seed ^ ((ci as u64) << 32 | s as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            let mut rng = ChaCha8Rng::seed_from_u64(subject_seed);
            let mut channels: Vec<Vec<f64>> = config.channels.iter().map(|_| pink(&mut rng, n, fs)).collect();
            match class {
                ClassLabel::Insomnia => {
                    let shared = band(&mut rng, n, fs, config.beta_band);
                    for &c in &coupled {
                        add_scaled(&mut channels[c], &shared, config.beta_gain);
                    }
                }
                ClassLabel::Control if config.decoy && !coupled.is_empty() => {
                    let own = band(&mut rng, n, fs, config.beta_band);
                    let c = coupled[rng.random_range(0..coupled.len())];
                    add_scaled(&mut channels[c], &own, config.beta_gain);
                }
                ClassLabel::Control => {}
            }
            let prefix = match class {
                ClassLabel::Insomnia => "ins",
                ClassLabel::Control => "n",
            };
            out.push(Recording {
                subject_id: SubjectId::new(format!("{prefix}{:02}", s + 1)),
                class_label: class,
                channels: config
                    .channels
                    .iter()
                    .zip(channels)
                    .map(|(label, x)| {
                        let gain = config.amplitude_uv * jitter.sample(&mut rng).exp();
                        Channel {
                            label: label.clone(),
                            sample_rate: fs,
                            samples: x.into_iter().map(|v| v * gain).collect(),
                        }
                    })
                    .collect(),
                age: None,
                sex: None,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{msc, WelchParams};

    fn pair_msc(rec: &Recording, a: &str, b: &str, band: (f64, f64)) -> f64 {
        let x = &rec.channels.iter().find(|c| c.label == a).unwrap().samples;
        let y = &rec.channels.iter().find(|c| c.label == b).unwrap().samples;
        msc(x, y, rec.channels[0].sample_rate, &WelchParams::default())
            .unwrap()
            .mean_over(band.0, band.1)
            .unwrap()
    }

    fn small() -> SynthConfig {
        SynthConfig {
            n_per_class: 2,
            duration_seconds: 120.0,
            seed: 5,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn same_seed_same_samples() {
        assert_eq!(synth_dataset(&small()), synth_dataset(&small()));
        let other = synth_dataset(&SynthConfig { seed: 6, ..small() });
        assert_ne!(other[0].channels[0].samples, synth_dataset(&small())[0].channels[0].samples);
    }

    #[test]
    fn cohort_shape() {
        let data = synth_dataset(&small());
        assert_eq!(data.len(), 4);
        assert_eq!(data.iter().filter(|r| r.class_label == ClassLabel::Insomnia).count(), 2);
        for r in &data {
            assert_eq!(r.channel_labels(), STANDARD_CHANNELS.to_vec());
            assert!(r.channels.iter().all(|c| c.samples.len() == 30_000));
        }
    }

    #[test]
    fn coupled_pair_coherence_separates_classes() {
        // 120 s with 2 s half-overlapping segments gives 119 segments
        let data = synth_dataset(&small());
        for ins in data.iter().filter(|r| r.class_label == ClassLabel::Insomnia) {
            let m_ins = pair_msc(ins, "C4-P4", "F4-C4", (16.0, 30.0));
            for ctl in data.iter().filter(|r| r.class_label == ClassLabel::Control) {
                let m_ctl = pair_msc(ctl, "C4-P4", "F4-C4", (16.0, 30.0));
                assert!(m_ins - m_ctl >= 0.3, "{m_ins} vs {m_ctl}");
            }
        }
    }

    #[test]
    fn control_channels_are_incoherent() {
        let data = synth_dataset(&small());
        for ctl in data.iter().filter(|r| r.class_label == ClassLabel::Control) {
            for i in 0..5 {
                for j in i + 1..5 {
                    let m = pair_msc(ctl, STANDARD_CHANNELS[i], STANDARD_CHANNELS[j], (1.0, 45.0));
                    assert!(m < 0.2, "{} {} {m}", STANDARD_CHANNELS[i], STANDARD_CHANNELS[j]);
                }
            }
        }
    }
}
