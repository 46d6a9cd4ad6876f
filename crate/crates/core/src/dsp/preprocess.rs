use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{resample, DspError, FilterSpec};
use crate::edf::{Channel, Recording};

/// Whole-recording conditioning applied once, before windowing:
/// high-pass, notch, then downsampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub highpass: Option<FilterSpec>,
    pub notch: Option<FilterSpec>,
    pub target_rate: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            highpass: Some(FilterSpec::DEFAULT_HIGHPASS),
            notch: Some(FilterSpec::DEFAULT_NOTCH),
            target_rate: crate::TARGET_SAMPLE_RATE,
        }
    }
}

pub fn preprocess_recording(recording: &Recording, config: &PreprocessConfig) -> Result<Recording, DspError> {
    let channels = recording
        .channels
        .par_iter()
        .map(|ch| {
            let mut x = ch.samples.clone();
            for spec in config.highpass.iter().chain(&config.notch) {
                x = spec.apply(&x, ch.sample_rate)?;
            }
            Ok(Channel {
                label: ch.label.clone(),
                sample_rate: config.target_rate,
                samples: resample(&x, ch.sample_rate, config.target_rate)?,
            })
        })
        .collect::<Result<Vec<_>, DspError>>()?;
    Ok(Recording {
        channels,
        ..recording.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::segment;
    use crate::ClassLabel;

    #[test]
    fn resampled_windows_have_exact_sample_counts() {
        let rec = Recording {
            subject_id: "s".into(),
            class_label: ClassLabel::Insomnia,
            channels: vec![Channel {
                label: "C4-P4".into(),
                sample_rate: 512.0,
                samples: (0..512 * 200).map(|i| (i as f64 * 0.01).sin()).collect(),
            }],
            age: None,
            sex: None,
        };
        let pre = preprocess_recording(&rec, &PreprocessConfig::default()).unwrap();
        assert_eq!(pre.channels[0].samples.len(), 250 * 200);
        for w in crate::WINDOW_LENGTHS {
            let windows = segment(&pre, f64::from(w)).unwrap();
            assert_eq!(windows.len(), 200 / w as usize);
            assert!(windows.iter().all(|x| x.n_samples() == w as usize * 250));
        }
    }
}
