use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::DspError;

/// IIR filter applied forward-backward for zero net phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FilterSpec {
    Highpass { cutoff_hz: f64, order: usize },
    Notch { center_hz: f64, q_factor: f64 },
}

/// Shorthand for the filter family, mostly for logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Highpass,
    Notch,
}

impl FilterSpec {
    pub const DEFAULT_HIGHPASS: FilterSpec = FilterSpec::Highpass {
        cutoff_hz: 1.0,
        order: 4,
    };
    pub const DEFAULT_NOTCH: FilterSpec = FilterSpec::Notch {
        center_hz: 50.0,
        q_factor: 30.0,
    };

    pub fn kind(&self) -> FilterKind {
        match self {
            FilterSpec::Highpass { .. } => FilterKind::Highpass,
            FilterSpec::Notch { .. } => FilterKind::Notch,
        }
    }

    pub fn design(&self, sample_rate: f64) -> Result<SosFilter, DspError> {
        match *self {
            FilterSpec::Highpass { cutoff_hz, order } => SosFilter::butterworth_highpass(sample_rate, cutoff_hz, order),
            FilterSpec::Notch { center_hz, q_factor } => SosFilter::notch(sample_rate, center_hz, q_factor),
        }
    }

    /// Zero-phase application; output length equals input length.
    pub fn apply(&self, signal: &[f64], sample_rate: f64) -> Result<Vec<f64>, DspError> {
        Ok(self.design(sample_rate)?.filtfilt(signal))
    }
}

/// Zero-phase Butterworth high-pass.
pub fn highpass(signal: &[f64], sample_rate: f64, cutoff_hz: f64, order: usize) -> Result<Vec<f64>, DspError> {
    FilterSpec::Highpass { cutoff_hz, order }.apply(signal, sample_rate)
}

/// Zero-phase second-order IIR notch.
pub fn notch(signal: &[f64], sample_rate: f64, center_hz: f64, q_factor: f64) -> Result<Vec<f64>, DspError> {
    FilterSpec::Notch { center_hz, q_factor }.apply(signal, sample_rate)
}

/// Normalized second-order section (`a0 = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Frequency response magnitude at normalized angular frequency `w`.
    pub fn magnitude(&self, w: f64) -> f64 {
        let (c1, s1) = (w.cos(), -w.sin());
        let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num = (self.b0 + self.b1 * c1 + self.b2 * c2, self.b1 * s1 + self.b2 * s2);
        let den = (1.0 + self.a1 * c1 + self.a2 * c2, self.a1 * s1 + self.a2 * s2);
        (num.0.hypot(num.1)) / (den.0.hypot(den.1))
    }
}

/// Cascade of biquads in transposed direct form II.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
}

fn check_inside_nyquist(freq: f64, sample_rate: f64) -> Result<(), DspError> {
    let nyquist = sample_rate / 2.0;
    if !(freq > 0.0 && freq < nyquist) {
        return Err(DspError::InvalidCutoff {
            cutoff_hz: freq,
            nyquist_hz: nyquist,
        });
    }
    Ok(())
}

impl SosFilter {
    /// Digital Butterworth high-pass by the bilinear transform with the
    /// cutoff prewarped, split into second-order sections (plus one
    /// first-order section for odd orders).
    pub fn butterworth_highpass(sample_rate: f64, cutoff_hz: f64, order: usize) -> Result<Self, DspError> {
        check_inside_nyquist(cutoff_hz, sample_rate)?;
        if order == 0 {
            return Err(DspError::InvalidFilter("order must be >= 1".into()));
        }
        let w0 = 2.0 * PI * cutoff_hz / sample_rate;
        let (sin, cos) = w0.sin_cos();
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for k in 1..=order / 2 {
            let q = 1.0 / (2.0 * ((2 * k - 1) as f64 * PI / (2 * order) as f64).sin());
            let alpha = sin / (2.0 * q);
            let a0 = 1.0 + alpha;
            sections.push(Biquad {
                b0: (1.0 + cos) / 2.0 / a0,
                b1: -(1.0 + cos) / a0,
                b2: (1.0 + cos) / 2.0 / a0,
                a1: -2.0 * cos / a0,
                a2: (1.0 - alpha) / a0,
            });
        }
        if order % 2 == 1 {
            let k = (w0 / 2.0).tan();
            sections.push(Biquad {
                b0: 1.0 / (1.0 + k),
                b1: -1.0 / (1.0 + k),
                b2: 0.0,
                a1: (k - 1.0) / (k + 1.0),
                a2: 0.0,
            });
        }
        Ok(Self { sections })
    }

    /// Second-order notch with -3 dB bandwidth `center / q`.
    pub fn notch(sample_rate: f64, center_hz: f64, q_factor: f64) -> Result<Self, DspError> {
        check_inside_nyquist(center_hz, sample_rate)?;
        if !(q_factor > 0.0) {
            return Err(DspError::InvalidFilter(format!("notch q must be > 0, got {q_factor}")));
        }
        let w0 = 2.0 * PI * center_hz / sample_rate;
        let bw = w0 / q_factor;
        let gain = 1.0 / (1.0 + (bw / 2.0).tan());
        let cos = w0.cos();
        Ok(Self {
            sections: vec![Biquad {
                b0: gain,
                b1: -2.0 * gain * cos,
                b2: gain,
                a1: -2.0 * gain * cos,
                a2: 2.0 * gain - 1.0,
            }],
        })
    }

    /// Magnitude response of one pass at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64, sample_rate: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / sample_rate;
        self.sections.iter().map(|s| s.magnitude(w)).product()
    }

    /// Per-section state that makes a constant unit input a steady state.
    fn steady_state(&self) -> Vec<[f64; 2]> {
        let mut level = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let y = level * s.dc_gain();
                let zi = [y - s.b0 * level, s.b2 * level - s.a2 * y];
                level = y;
                zi
            })
            .collect()
    }

    fn run(&self, data: &mut [f64], mut state: Vec<[f64; 2]>) {
        for (s, z) in self.sections.iter().zip(state.iter_mut()) {
            for x in data.iter_mut() {
                let input = *x;
                let y = s.b0 * input + z[0];
                z[0] = s.b1 * input - s.a1 * y + z[1];
                z[1] = s.b2 * input - s.a2 * y;
                *x = y;
            }
        }
    }

    /// Single causal pass from zero state.
    pub fn filter(&self, signal: &[f64]) -> Vec<f64> {
        let mut out = signal.to_vec();
        self.run(&mut out, vec![[0.0; 2]; self.sections.len()]);
        out
    }

    /// Forward-backward filtering with odd-reflection padding and
    /// steady-state initial conditions scaled to the edge samples.
    pub fn filtfilt(&self, signal: &[f64]) -> Vec<f64> {
        let n = signal.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = (3 * (2 * self.sections.len() + 1)).min(n - 1);
        let first = signal[0];
        let last = signal[n - 1];
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - signal[i]));
        ext.extend_from_slice(signal);
        ext.extend((1..=pad).map(|i| 2.0 * last - signal[n - 1 - i]));

        let zi = self.steady_state();
        let scaled = |x0: f64| zi.iter().map(|z| [z[0] * x0, z[1] * x0]).collect::<Vec<_>>();

        let x0 = ext[0];
        self.run(&mut ext, scaled(x0));
        ext.reverse();
        let y0 = ext[0];
        self.run(&mut ext, scaled(y0));
        ext.reverse();
        ext.drain(..pad);
        ext.truncate(n);
        ext
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, fs: f64, seconds: f64) -> Vec<f64> {
        let n = (fs * seconds) as usize;
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect()
    }

    /// Least-squares amplitude of a sinusoid of known frequency over a
    /// sample range, fitted independently of the filter.
    fn fitted_amplitude(signal: &[f64], freq: f64, fs: f64, range: std::ops::Range<usize>) -> f64 {
        let (mut ss, mut sc, mut cc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in range {
            let ph = 2.0 * PI * freq * i as f64 / fs;
            let (s, c) = ph.sin_cos();
            ss += s * s;
            sc += s * c;
            cc += c * c;
            ys += signal[i] * s;
            yc += signal[i] * c;
        }
        let det = ss * cc - sc * sc;
        let a = (ys * cc - yc * sc) / det;
        let b = (yc * ss - ys * sc) / det;
        a.hypot(b)
    }

    #[test]
    fn highpass_removes_dc() {
        let x = vec![7.3; 250 * 30];
        let y = highpass(&x, 250.0, 1.0, 4).unwrap();
        assert_eq!(y.len(), x.len());
        let steady = &y[250 * 5..y.len() - 250 * 5];
        let max = steady.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 1e-3, "max residual {max}");
    }

    #[test]
    fn highpass_preserves_passband_tone() {
        let x = tone(10.0, 250.0, 30.0);
        let y = highpass(&x, 250.0, 1.0, 4).unwrap();
        let amp = fitted_amplitude(&y, 10.0, 250.0, 1250..y.len() - 1250);
        assert!((amp - 1.0).abs() < 0.02, "amplitude {amp}");
    }

    #[test]
    fn highpass_cutoff_above_nyquist_is_rejected() {
        assert!(matches!(
            highpass(&[0.0; 10], 250.0, 200.0, 4),
            Err(DspError::InvalidCutoff { .. })
        ));
        assert!(highpass(&[0.0; 10], 250.0, 0.0, 4).is_err());
    }

    #[test]
    fn butterworth_is_minus_3db_at_cutoff() {
        for order in 1..=6 {
            let f = SosFilter::butterworth_highpass(250.0, 1.0, order).unwrap();
            let g = f.magnitude(1.0, 250.0);
            assert!((g - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9, "order {order}: {g}");
            assert!(f.magnitude(0.0, 250.0) < 1e-12);
            assert!((f.magnitude(125.0, 250.0) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn notch_suppresses_center_tone() {
        let x = tone(50.0, 250.0, 20.0);
        let y = notch(&x, 250.0, 50.0, 30.0).unwrap();
        let mid = &y[500..y.len() - 500];
        let rms = (mid.iter().map(|v| v * v).sum::<f64>() / mid.len() as f64).sqrt();
        let residual_amp = rms * std::f64::consts::SQRT_2;
        assert!(residual_amp < 0.04, "residual amplitude {residual_amp}");
    }

    #[test]
    fn notch_keeps_passband_tone() {
        let x = tone(10.0, 250.0, 20.0);
        let y = notch(&x, 250.0, 50.0, 30.0).unwrap();
        let amp = fitted_amplitude(&y, 10.0, 250.0, 500..y.len() - 500);
        assert!((amp - 1.0).abs() < 0.02, "amplitude {amp}");
    }

    #[test]
    fn notch_response_bounds() {
        let f = SosFilter::notch(250.0, 50.0, 30.0).unwrap();
        // forward-backward squares the single-pass magnitude
        let at = |hz: f64| 20.0 * f.magnitude(hz, 250.0).powi(2).log10();
        assert!(at(50.0) < -30.0);
        assert!(at(45.0) > -3.0);
        assert!(at(55.0) > -3.0);
    }

    #[test]
    fn notch_of_zero_is_zero() {
        let y = notch(&[0.0; 100], 250.0, 50.0, 30.0).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn filters_are_linear() {
        let a: Vec<f64> = (0..3000).map(|i| ((i * 7919) % 101) as f64 - 50.0).collect();
        let b: Vec<f64> = (0..3000).map(|i| (i as f64 * 0.37).sin() * 20.0 + 3.0).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        for spec in [FilterSpec::DEFAULT_HIGHPASS, FilterSpec::DEFAULT_NOTCH] {
            let fa = spec.apply(&a, 250.0).unwrap();
            let fb = spec.apply(&b, 250.0).unwrap();
            let fs = spec.apply(&sum, 250.0).unwrap();
            let scale = fs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for i in 0..fs.len() {
                assert!((fs[i] - fa[i] - fb[i]).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn short_inputs_do_not_panic() {
        for n in 0..5 {
            let y = highpass(&vec![1.0; n], 250.0, 1.0, 4).unwrap();
            assert_eq!(y.len(), n);
        }
    }
}
