use std::f64::consts::PI;

use super::DspError;

/// Rational-ratio polyphase resampler with a Kaiser-windowed sinc
/// anti-aliasing filter at the lower of the two Nyquist rates.
#[derive(Debug, Clone)]
pub struct Resampler {
    pub up: usize,
    pub down: usize,
    taps: Vec<f64>,
    half_len: usize,
}

const KAISER_BETA: f64 = 5.0;
const HALF_LEN_PER_RATE: usize = 10;

impl Resampler {
    /// Design for `from_hz → to_hz`. Rates must be representable as a ratio of
    /// integers at millihertz precision.
    pub fn new(from_hz: f64, to_hz: f64) -> Result<Self, DspError> {
        if !(to_hz > 0.0) || !from_hz.is_finite() || !to_hz.is_finite() {
            return Err(DspError::IrrationalRatio { from_hz, to_hz });
        }
        if from_hz < to_hz {
            return Err(DspError::UpsamplingRequested { from_hz, to_hz });
        }
        let (up, down) = rational_ratio(from_hz, to_hz).ok_or(DspError::IrrationalRatio { from_hz, to_hz })?;
        Ok(Self::from_ratio(up, down))
    }

    pub fn from_ratio(up: usize, down: usize) -> Self {
        let g = gcd(up, down);
        let (up, down) = (up / g, down / g);
        if up == down {
            return Self {
                up: 1,
                down: 1,
                taps: vec![1.0],
                half_len: 0,
            };
        }
        let max_rate = up.max(down);
        let half_len = HALF_LEN_PER_RATE * max_rate;
        let cutoff = 1.0 / max_rate as f64;
        let n = 2 * half_len + 1;
        let denom = bessel_i0(KAISER_BETA);
        let mut taps: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 - half_len as f64;
                let r = t / half_len as f64;
                let w = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / denom;
                cutoff * sinc(cutoff * t) * w
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        let scale = up as f64 / sum;
        taps.iter_mut().for_each(|t| *t *= scale);
        Self {
            up,
            down,
            taps,
            half_len,
        }
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        // round(n * up / down) in integer arithmetic
        (2 * input_len * self.up + self.down) / (2 * self.down)
    }

    pub fn process(&self, signal: &[f64]) -> Vec<f64> {
        if self.up == 1 && self.down == 1 {
            return signal.to_vec();
        }
        let n_out = self.output_len(signal.len());
        let n_taps = self.taps.len();
        let mut out = Vec::with_capacity(n_out);
        for m in 0..n_out {
            // y[m] = sum_n x[n] h[m*down + half_len - n*up]
            let t = m * self.down + self.half_len;
            let n_max = (t / self.up).min(signal.len().saturating_sub(1));
            let n_min = (t + self.up).saturating_sub(n_taps).div_ceil(self.up);
            let mut acc = 0.0;
            if signal.is_empty() || n_min > n_max {
                out.push(0.0);
                continue;
            }
            for (n, &x) in signal.iter().enumerate().take(n_max + 1).skip(n_min) {
                acc += x * self.taps[t - n * self.up];
            }
            out.push(acc);
        }
        out
    }
}

/// Polyphase resampling to `to_hz`; identity when the rates match.
pub fn resample(signal: &[f64], from_hz: f64, to_hz: f64) -> Result<Vec<f64>, DspError> {
    Ok(Resampler::new(from_hz, to_hz)?.process(signal))
}

fn rational_ratio(from_hz: f64, to_hz: f64) -> Option<(usize, usize)> {
    const SCALE: f64 = 1000.0;
    let a = (from_hz * SCALE).round();
    let b = (to_hz * SCALE).round();
    if (a - from_hz * SCALE).abs() > 1e-6 || (b - to_hz * SCALE).abs() > 1e-6 {
        return None;
    }
    let (a, b) = (a as usize, b as usize);
    let g = gcd(a, b);
    Some((b / g, a / g))
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}
