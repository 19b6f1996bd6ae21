//! Audio preprocessing: rate conversion and fixed-length framing.
//!
//! Downsampling uses a Kaiser-windowed sinc filter (64 taps, β = 8),
//! cut off at the target Nyquist frequency, evaluated at the exact
//! fractional positions of the output grid. Tap weights are renormalized
//! over the in-signal range so constant signals stay constant right up
//! to the edges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transforms::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Output sample rate in Hz.
    pub target_rate: f64,
    /// Output length in samples; shorter clips are zero-padded, longer
    /// ones rejected.
    pub target_length: usize,
    /// Scale so the largest absolute sample becomes 1.
    pub peak_normalize: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig { target_rate: 8000.0, target_length: 8000, peak_normalize: false }
    }
}

/// Half-width of the sinc kernel in source samples: 64 taps around the
/// fractional center.
const KERNEL_HALF_WIDTH: usize = 32;
const KAISER_BETA: f64 = 8.0;

/// Modified Bessel function of the first kind, order zero. Power series;
/// converges in a handful of terms for the argument range a window uses.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut m = 1.0;
    loop {
        term *= (half / m) * (half / m);
        sum += term;
        if term < sum * 1e-16 {
            return sum;
        }
        m += 1.0;
    }
}

fn kaiser(t: f64) -> f64 {
    let r = t / KERNEL_HALF_WIDTH as f64;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / bessel_i0(KAISER_BETA)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Downsamples to `target_rate`. The source rate must not be lower than
/// the target; equal rates pass the signal through unchanged.
pub fn resample(x: &TimeSeries, target_rate: f64) -> Result<TimeSeries> {
    if !(target_rate > 0.0 && target_rate.is_finite()) {
        return Err(Error::param(format!("target rate must be positive, got {target_rate}")));
    }
    let source_rate = x.sample_rate();
    if target_rate > source_rate {
        return Err(Error::param(format!(
            "cannot resample upward from {source_rate} Hz to {target_rate} Hz"
        )));
    }
    if target_rate == source_rate {
        return Ok(x.clone());
    }

    let ratio = source_rate / target_rate; // > 1, source samples per output sample
    let out_len = (x.len() as f64 * target_rate / source_rate).floor() as usize;
    if out_len < 2 {
        return Err(Error::invalid_signal(format!(
            "clip too short to resample: {} samples at {source_rate} Hz",
            x.len()
        )));
    }
    // Anti-alias cutoff at the target Nyquist, expressed in cycles per
    // source sample.
    let cutoff = 0.5 / ratio;
    let gain = 2.0 * cutoff;
    let src = x.samples();
    let half = KERNEL_HALF_WIDTH as f64;

    let out: Vec<f64> = (0..out_len)
        .map(|m| {
            let center = m as f64 * ratio;
            let k0 = ((center - half).ceil() as i64).max(0) as usize;
            let k1 = (((center + half).floor() as i64) as usize).min(src.len() - 1);
            let mut acc = 0.0;
            let mut weight = 0.0;
            for k in k0..=k1 {
                let t = k as f64 - center;
                let h = gain * sinc(gain * t) * kaiser(t);
                acc += src[k] * h;
                weight += h;
            }
            if weight.abs() > 1e-12 {
                acc / weight
            } else {
                0.0
            }
        })
        .collect();
    TimeSeries::new(out, target_rate)
}

/// Full ingestion pipeline: resample, enforce the length budget,
/// optionally peak-normalize, zero-pad to the fixed analysis length.
pub fn preprocess_audio(x: &TimeSeries, cfg: &PreprocessConfig) -> Result<TimeSeries> {
    if cfg.target_length < 2 {
        return Err(Error::param(format!(
            "target length {} is too short to be a signal",
            cfg.target_length
        )));
    }
    let resampled = resample(x, cfg.target_rate)?;
    if resampled.len() > cfg.target_length {
        return Err(Error::TooLong { len: resampled.len(), max: cfg.target_length });
    }
    let mut samples = resampled.into_samples();
    if cfg.peak_normalize {
        let peak = samples.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        if peak > 0.0 {
            let inv = 1.0 / peak;
            for v in &mut samples {
                *v *= inv;
            }
        }
    }
    samples.resize(cfg.target_length, 0.0);
    TimeSeries::new(samples, cfg.target_rate)
}
