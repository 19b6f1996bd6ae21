//! Signal representations and the transforms between them.
//!
//! A classifier input lives in the time domain; masking happens in one of
//! three representations selected by [`Domain`]:
//!
//! * `Time`: the raw samples, no transform.
//! * `Frequency`: one-sided discrete Fourier transform, `⌊T/2⌋ + 1` bins.
//! * `TimeFrequency`: short-time DFT with a hopped window, one one-sided
//!   spectrum per frame.
//!
//! Conventions, fixed once here so every module agrees:
//!
//! * Forward transforms are unnormalized; the inverse carries the `1/len`
//!   factor. A unit sinusoid at an exact bin therefore shows up with
//!   magnitude `T/2`.
//! * Frames start at multiples of the hop and must lie entirely inside the
//!   signal: `frames = 1 + (T − L) / hop` (integer division). Trailing
//!   samples that do not fill a frame are not analyzed, and the inverse
//!   reconstructs zeros there.
//! * The Hann window is the periodic variant `0.5·(1 − cos(2πn/L))`.
//! * `istdft` inverts by least squares: overlap-add of window-weighted
//!   frame inverses, normalized by the summed squared window. Positions
//!   where that sum is below `1e-8` of its maximum are zeroed.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where masking is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Time,
    Frequency,
    TimeFrequency,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Domain::Time => "time",
            Domain::Frequency => "frequency",
            Domain::TimeFrequency => "time-frequency",
        };
        f.write_str(name)
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "time" => Ok(Domain::Time),
            "frequency" | "freq" => Ok(Domain::Frequency),
            "time-frequency" | "time_frequency" | "timefreq" | "tf" => Ok(Domain::TimeFrequency),
            other => Err(Error::param(format!(
                "unknown domain {other:?}; expected time, frequency, or time-frequency"
            ))),
        }
    }
}

/// Rows × columns of a masked representation. Vectors are `1 × len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub fn vector(len: usize) -> Self {
        Shape { rows: 1, cols: len }
    }

    pub fn matrix(rows: usize, cols: usize) -> Self {
        Shape { rows, cols }
    }

    /// Total number of positions.
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_vector(&self) -> bool {
        self.rows == 1
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Hann,
    Rectangular,
}

/// Analysis window for the short-time transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub kind: WindowKind,
    pub length: usize,
    pub hop: usize,
}

impl WindowSpec {
    pub fn hann(length: usize, hop: usize) -> Self {
        WindowSpec { kind: WindowKind::Hann, length, hop }
    }

    pub fn rectangular(length: usize, hop: usize) -> Self {
        WindowSpec { kind: WindowKind::Rectangular, length, hop }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::InvalidWindow("window length must be positive".into()));
        }
        if self.hop == 0 {
            return Err(Error::InvalidWindow("hop must be positive".into()));
        }
        if self.hop > self.length {
            return Err(Error::InvalidWindow(format!(
                "hop {} exceeds window length {}; frames would skip samples",
                self.hop, self.length
            )));
        }
        Ok(())
    }

    /// Window coefficients, `length` values.
    pub fn coefficients(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let l = self.length as f64;
        let w = match self.kind {
            WindowKind::Rectangular => vec![1.0; self.length],
            WindowKind::Hann => (0..self.length)
                .map(|n| 0.5 * (1.0 - (std::f64::consts::TAU * n as f64 / l).cos()))
                .collect(),
        };
        Ok(w)
    }
}

/// A real-valued, uniformly sampled signal. Construction checks the
/// invariants every consumer relies on: at least two samples, all finite,
/// positive sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid_signal(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid_signal(format!("non-finite sample at index {i}")));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::invalid_signal(format!("sample rate must be positive, got {sample_rate}")));
        }
        Ok(TimeSeries { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Complex coefficients of a transformed signal, row-major. One row for
/// the plain DFT, one row per frame for the short-time DFT. Keeps enough
/// provenance (origin length, sample rate, window) to invert.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralView {
    coeffs: Vec<Complex64>,
    shape: Shape,
    domain: Domain,
    origin_length: usize,
    sample_rate: f64,
    window: Option<WindowSpec>,
}

impl SpectralView {
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn origin_length(&self) -> usize {
        self.origin_length
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn window(&self) -> Option<&WindowSpec> {
        self.window.as_ref()
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        let c = self.shape.cols;
        &self.coeffs[r * c..(r + 1) * c]
    }

    /// Same provenance, different coefficients. The replacement must match
    /// the existing shape element for element.
    pub fn with_coeffs(&self, coeffs: Vec<Complex64>) -> Result<SpectralView> {
        if coeffs.len() != self.coeffs.len() {
            return Err(Error::shape(format!(
                "replacement has {} coefficients, view holds {}",
                coeffs.len(),
                self.coeffs.len()
            )));
        }
        Ok(SpectralView { coeffs, ..self.clone() })
    }

    /// Element-wise magnitudes, row-major.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm()).collect()
    }
}

/// Number of one-sided bins for a length-`len` real transform.
pub fn onesided_len(len: usize) -> usize {
    len / 2 + 1
}

/// Number of whole frames a hopped window extracts from `len` samples.
pub fn frame_count(len: usize, window: &WindowSpec) -> Result<usize> {
    window.validate()?;
    if window.length > len {
        return Err(Error::InvalidWindow(format!(
            "window length {} exceeds signal length {len}",
            window.length
        )));
    }
    Ok(1 + (len - window.length) / window.hop)
}

// Plans are cached per (length, direction); rustfft plans are immutable
// and cheap to share.
static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().expect("fft plan cache poisoned");
    cache
        .entry((len, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// Mirrors a one-sided row into a full-length conjugate-symmetric
/// spectrum, optionally scaling each bin; `full.len()` is the original
/// signal (or frame) length.
fn expand_onesided(row: &[Complex64], scale: Option<&[f64]>, full: &mut [Complex64]) {
    let t = full.len();
    let f = row.len();
    debug_assert_eq!(f, onesided_len(t));
    match scale {
        None => full[..f].copy_from_slice(row),
        Some(s) => {
            for k in 0..f {
                full[k] = row[k] * s[k];
            }
        }
    }
    // Bins f..t are the conjugate mirror of 1..=t-f; for even t the
    // Nyquist bin t/2 = f-1 sits on the boundary and is its own mirror.
    for k in 1..=(t - f) {
        full[t - k] = full[k].conj();
    }
}

/// One-sided DFT of the whole signal: a `1 × (⌊T/2⌋ + 1)` view.
pub fn dft_onesided(x: &TimeSeries) -> Result<SpectralView> {
    let t = x.len();
    let f = onesided_len(t);
    let mut buf: Vec<Complex64> = x.samples().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(t, false).process(&mut buf);
    buf.truncate(f);
    Ok(SpectralView {
        coeffs: buf,
        shape: Shape::vector(f),
        domain: Domain::Frequency,
        origin_length: t,
        sample_rate: x.sample_rate(),
        window: None,
    })
}

/// Inverse of [`dft_onesided`]. Exact up to rounding for any real signal.
pub fn idft_onesided(s: &SpectralView) -> Result<TimeSeries> {
    if s.domain != Domain::Frequency {
        return Err(Error::shape(format!("expected a frequency-domain view, got {}", s.domain)));
    }
    let t = s.origin_length;
    if s.shape.cols != onesided_len(t) || s.shape.rows != 1 {
        return Err(Error::shape(format!(
            "view shape {} does not match origin length {t} (want 1x{})",
            s.shape,
            onesided_len(t)
        )));
    }
    let mut full = vec![Complex64::ZERO; t];
    expand_onesided(&s.coeffs, None, &mut full);
    plan(t, true).process(&mut full);
    let inv = 1.0 / t as f64;
    let samples: Vec<f64> = full.iter().map(|c| c.re * inv).collect();
    TimeSeries::new(samples, s.sample_rate)
}

/// Short-time DFT: one one-sided spectrum per frame, frames hopped by
/// `window.hop` and fully contained in the signal.
pub fn stdft(x: &TimeSeries, window: &WindowSpec) -> Result<SpectralView> {
    let rows = frame_count(x.len(), window)?;
    let l = window.length;
    let cols = onesided_len(l);
    let w = window.coefficients()?;
    let fft = plan(l, false);
    let mut scratch = vec![Complex64::ZERO; fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::ZERO; l];
    let mut coeffs = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let start = r * window.hop;
        let frame = &x.samples()[start..start + l];
        for n in 0..l {
            buf[n] = Complex64::new(frame[n] * w[n], 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        coeffs.extend_from_slice(&buf[..cols]);
    }
    Ok(SpectralView {
        coeffs,
        shape: Shape::matrix(rows, cols),
        domain: Domain::TimeFrequency,
        origin_length: x.len(),
        sample_rate: x.sample_rate(),
        window: Some(*window),
    })
}

/// Summed squared window under every frame of a length-`len` signal: the
/// least-squares normalizer used by [`istdft`]. Zero where no frame
/// reaches, which is where reconstruction is undefined.
pub fn window_energy_profile(window: &WindowSpec, len: usize) -> Result<Vec<f64>> {
    let rows = frame_count(len, window)?;
    let w = window.coefficients()?;
    let mut energy = vec![0.0; len];
    for r in 0..rows {
        let start = r * window.hop;
        for n in 0..window.length {
            energy[start + n] += w[n] * w[n];
        }
    }
    Ok(energy)
}

/// Positions where the energy profile is large enough for reconstruction
/// to be trusted: above `1e-8` of the profile's maximum.
pub fn reconstruction_support(energy: &[f64]) -> Vec<bool> {
    let max = energy.iter().cloned().fold(0.0_f64, f64::max);
    let floor = 1e-8 * max;
    energy.iter().map(|&e| e > floor).collect()
}

/// Least-squares inverse of [`stdft`]: overlap-add of window-weighted
/// frame inverses divided by the summed squared window. Positions outside
/// the support (no frame coverage, or negligible window energy) come back
/// as zero.
pub fn istdft(s: &SpectralView) -> Result<TimeSeries> {
    if s.domain != Domain::TimeFrequency {
        return Err(Error::shape(format!(
            "expected a time-frequency view, got {}",
            s.domain
        )));
    }
    let window = s
        .window
        .as_ref()
        .ok_or_else(|| Error::InvalidWindow("time-frequency view is missing its window".into()))?;
    let t = s.origin_length;
    let rows = frame_count(t, window)?;
    let l = window.length;
    let cols = onesided_len(l);
    if s.shape.rows != rows || s.shape.cols != cols {
        return Err(Error::shape(format!(
            "view shape {} does not match {rows}x{cols} expected for length {t}",
            s.shape
        )));
    }

    let w = window.coefficients()?;
    let energy = window_energy_profile(window, t)?;
    let max_energy = energy.iter().cloned().fold(0.0_f64, f64::max);
    if max_energy <= 0.0 {
        return Err(Error::InvalidWindow(
            "window energy is zero everywhere; cannot normalize the overlap-add".into(),
        ));
    }
    let floor = 1e-8 * max_energy;

    let fft = plan(l, true);
    let mut scratch = vec![Complex64::ZERO; fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::ZERO; l];
    let mut acc = vec![0.0_f64; t];
    let inv_l = 1.0 / l as f64;
    for r in 0..rows {
        expand_onesided(s.row(r), None, &mut buf);
        fft.process_with_scratch(&mut buf, &mut scratch);
        let start = r * window.hop;
        for n in 0..l {
            acc[start + n] += buf[n].re * inv_l * w[n];
        }
    }
    let samples: Vec<f64> = acc
        .iter()
        .zip(&energy)
        .map(|(&a, &e)| if e > floor { a / e } else { 0.0 })
        .collect();
    TimeSeries::new(samples, s.sample_rate)
}

/// Reusable engine for inverting one spectral view under many masks.
/// Holds the FFT plan and work buffers so a relevance run with hundreds
/// of thousands of masks does not re-allocate per query.
pub struct InversePlan {
    domain: Domain,
    origin_length: usize,
    shape: Shape,
    hop: usize,
    window: Vec<f64>,
    /// Reciprocal of the summed squared window inside the support, zero
    /// outside; empty for the frequency domain.
    inv_energy: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl InversePlan {
    pub fn new(view: &SpectralView) -> Result<Self> {
        match view.domain {
            Domain::Frequency => {
                let t = view.origin_length;
                if view.shape.cols != onesided_len(t) || view.shape.rows != 1 {
                    return Err(Error::shape(format!(
                        "view shape {} does not match origin length {t}",
                        view.shape
                    )));
                }
                let fft = plan(t, true);
                let scratch = vec![Complex64::ZERO; fft.get_inplace_scratch_len()];
                Ok(InversePlan {
                    domain: Domain::Frequency,
                    origin_length: t,
                    shape: view.shape,
                    hop: 0,
                    window: Vec::new(),
                    inv_energy: Vec::new(),
                    fft,
                    buf: vec![Complex64::ZERO; t],
                    scratch,
                })
            }
            Domain::TimeFrequency => {
                let window = view.window.as_ref().ok_or_else(|| {
                    Error::InvalidWindow("time-frequency view is missing its window".into())
                })?;
                let t = view.origin_length;
                let rows = frame_count(t, window)?;
                let cols = onesided_len(window.length);
                if view.shape.rows != rows || view.shape.cols != cols {
                    return Err(Error::shape(format!(
                        "view shape {} does not match {rows}x{cols} expected for length {t}",
                        view.shape
                    )));
                }
                let w = window.coefficients()?;
                let energy = window_energy_profile(window, t)?;
                let max_energy = energy.iter().cloned().fold(0.0_f64, f64::max);
                if max_energy <= 0.0 {
                    return Err(Error::InvalidWindow(
                        "window energy is zero everywhere; cannot normalize the overlap-add".into(),
                    ));
                }
                let floor = 1e-8 * max_energy;
                let inv_energy =
                    energy.iter().map(|&e| if e > floor { 1.0 / e } else { 0.0 }).collect();
                let fft = plan(window.length, true);
                let scratch = vec![Complex64::ZERO; fft.get_inplace_scratch_len()];
                Ok(InversePlan {
                    domain: Domain::TimeFrequency,
                    origin_length: t,
                    shape: view.shape,
                    hop: window.hop,
                    window: w,
                    inv_energy,
                    fft,
                    buf: vec![Complex64::ZERO; window.length],
                    scratch,
                })
            }
            Domain::Time => Err(Error::shape(
                "time-domain masking needs no inverse plan; mask the samples directly",
            )),
        }
    }

    pub fn output_len(&self) -> usize {
        self.origin_length
    }

    /// Inverts `coeffs ⊙ mask` into `out`. `coeffs` must match the view
    /// this plan was built from; `mask` is row-major over the same shape.
    pub fn masked_inverse_into(
        &mut self,
        coeffs: &[Complex64],
        mask: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        let n = self.shape.len();
        if coeffs.len() != n || mask.len() != n {
            return Err(Error::shape(format!(
                "coefficients ({}) and mask ({}) must both have {n} entries",
                coeffs.len(),
                mask.len()
            )));
        }
        if out.len() != self.origin_length {
            return Err(Error::shape(format!(
                "output buffer has {} slots, signal needs {}",
                out.len(),
                self.origin_length
            )));
        }
        match self.domain {
            Domain::Frequency => {
                expand_onesided(coeffs, Some(mask), &mut self.buf);
                self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
                let inv = 1.0 / self.origin_length as f64;
                for (o, c) in out.iter_mut().zip(&self.buf) {
                    *o = c.re * inv;
                }
            }
            Domain::TimeFrequency => {
                out.fill(0.0);
                let l = self.window.len();
                let cols = self.shape.cols;
                let inv_l = 1.0 / l as f64;
                for r in 0..self.shape.rows {
                    let row = &coeffs[r * cols..(r + 1) * cols];
                    let mrow = &mask[r * cols..(r + 1) * cols];
                    expand_onesided(row, Some(mrow), &mut self.buf);
                    self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
                    let start = r * self.hop;
                    for n in 0..l {
                        out[start + n] += self.buf[n].re * inv_l * self.window[n];
                    }
                }
                for (o, &ie) in out.iter_mut().zip(&self.inv_energy) {
                    *o *= ie;
                }
            }
            Domain::Time => unreachable!("constructor rejects time domain"),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, StreamKind};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_signal(len: usize, seed: u64) -> TimeSeries {
        let mut rng = substream(seed, StreamKind::SyntheticSample, 0);
        let samples: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        TimeSeries::new(samples, len as f64).unwrap()
    }

    /// O(n²) reference transform used to pin the FFT-backed one.
    fn naive_dft(x: &[f64]) -> Vec<Complex64> {
        let t = x.len();
        (0..t)
            .map(|k| {
                let mut acc = Complex64::ZERO;
                for (n, &v) in x.iter().enumerate() {
                    let phase = -std::f64::consts::TAU * (k * n) as f64 / t as f64;
                    acc += Complex64::new(v * phase.cos(), v * phase.sin());
                }
                acc
            })
            .collect()
    }

    #[test]
    fn rejects_degenerate_signals() {
        assert!(matches!(TimeSeries::new(vec![1.0], 1.0), Err(Error::InvalidSignal(_))));
        assert!(matches!(
            TimeSeries::new(vec![1.0, f64::NAN], 1.0),
            Err(Error::InvalidSignal(_))
        ));
        assert!(matches!(TimeSeries::new(vec![1.0, 2.0], 0.0), Err(Error::InvalidSignal(_))));
        assert!(matches!(
            TimeSeries::new(vec![1.0, 2.0], f64::INFINITY),
            Err(Error::InvalidSignal(_))
        ));
    }

    #[test]
    fn impulse_spectrum_is_flat() {
        let x = TimeSeries::new(vec![1.0, 0.0, 0.0, 0.0], 4.0).unwrap();
        let s = dft_onesided(&x).unwrap();
        assert_eq!(s.shape(), Shape::vector(3));
        for c in s.coeffs() {
            assert_abs_diff_eq!(c.re, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(c.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn unit_sinusoid_lands_on_its_bin_with_half_length_magnitude() {
        let t = 2560;
        let k = 5;
        let samples: Vec<f64> = (0..t)
            .map(|n| (std::f64::consts::TAU * (k * n) as f64 / t as f64).sin())
            .collect();
        let x = TimeSeries::new(samples, t as f64).unwrap();
        let s = dft_onesided(&x).unwrap();
        let mags = s.magnitudes();
        assert_abs_diff_eq!(mags[k], t as f64 / 2.0, epsilon = 1e-6);
        for (i, &m) in mags.iter().enumerate() {
            if i != k {
                assert!(m < 1e-6, "bin {i} should be empty, got {m}");
            }
        }
    }

    #[test]
    fn matches_naive_dft() {
        for t in [8, 9, 16, 31] {
            let x = random_signal(t, t as u64);
            let s = dft_onesided(&x).unwrap();
            let reference = naive_dft(x.samples());
            for k in 0..onesided_len(t) {
                assert_abs_diff_eq!(s.coeffs()[k].re, reference[k].re, epsilon = 1e-9);
                assert_abs_diff_eq!(s.coeffs()[k].im, reference[k].im, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn dft_roundtrip_is_exact_even_and_odd() {
        for t in [2, 3, 64, 255, 256, 2560] {
            let x = random_signal(t, 100 + t as u64);
            let back = idft_onesided(&dft_onesided(&x).unwrap()).unwrap();
            assert_eq!(back.len(), t);
            assert_eq!(back.sample_rate(), x.sample_rate());
            for (a, b) in x.samples().iter().zip(back.samples()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn parseval_energy_matches() {
        let t = 256;
        let x = random_signal(t, 9);
        let s = dft_onesided(&x).unwrap();
        let time_energy: f64 = x.samples().iter().map(|v| v * v).sum();
        // One-sided accounting: DC and (even length) Nyquist count once,
        // interior bins twice.
        let mags = s.magnitudes();
        let mut spec_energy = mags[0] * mags[0] + mags[t / 2] * mags[t / 2];
        for m in &mags[1..t / 2] {
            spec_energy += 2.0 * m * m;
        }
        spec_energy /= t as f64;
        assert_abs_diff_eq!(time_energy, spec_energy, epsilon = 1e-9 * time_energy.abs());
    }

    #[test]
    fn idft_rejects_mismatched_views() {
        let x = random_signal(16, 1);
        let s = dft_onesided(&x).unwrap();
        let short = SpectralView {
            coeffs: s.coeffs()[..5].to_vec(),
            shape: Shape::vector(5),
            ..s.clone()
        };
        assert!(matches!(idft_onesided(&short), Err(Error::ShapeError(_))));

        let tf = stdft(&x, &WindowSpec::hann(8, 4)).unwrap();
        assert!(matches!(idft_onesided(&tf), Err(Error::ShapeError(_))));
    }

    #[test]
    fn with_coeffs_requires_matching_length() {
        let x = random_signal(16, 2);
        let s = dft_onesided(&x).unwrap();
        assert!(matches!(
            s.with_coeffs(vec![Complex64::ZERO; 3]),
            Err(Error::ShapeError(_))
        ));
        let same = s.with_coeffs(s.coeffs().to_vec()).unwrap();
        assert_eq!(same, s);
    }

    #[test]
    fn hann_window_is_periodic_variant() {
        let w = WindowSpec::hann(8, 4).coefficients().unwrap();
        assert_abs_diff_eq!(w[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[4], 1.0, epsilon = 1e-15);
        // Periodic symmetry: w[n] == w[L - n] for interior n.
        for n in 1..8 {
            assert_abs_diff_eq!(w[n], w[8 - n], epsilon = 1e-15);
        }
    }

    #[test]
    fn frame_count_follows_hop_formula() {
        let w = WindowSpec::hann(455, 35);
        assert_eq!(frame_count(8000, &w).unwrap(), 216);
        assert_eq!(frame_count(455, &w).unwrap(), 1);
        assert!(matches!(frame_count(454, &w), Err(Error::InvalidWindow(_))));
        assert!(matches!(
            frame_count(100, &WindowSpec::hann(16, 0)),
            Err(Error::InvalidWindow(_))
        ));
        assert!(matches!(
            frame_count(100, &WindowSpec::hann(16, 17)),
            Err(Error::InvalidWindow(_))
        ));
    }

    #[test]
    fn stdft_shape_and_frame_content() {
        let x = random_signal(64, 3);
        let w = WindowSpec::hann(16, 8);
        let s = stdft(&x, &w).unwrap();
        assert_eq!(s.shape(), Shape::matrix(7, 9));
        assert_eq!(s.window(), Some(&w));

        // Each row is the DFT of the windowed frame.
        let coeffs_w = w.coefficients().unwrap();
        for r in 0..7 {
            let start = r * 8;
            let frame: Vec<f64> = (0..16).map(|n| x.samples()[start + n] * coeffs_w[n]).collect();
            let reference = naive_dft(&frame);
            for k in 0..9 {
                assert_abs_diff_eq!(s.row(r)[k].re, reference[k].re, epsilon = 1e-9);
                assert_abs_diff_eq!(s.row(r)[k].im, reference[k].im, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn rectangular_tiling_roundtrip_is_exact() {
        // Non-overlapping rectangular frames tile the signal, so the
        // least-squares inverse reduces to exact frame inversion.
        let x = random_signal(2730, 4);
        let w = WindowSpec::rectangular(455, 455);
        let back = istdft(&stdft(&x, &w).unwrap()).unwrap();
        for (a, b) in x.samples().iter().zip(back.samples()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn hann_overlap_roundtrip_interior() {
        let x = random_signal(200, 5);
        let w = WindowSpec::hann(32, 8);
        let back = istdft(&stdft(&x, &w).unwrap()).unwrap();
        let support = reconstruction_support(&window_energy_profile(&w, 200).unwrap());
        let mut checked = 0;
        for t in 0..200 {
            if support[t] {
                assert_abs_diff_eq!(x.samples()[t], back.samples()[t], epsilon = 1e-6);
                checked += 1;
            } else {
                assert_eq!(back.samples()[t], 0.0);
            }
        }
        assert!(checked > 150, "support should cover most of the signal, got {checked}");
    }

    #[test]
    fn uncovered_tail_reconstructs_to_zero() {
        // 64 samples, window 16 hop 8: frames end at 56 + 16 = 72 > 64,
        // so the last frame starts at 48 and covers through 63; with 65
        // samples the final one goes uncovered.
        let x = random_signal(65, 6);
        let w = WindowSpec::rectangular(16, 8);
        let back = istdft(&stdft(&x, &w).unwrap()).unwrap();
        assert_eq!(back.len(), 65);
        assert_eq!(back.samples()[64], 0.0);
        assert_abs_diff_eq!(x.samples()[0], back.samples()[0], epsilon = 1e-9);
    }

    #[test]
    fn degenerate_window_energy_is_rejected() {
        // Periodic Hann of length 1 is identically zero.
        let x = random_signal(8, 7);
        let w = WindowSpec::hann(1, 1);
        let s = stdft(&x, &w).unwrap();
        assert!(matches!(istdft(&s), Err(Error::InvalidWindow(_))));
    }

    #[test]
    fn inverse_plan_matches_plain_inverse() {
        let x = random_signal(64, 8);

        let s = dft_onesided(&x).unwrap();
        let mut plan = InversePlan::new(&s).unwrap();
        let mask = vec![1.0; s.shape().len()];
        let mut out = vec![0.0; 64];
        plan.masked_inverse_into(s.coeffs(), &mask, &mut out).unwrap();
        for (a, b) in x.samples().iter().zip(&out) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }

        let tf = stdft(&x, &WindowSpec::hann(16, 4)).unwrap();
        let mut plan = InversePlan::new(&tf).unwrap();
        let mask = vec![1.0; tf.shape().len()];
        let mut out = vec![0.0; 64];
        plan.masked_inverse_into(tf.coeffs(), &mask, &mut out).unwrap();
        let reference = istdft(&tf).unwrap();
        for (a, b) in reference.samples().iter().zip(&out) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn masked_inverse_zeroes_the_masked_bin() {
        // Two tones; masking one bin removes exactly that tone.
        let t = 64;
        let samples: Vec<f64> = (0..t)
            .map(|n| {
                let ph = std::f64::consts::TAU * n as f64 / t as f64;
                (ph * 3.0).sin() + 0.5 * (ph * 9.0).cos()
            })
            .collect();
        let x = TimeSeries::new(samples, t as f64).unwrap();
        let s = dft_onesided(&x).unwrap();
        let mut mask = vec![1.0; s.shape().len()];
        mask[9] = 0.0;
        let mut plan = InversePlan::new(&s).unwrap();
        let mut out = vec![0.0; t];
        plan.masked_inverse_into(s.coeffs(), &mask, &mut out).unwrap();
        let expected: Vec<f64> = (0..t)
            .map(|n| (std::f64::consts::TAU * n as f64 / t as f64 * 3.0).sin())
            .collect();
        for (a, b) in expected.iter().zip(&out) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn domain_parses_aliases() {
        assert_eq!("frequency".parse::<Domain>().unwrap(), Domain::Frequency);
        assert_eq!("freq".parse::<Domain>().unwrap(), Domain::Frequency);
        assert_eq!("TIME".parse::<Domain>().unwrap(), Domain::Time);
        assert_eq!("timefreq".parse::<Domain>().unwrap(), Domain::TimeFrequency);
        assert_eq!("time-frequency".parse::<Domain>().unwrap(), Domain::TimeFrequency);
        assert!("fourier".parse::<Domain>().is_err());
    }
}
