//! Analytic classifier for controlled experiments.
//!
//! The model watches a fixed set of frequency bins. Each bin's DFT
//! magnitude is compared against a threshold; the signed distances become
//! class logits for every subset of the watched bins. A signal built from
//! unit sinusoids (magnitude `T/2` on its bins, ~0 elsewhere) is therefore
//! classified perfectly, and the ground-truth explanation is exactly the
//! bins of the subset it carries.

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::models::{BlackBoxModel, ModelOutput};
use crate::transforms::{dft_onesided, TimeSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleModel {
    components: Vec<usize>,
    input_len: usize,
    /// Magnitude at which a bin counts as present; defaults to `T/4`,
    /// halfway between an absent bin (0) and a unit sinusoid (`T/2`).
    threshold: f64,
    /// Evidence scale; defaults to `T/8` so a clean signal scores ±2.
    scale: f64,
}

impl OracleModel {
    pub fn new(components: Vec<usize>, input_len: usize) -> Result<Self> {
        let t = input_len as f64;
        Self::with_params(components, input_len, t / 4.0, t / 8.0)
    }

    pub fn with_params(
        components: Vec<usize>,
        input_len: usize,
        threshold: f64,
        scale: f64,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidSubset("component set must be non-empty".into()));
        }
        if components.len() > 16 {
            return Err(Error::InvalidSubset(format!(
                "{} components would need more than 2^16 classes",
                components.len()
            )));
        }
        let mut seen = components.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSubset("component bins must be distinct".into()));
        }
        if input_len < 2 {
            return Err(Error::param(format!("input length {input_len} is too short")));
        }
        for &k in &components {
            if k == 0 || k >= input_len.div_ceil(2) {
                return Err(Error::InvalidSubset(format!(
                    "bin {k} outside the usable band (0, {})",
                    input_len.div_ceil(2)
                )));
            }
        }
        if !(scale > 0.0) || !threshold.is_finite() {
            return Err(Error::param("threshold must be finite and scale positive"));
        }
        Ok(OracleModel { components, input_len, threshold, scale })
    }

    pub fn components(&self) -> &[usize] {
        &self.components
    }

    fn logits_for(&self, signal: &[f64]) -> Result<Vec<f64>> {
        let x = TimeSeries::new(signal.to_vec(), self.input_len as f64)?;
        let spectrum = dft_onesided(&x)?;
        let evidence: Vec<f64> = self
            .components
            .iter()
            .map(|&k| (spectrum.coeffs()[k].norm() - self.threshold) / self.scale)
            .collect();
        let classes = 1usize << self.components.len();
        let mut logits = Vec::with_capacity(classes);
        for c in 0..classes {
            let mut z = 0.0;
            for (i, &e) in evidence.iter().enumerate() {
                z += if c >> i & 1 == 1 { e } else { -e };
            }
            logits.push(z);
        }
        Ok(logits)
    }
}

impl BlackBoxModel for OracleModel {
    fn input_len(&self) -> Option<usize> {
        Some(self.input_len)
    }

    fn num_classes(&self) -> Option<usize> {
        Some(1 << self.components.len())
    }

    fn predict_batch(&self, batch: ArrayView2<'_, f64>) -> Result<Vec<ModelOutput>> {
        if batch.ncols() != self.input_len {
            return Err(Error::shape(format!(
                "batch has {} columns, model expects {}",
                batch.ncols(),
                self.input_len
            )));
        }
        batch
            .rows()
            .into_iter()
            .map(|row| ModelOutput::new(self.logits_for(&row.to_vec())?))
            .collect()
    }
}
