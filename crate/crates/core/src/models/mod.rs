//! Classifier interface and the bundled implementations.
//!
//! Relevance estimation only needs to query a model, never to look inside
//! it, so everything downstream works against [`BlackBoxModel`]. Three
//! implementations ship here: a trainable multilayer perceptron, an
//! analytic spectrum-threshold classifier for controlled experiments, and
//! a client for external models spoken to over a line protocol.

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod external;
mod mlp;
mod oracle;
mod train;

pub use external::{serve_echo, EchoMode, ExternalModel, WireRequest, WireResponse};
pub use mlp::MlpModel;
pub use oracle::OracleModel;
pub use train::{gradient_check_max_rel_error, mlp_train, TrainConfig, TrainReport, Trained};

/// Which score an explanation attributes: raw class logit or softmax
/// probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Logit,
    Probability,
}

impl fmt::Display for OutputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputKind::Logit => "logit",
            OutputKind::Probability => "probability",
        })
    }
}

impl FromStr for OutputKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logit" | "logits" => Ok(OutputKind::Logit),
            "probability" | "prob" | "softmax" => Ok(OutputKind::Probability),
            other => Err(Error::param(format!(
                "unknown output kind {other:?}; expected logit or probability"
            ))),
        }
    }
}

/// Numerically stable softmax; subtracts the max before exponentiating.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// Per-signal classifier response: one logit per class.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    logits: Vec<f64>,
}

impl ModelOutput {
    pub fn new(logits: Vec<f64>) -> Result<Self> {
        if logits.is_empty() {
            return Err(Error::param("model output needs at least one class logit"));
        }
        if let Some(i) = logits.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite logit for class {i}")));
        }
        Ok(ModelOutput { logits })
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn num_classes(&self) -> usize {
        self.logits.len()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        softmax(&self.logits)
    }

    /// Predicted class; ties resolve to the smallest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.logits.iter().enumerate().skip(1) {
            if v > self.logits[best] {
                best = i;
            }
        }
        best
    }

    /// The scalar an explanation run attributes for `class`.
    pub fn score(&self, class: usize, kind: OutputKind) -> Result<f64> {
        if class >= self.logits.len() {
            return Err(Error::param(format!(
                "class {class} out of range for {} classes",
                self.logits.len()
            )));
        }
        Ok(match kind {
            OutputKind::Logit => self.logits[class],
            OutputKind::Probability => self.probabilities()[class],
        })
    }
}

/// A classifier that can be queried but not inspected.
///
/// `predict_batch` takes signals as rows. Implementations must be
/// deterministic: the whole relevance pipeline assumes a repeated query
/// returns the same logits.
pub trait BlackBoxModel: Send + Sync {
    /// Expected signal length, if the model fixes one.
    fn input_len(&self) -> Option<usize>;

    /// Number of classes, if known before the first query.
    fn num_classes(&self) -> Option<usize>;

    fn predict_batch(&self, batch: ArrayView2<'_, f64>) -> Result<Vec<ModelOutput>>;
}
