//! Supervised training for [`MlpModel`]: minibatch cross-entropy descent
//! with Adam. Gradients are computed by hand here and verified against
//! central differences in the test suite, so the optimizer rests on
//! checked math rather than on faith in the implementation.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::LabeledSample;
use crate::error::{Error, Result};
use crate::models::mlp::{Affine, MlpModel};
use crate::rng::{substream, StreamKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Zero epochs is legal and leaves the freshly initialized model
    /// untouched; useful as a chance-level control.
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: 1e-3, batch_size: 128, epochs: 20, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch size must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean cross-entropy per epoch, in training order.
    pub epoch_losses: Vec<f64>,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug)]
pub struct Trained {
    pub model: MlpModel,
    pub report: TrainReport,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

struct AdamState {
    m: Vec<Affine>,
    v: Vec<Affine>,
    step: u64,
}

impl AdamState {
    fn new(model: &MlpModel) -> Self {
        let zeros = |l: &Affine| Affine {
            weight: Array2::zeros(l.weight.dim()),
            bias: Array1::zeros(l.bias.len()),
        };
        AdamState {
            m: model.layers.iter().map(zeros).collect(),
            v: model.layers.iter().map(zeros).collect(),
            step: 0,
        }
    }

    fn apply(&mut self, model: &mut MlpModel, grads: &[Affine], lr: f64) {
        self.step += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.step as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.step as i32);
        for ((layer, grad), (m, v)) in
            model.layers.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                let mhat = *m / bc1;
                let vhat = *v / bc2;
                *p -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
            };
            for ((p, &g), (m, v)) in layer
                .weight
                .iter_mut()
                .zip(grad.weight.iter())
                .zip(m.weight.iter_mut().zip(v.weight.iter_mut()))
            {
                update(p, g, m, v);
            }
            for ((p, &g), (m, v)) in layer
                .bias
                .iter_mut()
                .zip(grad.bias.iter())
                .zip(m.bias.iter_mut().zip(v.bias.iter_mut()))
            {
                update(p, g, m, v);
            }
        }
    }
}

/// Mean cross-entropy of the model on a labeled batch.
pub fn batch_loss(model: &MlpModel, batch: ArrayView2<'_, f64>, labels: &[u16]) -> Result<f64> {
    let (loss, _) = forward_backward(model, batch, labels, false)?;
    Ok(loss)
}

pub(crate) fn loss_and_gradients(
    model: &MlpModel,
    batch: ArrayView2<'_, f64>,
    labels: &[u16],
) -> Result<(f64, Vec<Affine>)> {
    let (loss, grads) = forward_backward(model, batch, labels, true)?;
    Ok((loss, grads.expect("gradients requested")))
}

/// Shared forward pass with optional backward pass. The loss is the mean
/// over the batch of `logsumexp(z) − z[label]`.
fn forward_backward(
    model: &MlpModel,
    batch: ArrayView2<'_, f64>,
    labels: &[u16],
    with_grads: bool,
) -> Result<(f64, Option<Vec<Affine>>)> {
    let b = batch.nrows();
    if labels.len() != b {
        return Err(Error::shape(format!("{b} signals but {} labels", labels.len())));
    }
    if b == 0 {
        return Err(Error::param("batch must be non-empty"));
    }
    let classes = model.output_width();
    if let Some(&bad) = labels.iter().find(|&&l| usize::from(l) >= classes) {
        return Err(Error::param(format!("label {bad} out of range for {classes} classes")));
    }

    // Forward, keeping each layer's input for the backward pass.
    let mut activations: Vec<Array2<f64>> = vec![model.standardized(batch)];
    let last = model.layers.len() - 1;
    for (i, layer) in model.layers.iter().enumerate() {
        let mut z = activations[i].dot(&layer.weight.t());
        z += &layer.bias;
        if i < last {
            z.mapv_inplace(|v| v.max(0.0));
        }
        activations.push(z);
    }
    let logits = &activations[model.layers.len()];

    // Loss and the softmax-minus-onehot residual in one sweep.
    let mut loss = 0.0;
    let mut delta = Array2::zeros((b, classes));
    for (i, row) in logits.axis_iter(Axis(0)).enumerate() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = row.iter().map(|&z| (z - max).exp()).sum();
        let lse = max + sum_exp.ln();
        let y = usize::from(labels[i]);
        loss += lse - row[y];
        for (c, &z) in row.iter().enumerate() {
            let p = (z - max).exp() / sum_exp;
            delta[[i, c]] = (p - f64::from(u8::from(c == y))) / b as f64;
        }
    }
    loss /= b as f64;

    if !with_grads {
        return Ok((loss, None));
    }

    // Backward: walk the layers in reverse, gating through ReLU between.
    let mut grads: Vec<Affine> = Vec::with_capacity(model.layers.len());
    let mut dz = delta;
    for (i, layer) in model.layers.iter().enumerate().rev() {
        let grad_w = dz.t().dot(&activations[i]);
        let grad_b = dz.sum_axis(Axis(0));
        grads.push(Affine { weight: grad_w, bias: grad_b });
        if i > 0 {
            let mut da = dz.dot(&layer.weight);
            // The stored activation is already rectified; positive means
            // the unit was active.
            da.zip_mut_with(&activations[i], |g, &a| {
                if a <= 0.0 {
                    *g = 0.0;
                }
            });
            dz = da;
        }
    }
    grads.reverse();
    Ok((loss, Some(grads)))
}

fn accuracy(model: &MlpModel, samples: &[LabeledSample], batch_size: usize) -> Result<f64> {
    let mut correct = 0usize;
    for chunk in samples.chunks(batch_size) {
        let x = batch_matrix(chunk)?;
        let logits = model.forward_logits(x.view())?;
        for (row, sample) in logits.axis_iter(Axis(0)).zip(chunk) {
            let mut best = 0;
            for (c, &z) in row.iter().enumerate() {
                if z > row[best] {
                    best = c;
                }
            }
            correct += usize::from(best == usize::from(sample.label));
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}

fn batch_matrix(samples: &[LabeledSample]) -> Result<Array2<f64>> {
    let len = samples[0].signal.len();
    let mut x = Array2::zeros((samples.len(), len));
    for (i, s) in samples.iter().enumerate() {
        if s.signal.len() != len {
            return Err(Error::shape(format!(
                "sample {i} has length {}, expected {len}",
                s.signal.len()
            )));
        }
        x.row_mut(i).assign(&ndarray::ArrayView1::from(&s.signal[..]));
    }
    Ok(x)
}

/// Trains the standard architecture on `train`, reporting accuracy on it
/// and optionally on `test`. Shuffling and weight init derive from
/// `cfg.seed` alone, so a run is exactly reproducible.
pub fn mlp_train(
    train: &[LabeledSample],
    test: Option<&[LabeledSample]>,
    num_classes: usize,
    cfg: &TrainConfig,
) -> Result<Trained> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::param("training set is empty"));
    }
    if num_classes < 2 {
        return Err(Error::param("need at least two classes"));
    }
    if let Some(bad) = train.iter().chain(test.into_iter().flatten()).find(|s| usize::from(s.label) >= num_classes)
    {
        return Err(Error::param(format!(
            "label {} out of range for {num_classes} classes",
            bad.label
        )));
    }
    let input_len = train[0].signal.len();
    if let Some((i, s)) = train
        .iter()
        .chain(test.into_iter().flatten())
        .enumerate()
        .find(|(_, s)| s.signal.len() != input_len)
    {
        return Err(Error::shape(format!(
            "sample {i} has length {}, expected {input_len}",
            s.signal.len()
        )));
    }

    let mut model = MlpModel::standard(input_len, num_classes, cfg.seed)?;
    let mut adam = AdamState::new(&model);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 0..cfg.epochs {
        let mut rng = substream(cfg.seed, StreamKind::EpochShuffle, epoch as u64);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch_ids in order.chunks(cfg.batch_size) {
            let mut x = Array2::zeros((batch_ids.len(), input_len));
            for (r, &i) in batch_ids.iter().enumerate() {
                x.row_mut(r).assign(&ndarray::ArrayView1::from(&train[i].signal[..]));
            }
            let labels: Vec<u16> = batch_ids.iter().map(|&i| train[i].label).collect();
            let (loss, grads) = loss_and_gradients(&model, x.view(), &labels)?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            adam.apply(&mut model, &grads, cfg.learning_rate);
            epoch_loss += loss * batch_ids.len() as f64;
        }
        epoch_losses.push(epoch_loss / train.len() as f64);
    }

    let train_accuracy = accuracy(&model, train, cfg.batch_size.max(64))?;
    let test_accuracy = match test {
        Some(t) if !t.is_empty() => Some(accuracy(&model, t, cfg.batch_size.max(64))?),
        _ => None,
    };
    Ok(Trained {
        model,
        report: TrainReport { epoch_losses, train_accuracy, test_accuracy },
    })
}

/// Compares analytic gradients against central finite differences on a
/// random batch and returns the worst relative disagreement across every
/// parameter. Relative means `|a − b| / max(|a|, |b|, 1e-6)`, so tiny
/// gradients are compared on an absolute scale.
pub fn gradient_check_max_rel_error(
    widths: &[usize],
    batch: usize,
    seed: u64,
) -> Result<f64> {
    use rand::Rng;

    if batch == 0 {
        return Err(Error::param("need at least one signal to check gradients"));
    }
    let mut model = MlpModel::new(widths, false, seed)?;
    let input = model.input_width();
    let classes = model.output_width();
    let mut rng = substream(seed, StreamKind::ModelInit, 1);
    let x = Array2::from_shape_simple_fn((batch, input), || rng.random_range(-1.0..1.0));
    let labels: Vec<u16> = (0..batch).map(|_| rng.random_range(0..classes as u16)).collect();

    let (_, grads) = loss_and_gradients(&model, x.view(), &labels)?;

    let eps = 1e-5;
    let mut worst = 0.0_f64;
    for li in 0..model.layers.len() {
        let n_weights = model.layers[li].weight.len();
        let n_bias = model.layers[li].bias.len();
        for pi in 0..n_weights + n_bias {
            let read = |m: &MlpModel| {
                let l = &m.layers[li];
                if pi < n_weights {
                    l.weight.as_slice().expect("standard layout")[pi]
                } else {
                    l.bias[pi - n_weights]
                }
            };
            let write = |m: &mut MlpModel, v: f64| {
                let l = &mut m.layers[li];
                if pi < n_weights {
                    l.weight.as_slice_mut().expect("standard layout")[pi] = v;
                } else {
                    l.bias[pi - n_weights] = v;
                }
            };
            let original = read(&model);
            write(&mut model, original + eps);
            let plus = batch_loss(&model, x.view(), &labels)?;
            write(&mut model, original - eps);
            let minus = batch_loss(&model, x.view(), &labels)?;
            write(&mut model, original);
            let numeric = (plus - minus) / (2.0 * eps);
            let analytic = if pi < n_weights {
                grads[li].weight.as_slice().expect("standard layout")[pi]
            } else {
                grads[li].bias[pi - n_weights]
            };
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
