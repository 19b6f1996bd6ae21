//! Fully connected classifier with ReLU hidden layers.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::models::{BlackBoxModel, ModelOutput};
use crate::rng::{substream, StreamKind};

/// Hidden layer widths of the standard architecture.
pub(crate) const HIDDEN: [usize; 3] = [64, 64, 64];

const MAGIC: &[u8; 4] = b"FRML";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Affine {
    /// `out × in`, row per output unit.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Multilayer perceptron over raw signals. Optionally standardizes each
/// input row (zero mean, unit variance) before the first layer; the flag
/// is part of the model and survives save/load, so a trained model always
/// sees inputs the way it was trained.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub(crate) layers: Vec<Affine>,
    pub(crate) standardize: bool,
}

impl MlpModel {
    /// Fresh model with He-initialized weights and zero biases.
    /// `widths` runs input first, classes last.
    pub fn new(widths: &[usize], standardize: bool, seed: u64) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::param("an MLP needs at least an input and an output width"));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::param("layer widths must be positive"));
        }
        let mut rng = substream(seed, StreamKind::ModelInit, 0);
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for pair in widths.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt())
                .expect("positive std");
            let weight =
                Array2::from_shape_simple_fn((fan_out, fan_in), || dist.sample(&mut rng));
            layers.push(Affine { weight, bias: Array1::zeros(fan_out) });
        }
        Ok(MlpModel { layers, standardize })
    }

    /// The standard architecture: three hidden layers of 64 units.
    pub fn standard(input_len: usize, num_classes: usize, seed: u64) -> Result<Self> {
        let mut widths = vec![input_len];
        widths.extend_from_slice(&HIDDEN);
        widths.push(num_classes);
        Self::new(&widths, true, seed)
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].weight.ncols()];
        w.extend(self.layers.iter().map(|l| l.weight.nrows()));
        w
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weight.ncols()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("at least one layer").weight.nrows()
    }

    pub fn standardizes_inputs(&self) -> bool {
        self.standardize
    }

    pub(crate) fn standardized(&self, batch: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut h = batch.to_owned();
        if self.standardize {
            for mut row in h.axis_iter_mut(Axis(0)) {
                let n = row.len() as f64;
                let mean = row.sum() / n;
                let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                let inv = 1.0 / var.sqrt().max(1e-12);
                row.mapv_inplace(|v| (v - mean) * inv);
            }
        }
        h
    }

    /// Logits for a batch of signals, one row per signal.
    pub fn forward_logits(&self, batch: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if batch.ncols() != self.input_width() {
            return Err(Error::shape(format!(
                "batch has {} columns, model expects {}",
                batch.ncols(),
                self.input_width()
            )));
        }
        let mut h = self.standardized(batch);
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = h.dot(&layer.weight.t());
            z += &layer.bias;
            if i < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            h = z;
        }
        Ok(h)
    }

    /// Serializes architecture and parameters. `tag` rides along verbatim
    /// (the CLI stores its configuration digest there).
    pub fn save(&self, path: &Path, tag: Option<&str>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&[self.standardize as u8])?;
        let tag = tag.unwrap_or("");
        w.write_all(&(tag.len() as u32).to_le_bytes())?;
        w.write_all(tag.as_bytes())?;
        w.write_all(&(self.layers.len() as u32).to_le_bytes())?;
        for layer in &self.layers {
            w.write_all(&(layer.weight.nrows() as u32).to_le_bytes())?;
            w.write_all(&(layer.weight.ncols() as u32).to_le_bytes())?;
        }
        for layer in &self.layers {
            for v in layer.weight.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
            for v in layer.bias.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a model back; returns the model and the stored tag, if any.
    pub fn load(path: &Path) -> Result<(Self, Option<String>)> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::InvalidFormat("not a model file (bad magic)".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(Error::InvalidFormat(format!(
                "model format version {version} is not supported (expected {FORMAT_VERSION})"
            )));
        }
        let mut flag = [0u8; 1];
        read_exact(&mut r, &mut flag)?;
        if flag[0] > 1 {
            return Err(Error::InvalidFormat(format!("invalid standardize flag {}", flag[0])));
        }
        let standardize = flag[0] == 1;
        let tag_len = read_u32(&mut r)? as usize;
        if tag_len > 1 << 20 {
            return Err(Error::InvalidFormat(format!("unreasonable tag length {tag_len}")));
        }
        let mut tag_bytes = vec![0u8; tag_len];
        read_exact(&mut r, &mut tag_bytes)?;
        let tag = String::from_utf8(tag_bytes)
            .map_err(|_| Error::InvalidFormat("model tag is not valid UTF-8".into()))?;
        let n_layers = read_u32(&mut r)? as usize;
        if n_layers == 0 || n_layers > 1024 {
            return Err(Error::InvalidFormat(format!("unreasonable layer count {n_layers}")));
        }
        let mut shapes = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let rows = read_u32(&mut r)? as usize;
            let cols = read_u32(&mut r)? as usize;
            if rows == 0 || cols == 0 {
                return Err(Error::InvalidFormat("zero-sized layer".into()));
            }
            shapes.push((rows, cols));
        }
        for pair in shapes.windows(2) {
            if pair[1].1 != pair[0].0 {
                return Err(Error::InvalidFormat(format!(
                    "layer widths do not chain: {}x{} followed by {}x{}",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                )));
            }
        }
        let mut layers = Vec::with_capacity(n_layers);
        for (rows, cols) in shapes {
            let mut weight = Array2::zeros((rows, cols));
            for v in weight.iter_mut() {
                *v = read_f64(&mut r)?;
            }
            let mut bias = Array1::zeros(rows);
            for v in bias.iter_mut() {
                *v = read_f64(&mut r)?;
            }
            layers.push(Affine { weight, bias });
        }
        let model = MlpModel { layers, standardize };
        Ok((model, if tag.is_empty() { None } else { Some(tag) }))
    }
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::InvalidFormat("model file is truncated".into())
        } else {
            Error::Io(e)
        }
    })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

impl BlackBoxModel for MlpModel {
    fn input_len(&self) -> Option<usize> {
        Some(self.input_width())
    }

    fn num_classes(&self) -> Option<usize> {
        Some(self.output_width())
    }

    fn predict_batch(&self, batch: ArrayView2<'_, f64>) -> Result<Vec<ModelOutput>> {
        let logits = self.forward_logits(batch)?;
        logits
            .axis_iter(Axis(0))
            .map(|row| ModelOutput::new(row.to_vec()))
            .collect()
    }
}
