//! Random occlusion masks over a masked representation.
//!
//! Two flavors:
//!
//! * binary: every position independently Bernoulli(p);
//! * grid: a coarse binary grid, upsampled to the target shape by linear
//!   (1-D) or bilinear (2-D) interpolation, which yields smooth masks in
//!   `[0, 1]`.
//!
//! Interpolation is align-corners: grid node `j` of `g` sits at target
//! position `j·(D−1)/(g−1)`, so the first and last nodes coincide with the
//! first and last target positions.
//!
//! Mask `i` is a pure function of `(seed, i)`; sampling order and thread
//! count never change the result, and a single mask can be regenerated
//! without the rest of its batch.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, StreamKind};
use crate::transforms::Shape;

/// Coarse-grid layout for interpolated masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpec {
    /// `g` nodes along a vector target.
    OneD(usize),
    /// `rows × cols` nodes over a matrix target.
    TwoD { rows: usize, cols: usize },
}

impl GridSpec {
    /// Checks the grid against the shape it will be upsampled to: at
    /// least two nodes per axis, no more nodes than target positions,
    /// and matching dimensionality.
    pub fn validate_for(&self, target: Shape) -> Result<()> {
        match *self {
            GridSpec::OneD(g) => {
                if !target.is_vector() {
                    return Err(Error::InvalidGrid(format!(
                        "one-dimensional grid cannot cover a {target} target"
                    )));
                }
                if g < 2 || g > target.cols {
                    return Err(Error::InvalidGrid(format!(
                        "grid size {g} must be in [2, {}]",
                        target.cols
                    )));
                }
            }
            GridSpec::TwoD { rows, cols } => {
                if target.rows < 2 {
                    return Err(Error::InvalidGrid(format!(
                        "two-dimensional grid cannot cover a {target} target"
                    )));
                }
                if rows < 2 || rows > target.rows || cols < 2 || cols > target.cols {
                    return Err(Error::InvalidGrid(format!(
                        "grid {rows}x{cols} must fit within [2, {}] x [2, {}]",
                        target.rows, target.cols
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::OneD(g) => write!(f, "{g}"),
            GridSpec::TwoD { rows, cols } => write!(f, "{rows}x{cols}"),
        }
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    /// `"200"` parses as a line of 200 nodes, `"25x25"` as a plane.
    fn from_str(s: &str) -> Result<Self> {
        let parse_dim = |part: &str| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidGrid(format!("cannot parse grid dimension {part:?}")))
        };
        match s.split_once(['x', 'X']) {
            None => Ok(GridSpec::OneD(parse_dim(s)?)),
            Some((r, c)) => Ok(GridSpec::TwoD { rows: parse_dim(r)?, cols: parse_dim(c)? }),
        }
    }
}

/// Linearly upsamples `nodes` to `len` positions, align-corners.
pub fn interpolate_line(nodes: &[f64], len: usize) -> Result<Vec<f64>> {
    if nodes.len() < 2 || nodes.len() > len {
        return Err(Error::InvalidGrid(format!(
            "{} nodes cannot be upsampled to {len} positions",
            nodes.len()
        )));
    }
    let mut out = vec![0.0; len];
    line_into(nodes, nodes.len(), 0.0, &mut out);
    Ok(out)
}

/// Bilinearly upsamples a `grid.0 × grid.1` node matrix (row-major) to a
/// `target` matrix, align-corners on both axes.
pub fn interpolate_grid(nodes: &[f64], grid: (usize, usize), target: Shape) -> Result<Vec<f64>> {
    let (gr, gc) = grid;
    GridSpec::TwoD { rows: gr, cols: gc }.validate_for(target)?;
    if nodes.len() != gr * gc {
        return Err(Error::InvalidGrid(format!(
            "expected {gr}x{gc} = {} node values, got {}",
            gr * gc,
            nodes.len()
        )));
    }
    let mut out = vec![0.0; target.len()];
    plane_into(nodes, (gr, gc), (gr, gc), (0.0, 0.0), target, &mut out);
    Ok(out)
}

/// Maps target index `t` of `len` into grid coordinates with `base` node
/// intervals, then resolves the two surrounding nodes of `count` stored.
#[inline]
fn node_coord(t: usize, len: usize, base: usize, offset: f64, count: usize) -> (usize, usize, f64) {
    let c = t as f64 * (base as f64 - 1.0) / (len as f64 - 1.0) + offset;
    let i0 = (c.floor() as usize).min(count - 1);
    let i1 = (i0 + 1).min(count - 1);
    let frac = (c - i0 as f64).clamp(0.0, 1.0);
    (i0, i1, frac)
}

/// `base` is the grid size the coordinate mapping assumes; when a random
/// shift is active the node array holds one extra node and `offset` moves
/// every coordinate by up to one interval.
fn line_into(nodes: &[f64], base: usize, offset: f64, out: &mut [f64]) {
    let len = out.len();
    for (t, slot) in out.iter_mut().enumerate() {
        let (i0, i1, frac) = node_coord(t, len, base, offset, nodes.len());
        *slot = nodes[i0] * (1.0 - frac) + nodes[i1] * frac;
    }
}

fn plane_into(
    nodes: &[f64],
    stored: (usize, usize),
    base: (usize, usize),
    offset: (f64, f64),
    target: Shape,
    out: &mut [f64],
) {
    for r in 0..target.rows {
        let (r0, r1, fr) = node_coord(r, target.rows, base.0, offset.0, stored.0);
        for c in 0..target.cols {
            let (c0, c1, fc) = node_coord(c, target.cols, base.1, offset.1, stored.1);
            let top = nodes[r0 * stored.1 + c0] * (1.0 - fc) + nodes[r0 * stored.1 + c1] * fc;
            let bottom = nodes[r1 * stored.1 + c0] * (1.0 - fc) + nodes[r1 * stored.1 + c1] * fc;
            out[r * target.cols + c] = top * (1.0 - fr) + bottom * fr;
        }
    }
}

/// Deterministic mask source: mask `i` depends only on the constructor
/// arguments and `i`.
#[derive(Debug, Clone)]
pub struct MaskSampler {
    shape: Shape,
    p: f64,
    grid: Option<GridSpec>,
    /// When set, grid masks get one extra node per axis and a random
    /// sub-interval shift, decorrelating mask values from the fixed node
    /// positions.
    shift: bool,
    seed: u64,
}

impl MaskSampler {
    pub fn new(
        shape: Shape,
        p: f64,
        grid: Option<GridSpec>,
        shift: bool,
        seed: u64,
    ) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::param("mask target shape must be non-empty"));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::param(format!("keep probability must lie in (0, 1), got {p}")));
        }
        if let Some(g) = &grid {
            g.validate_for(shape)?;
        }
        if shift && grid.is_none() {
            return Err(Error::param("shift only applies to grid masks"));
        }
        Ok(MaskSampler { shape, p, grid, shift, seed })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn keep_probability(&self) -> f64 {
        self.p
    }

    pub fn grid(&self) -> Option<GridSpec> {
        self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Writes mask `index` into `out` (row-major, `shape.len()` values).
    pub fn mask_into(&self, index: u64, out: &mut [f64]) -> Result<()> {
        if out.len() != self.shape.len() {
            return Err(Error::shape(format!(
                "mask buffer has {} slots, shape {} needs {}",
                out.len(),
                self.shape,
                self.shape.len()
            )));
        }
        let mut rng = substream(self.seed, StreamKind::Mask, index);
        match self.grid {
            None => {
                for slot in out.iter_mut() {
                    *slot = if rng.random::<f64>() < self.p { 1.0 } else { 0.0 };
                }
            }
            Some(GridSpec::OneD(g)) => {
                let stored = if self.shift { g + 1 } else { g };
                let nodes: Vec<f64> = (0..stored)
                    .map(|_| if rng.random::<f64>() < self.p { 1.0 } else { 0.0 })
                    .collect();
                let offset = if self.shift { rng.random::<f64>() } else { 0.0 };
                line_into(&nodes, g, offset, out);
            }
            Some(GridSpec::TwoD { rows, cols }) => {
                let stored = if self.shift { (rows + 1, cols + 1) } else { (rows, cols) };
                let nodes: Vec<f64> = (0..stored.0 * stored.1)
                    .map(|_| if rng.random::<f64>() < self.p { 1.0 } else { 0.0 })
                    .collect();
                let offset = if self.shift {
                    let r = rng.random::<f64>();
                    let c = rng.random::<f64>();
                    (r, c)
                } else {
                    (0.0, 0.0)
                };
                plane_into(&nodes, stored, (rows, cols), offset, self.shape, out);
            }
        }
        Ok(())
    }

    pub fn mask(&self, index: u64) -> Vec<f64> {
        let mut out = vec![0.0; self.shape.len()];
        self.mask_into(index, &mut out).expect("buffer sized from own shape");
        out
    }

    /// Materializes masks `0..n` as a batch.
    pub fn batch(&self, n: usize) -> Result<MaskBatch> {
        if n == 0 {
            return Err(Error::param("mask batch must contain at least one mask"));
        }
        let d = self.shape.len();
        let mut masks = vec![0.0; n * d];
        for (i, chunk) in masks.chunks_mut(d).enumerate() {
            self.mask_into(i as u64, chunk)?;
        }
        Ok(MaskBatch {
            masks,
            n,
            shape: self.shape,
            p: self.p,
            grid: self.grid,
            seed: self.seed,
        })
    }
}

/// A materialized set of masks, row-major `n × shape.len()`, together with
/// the sampling parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskBatch {
    masks: Vec<f64>,
    n: usize,
    shape: Shape,
    p: f64,
    grid: Option<GridSpec>,
    seed: u64,
}

impl MaskBatch {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn keep_probability(&self) -> f64 {
        self.p
    }

    pub fn grid(&self) -> Option<GridSpec> {
        self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get(&self, i: usize) -> &[f64] {
        let d = self.shape.len();
        &self.masks[i * d..(i + 1) * d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.masks.chunks(self.shape.len())
    }
}

/// Independent Bernoulli(p) masks: `n` of them over `shape`.
pub fn sample_binary_masks(shape: Shape, p: f64, n: usize, seed: u64) -> Result<MaskBatch> {
    MaskSampler::new(shape, p, None, false, seed)?.batch(n)
}

/// Interpolated coarse-grid masks: `n` of them over `shape`.
pub fn sample_grid_masks(
    grid: GridSpec,
    shape: Shape,
    p: f64,
    n: usize,
    seed: u64,
) -> Result<MaskBatch> {
    MaskSampler::new(shape, p, Some(grid), false, seed)?.batch(n)
}

/// Per-position mean of a batch; the empirical keep rate.
pub fn expected_mask(batch: &MaskBatch) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::param("expected mask of an empty batch is undefined"));
    }
    let d = batch.shape().len();
    let mut mean = vec![0.0; d];
    for mask in batch.iter() {
        for (m, &v) in mean.iter_mut().zip(mask) {
            *m += v;
        }
    }
    let inv = 1.0 / batch.len() as f64;
    for m in &mut mean {
        *m *= inv;
    }
    Ok(mean)
}
