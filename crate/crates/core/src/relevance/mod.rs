//! Relevance estimation by randomized masking.
//!
//! For a class score `f` and a masked representation of the input, the
//! relevance of position `λ` is the expected score over random masks
//! that keep `λ`:
//!
//! ```text
//! R(λ) = E[ f(x̂(M)) | M(λ) = 1 ]
//! ```
//!
//! where `x̂(M)` is the input reconstructed from its representation with
//! mask `M` applied. [`explain`] estimates this with `N` sampled masks by
//! importance-weighting each score with the mask itself:
//!
//! ```text
//! R̂(λ) = Σₙ f(x̂(Mₙ)) · Mₙ(λ) / Σₙ Mₙ(λ)
//! ```
//!
//! [`exact_relevance`] evaluates the same quantity by enumerating all
//! `2^D` binary masks, which is tractable only for tiny `D` but provides
//! a ground truth the estimator must converge to.
//!
//! Results are deterministic for a fixed `(input, model, config)`: masks
//! come from counter-based streams, and scores are folded in mask order
//! regardless of thread count.

mod export;

pub use export::{read_relevance_map, write_relevance_map};

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masks::{GridSpec, MaskSampler};
use crate::models::{BlackBoxModel, OutputKind};
use crate::transforms::{dft_onesided, stdft, Domain, InversePlan, Shape, SpectralView, TimeSeries, WindowSpec};

/// Positions beyond which exact enumeration is refused.
pub const MAX_EXACT_POSITIONS: usize = 20;

/// Guard against dividing by an empty mask column.
const MASS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainConfig {
    /// Representation the masks act on.
    pub domain: Domain,
    /// Number of sampled masks.
    pub n_masks: usize,
    /// Bernoulli keep probability per position (or grid node).
    pub keep_probability: f64,
    /// Coarse grid for smooth masks; `None` masks every position
    /// independently.
    pub grid: Option<GridSpec>,
    /// Which score is attributed.
    pub output_kind: OutputKind,
    /// Analysis window, required for the time-frequency domain.
    pub window: Option<WindowSpec>,
    pub seed: u64,
    /// Masks per model query.
    pub batch_size: usize,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            domain: Domain::Frequency,
            n_masks: 3000,
            keep_probability: 0.5,
            grid: None,
            output_kind: OutputKind::Probability,
            window: None,
            seed: 0,
            batch_size: 64,
        }
    }
}

impl ExplainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_masks == 0 {
            return Err(Error::param("need at least one mask"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch size must be positive"));
        }
        if !(self.keep_probability > 0.0 && self.keep_probability < 1.0) {
            return Err(Error::param(format!(
                "keep probability must lie in (0, 1), got {}",
                self.keep_probability
            )));
        }
        if self.domain == Domain::TimeFrequency && self.window.is_none() {
            return Err(Error::InvalidWindow(
                "time-frequency masking requires a window".into(),
            ));
        }
        Ok(())
    }
}

/// Per-position relevance of one input for one class, together with the
/// parameters that produced it. Values are finite and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceMap {
    values: Vec<f64>,
    shape: Shape,
    domain: Domain,
    class: usize,
    /// Masks that went into the estimate; `2^D` for exact enumeration,
    /// 0 for analytic maps such as baselines.
    n_masks: usize,
    keep_probability: f64,
    grid: Option<GridSpec>,
    seed: u64,
    output_kind: OutputKind,
    window: Option<WindowSpec>,
}

impl RelevanceMap {
    /// Validating constructor for maps built outside [`explain`] (file
    /// loads, baselines, tests).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        values: Vec<f64>,
        shape: Shape,
        domain: Domain,
        class: usize,
        n_masks: usize,
        keep_probability: f64,
        grid: Option<GridSpec>,
        seed: u64,
        output_kind: OutputKind,
        window: Option<WindowSpec>,
    ) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::shape(format!(
                "{} values do not fill shape {shape}",
                values.len()
            )));
        }
        if values.is_empty() {
            return Err(Error::shape("relevance map cannot be empty"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::param(format!(
                "relevance values must be finite and non-negative; index {i} is {}",
                values[i]
            )));
        }
        Ok(RelevanceMap {
            values,
            shape,
            domain,
            class,
            n_masks,
            keep_probability,
            grid,
            seed,
            output_kind,
            window,
        })
    }

    /// Metadata-light constructor for maps that do not come from mask
    /// sampling (amplitude and random baselines).
    pub fn analytic(
        values: Vec<f64>,
        shape: Shape,
        domain: Domain,
        window: Option<WindowSpec>,
    ) -> Result<Self> {
        Self::from_parts(values, shape, domain, 0, 0, 0.0, None, 0, OutputKind::Probability, window)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn class(&self) -> usize {
        self.class
    }

    pub fn n_masks(&self) -> usize {
        self.n_masks
    }

    pub fn keep_probability(&self) -> f64 {
        self.keep_probability
    }

    pub fn grid(&self) -> Option<GridSpec> {
        self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn output_kind(&self) -> OutputKind {
        self.output_kind
    }

    pub fn window(&self) -> Option<&WindowSpec> {
        self.window.as_ref()
    }

    /// Same metadata, new values; used by postprocessing.
    fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::from_parts(
            values,
            self.shape,
            self.domain,
            self.class,
            self.n_masks,
            self.keep_probability,
            self.grid,
            self.seed,
            self.output_kind,
            self.window,
        )
    }
}

/// The input as seen by the masks: raw samples or a spectral view.
pub(crate) enum Representation {
    Time(Vec<f64>),
    Spectral(SpectralView),
}

impl Representation {
    pub(crate) fn build(x: &TimeSeries, domain: Domain, window: Option<&WindowSpec>) -> Result<Self> {
        Ok(match domain {
            Domain::Time => Representation::Time(x.samples().to_vec()),
            Domain::Frequency => Representation::Spectral(dft_onesided(x)?),
            Domain::TimeFrequency => {
                let w = window.ok_or_else(|| {
                    Error::InvalidWindow("time-frequency masking requires a window".into())
                })?;
                Representation::Spectral(stdft(x, w)?)
            }
        })
    }

    pub(crate) fn shape(&self) -> Shape {
        match self {
            Representation::Time(samples) => Shape::vector(samples.len()),
            Representation::Spectral(view) => view.shape(),
        }
    }

    /// Reconstructs the time signal under `mask` into `out`. `plan` is
    /// the caller's per-thread inversion scratch, created on first use.
    pub(crate) fn masked_signal_into(
        &self,
        plan: &mut Option<InversePlan>,
        mask: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        match self {
            Representation::Time(samples) => {
                for ((o, &s), &m) in out.iter_mut().zip(samples).zip(mask) {
                    *o = s * m;
                }
                Ok(())
            }
            Representation::Spectral(view) => {
                if plan.is_none() {
                    *plan = Some(InversePlan::new(view)?);
                }
                plan.as_mut().expect("just created").masked_inverse_into(view.coeffs(), mask, out)
            }
        }
    }
}

fn wrap_model_error(mask_index: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::ExplainFailed { mask_index, source: Box::new(e) }
}

/// Checks the model's declared input length against the signal.
fn check_model_compat(model: &dyn BlackBoxModel, x: &TimeSeries, class: usize) -> Result<()> {
    if let Some(expected) = model.input_len() {
        if expected != x.len() {
            return Err(Error::shape(format!(
                "model expects signals of length {expected}, input has {}",
                x.len()
            )));
        }
    }
    if let Some(classes) = model.num_classes() {
        if class >= classes {
            return Err(Error::param(format!(
                "class {class} out of range for {classes} classes"
            )));
        }
    }
    Ok(())
}

/// Estimates the relevance map of `x` for `class` by sampling
/// `cfg.n_masks` random masks over the chosen representation.
pub fn explain(
    model: &dyn BlackBoxModel,
    x: &TimeSeries,
    class: usize,
    cfg: &ExplainConfig,
) -> Result<RelevanceMap> {
    cfg.validate()?;
    check_model_compat(model, x, class)?;

    let repr = Representation::build(x, cfg.domain, cfg.window.as_ref())?;
    let shape = repr.shape();
    let d = shape.len();
    let t = x.len();
    let sampler =
        MaskSampler::new(shape, cfg.keep_probability, cfg.grid, false, cfg.seed)?;

    let mut weighted = vec![0.0f64; d];
    let mut mass = vec![0.0f64; d];
    let mut mask_buf = vec![0.0f64; cfg.batch_size * d];
    let mut sig_buf = vec![0.0f64; cfg.batch_size * t];

    let mut start = 0usize;
    while start < cfg.n_masks {
        let rows = cfg.batch_size.min(cfg.n_masks - start);
        let masks = &mut mask_buf[..rows * d];
        let signals = &mut sig_buf[..rows * t];

        // Mask generation and inversion are independent per row; scores
        // are folded sequentially below, so parallelism here cannot
        // change the result.
        masks
            .par_chunks_mut(d)
            .zip(signals.par_chunks_mut(t))
            .enumerate()
            .try_for_each_init(
                || None::<InversePlan>,
                |plan, (j, (mask_row, sig_row))| -> Result<()> {
                    sampler.mask_into((start + j) as u64, mask_row)?;
                    repr.masked_signal_into(plan, mask_row, sig_row)
                },
            )?;

        let view = ArrayView2::from_shape((rows, t), signals).expect("buffer sized rows*t");
        let outputs = model.predict_batch(view).map_err(wrap_model_error(start))?;
        if outputs.len() != rows {
            return Err(Error::ExplainFailed {
                mask_index: start,
                source: Box::new(Error::shape(format!(
                    "model returned {} outputs for {rows} signals",
                    outputs.len()
                ))),
            });
        }

        for (j, output) in outputs.iter().enumerate() {
            let score = output.score(class, cfg.output_kind)?;
            let mask_row = &masks[j * d..(j + 1) * d];
            for (lam, &m) in mask_row.iter().enumerate() {
                weighted[lam] += score * m;
                mass[lam] += m;
            }
        }
        start += rows;
    }

    let values: Vec<f64> = weighted
        .iter()
        .zip(&mass)
        .map(|(&w, &m)| (w / m.max(MASS_FLOOR)).max(0.0))
        .collect();
    RelevanceMap::from_parts(
        values,
        shape,
        cfg.domain,
        class,
        cfg.n_masks,
        cfg.keep_probability,
        cfg.grid,
        cfg.seed,
        cfg.output_kind,
        cfg.window,
    )
}

/// Computes the conditional-expectation relevance exactly by enumerating
/// every binary mask over the representation. `cfg.grid`, `cfg.n_masks`,
/// and `cfg.seed` are not used: enumeration is over independent
/// per-position masks and involves no randomness.
pub fn exact_relevance(
    model: &dyn BlackBoxModel,
    x: &TimeSeries,
    class: usize,
    cfg: &ExplainConfig,
) -> Result<RelevanceMap> {
    cfg.validate()?;
    if cfg.grid.is_some() {
        return Err(Error::param(
            "exact enumeration covers independent binary masks; grid masks have no tractable closed form",
        ));
    }
    check_model_compat(model, x, class)?;

    let repr = Representation::build(x, cfg.domain, cfg.window.as_ref())?;
    let shape = repr.shape();
    let d = shape.len();
    if d > MAX_EXACT_POSITIONS {
        return Err(Error::TooLargeToEnumerate { len: d, max: MAX_EXACT_POSITIONS });
    }
    let t = x.len();
    let p = cfg.keep_probability;
    let total = 1u64 << d;

    let mut conditional = vec![0.0f64; d];
    let mut plan: Option<InversePlan> = None;
    let mut mask_buf = vec![0.0f64; cfg.batch_size * d];
    let mut sig_buf = vec![0.0f64; cfg.batch_size * t];

    let mut m = 0u64;
    while m < total {
        let rows = (cfg.batch_size as u64).min(total - m) as usize;
        let masks = &mut mask_buf[..rows * d];
        let signals = &mut sig_buf[..rows * t];
        for j in 0..rows {
            let bits = m + j as u64;
            let row = &mut masks[j * d..(j + 1) * d];
            for (lam, slot) in row.iter_mut().enumerate() {
                *slot = (bits >> lam & 1) as f64;
            }
            repr.masked_signal_into(&mut plan, &masks[j * d..(j + 1) * d], &mut signals[j * t..(j + 1) * t])?;
        }
        let view = ArrayView2::from_shape((rows, t), signals).expect("buffer sized rows*t");
        let outputs = model.predict_batch(view).map_err(wrap_model_error(m as usize))?;
        if outputs.len() != rows {
            return Err(Error::shape(format!(
                "model returned {} outputs for {rows} signals",
                outputs.len()
            )));
        }
        for (j, output) in outputs.iter().enumerate() {
            let bits = m + j as u64;
            let score = output.score(class, cfg.output_kind)?;
            let ones = bits.count_ones() as i32;
            // P[M = this mask] under independent Bernoulli(p) positions.
            let prob = p.powi(ones) * (1.0 - p).powi(d as i32 - ones);
            let contribution = score * prob;
            for lam in 0..d {
                if bits >> lam & 1 == 1 {
                    conditional[lam] += contribution;
                }
            }
        }
        m += rows as u64;
    }

    // Conditioning on M(λ)=1 divides the joint mass by P[M(λ)=1] = p.
    let values: Vec<f64> = conditional.iter().map(|&v| (v / p).max(0.0)).collect();
    RelevanceMap::from_parts(
        values,
        shape,
        cfg.domain,
        class,
        total as usize,
        p,
        None,
        0,
        cfg.output_kind,
        cfg.window,
    )
}

/// Keeps only values at or above a quantile of the map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostprocessConfig {
    /// Fraction of positions to suppress, in `[0, 1)`. The threshold is
    /// the value at rank `⌊quantile · D⌋` of the ascending sort; values
    /// below it become zero, values at or above it are kept unchanged.
    pub quantile: f64,
}

impl PostprocessConfig {
    pub fn new(quantile: f64) -> Result<Self> {
        let cfg = PostprocessConfig { quantile };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.quantile >= 0.0 && self.quantile < 1.0) {
            return Err(Error::param(format!(
                "quantile must lie in [0, 1), got {}",
                self.quantile
            )));
        }
        Ok(())
    }
}

/// Suppresses the low end of a relevance map, concentrating it on the
/// top `1 − quantile` fraction of positions. Ranking is preserved: any
/// top-k set of the input stays a top-k set of the output for `k` up to
/// the retained count.
pub fn postprocess_quantile(map: &RelevanceMap, cfg: &PostprocessConfig) -> Result<RelevanceMap> {
    cfg.validate()?;
    let d = map.values().len();
    let mut sorted = map.values().to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let rank = ((cfg.quantile * d as f64).floor() as usize).min(d - 1);
    let threshold = sorted[rank];
    let values: Vec<f64> =
        map.values().iter().map(|&v| if v < threshold { 0.0 } else { v }).collect();
    map.with_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelOutput, OracleModel};
    use approx::assert_abs_diff_eq;

    /// Logit 0 is the first sample; a transparently analyzable "model".
    struct FirstSample;

    impl BlackBoxModel for FirstSample {
        fn input_len(&self) -> Option<usize> {
            None
        }

        fn num_classes(&self) -> Option<usize> {
            Some(1)
        }

        fn predict_batch(&self, batch: ArrayView2<'_, f64>) -> Result<Vec<ModelOutput>> {
            batch
                .rows()
                .into_iter()
                .map(|row| ModelOutput::new(vec![row[0]]))
                .collect()
        }
    }

    struct AlwaysFails;

    impl BlackBoxModel for AlwaysFails {
        fn input_len(&self) -> Option<usize> {
            None
        }

        fn num_classes(&self) -> Option<usize> {
            None
        }

        fn predict_batch(&self, _: ArrayView2<'_, f64>) -> Result<Vec<ModelOutput>> {
            Err(Error::EndpointError("down for maintenance".into()))
        }
    }

    fn time_cfg(n_masks: usize) -> ExplainConfig {
        ExplainConfig {
            domain: Domain::Time,
            n_masks,
            output_kind: OutputKind::Logit,
            ..Default::default()
        }
    }

    #[test]
    fn exact_relevance_matches_hand_derivation() {
        // Two positions, score = x[0] · M(0) with x[0] = 1. Conditioning
        // on each position kept gives R = [1, p].
        let x = TimeSeries::new(vec![1.0, 5.0], 2.0).unwrap();
        let exact = exact_relevance(&FirstSample, &x, 0, &time_cfg(1)).unwrap();
        assert_abs_diff_eq!(exact.values()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(exact.values()[1], 0.5, epsilon = 1e-12);
        assert_eq!(exact.n_masks(), 4);
    }

    #[test]
    fn estimator_converges_to_enumeration() {
        let x = TimeSeries::new(vec![1.0, 5.0], 2.0).unwrap();
        let cfg = time_cfg(20_000);
        let exact = exact_relevance(&FirstSample, &x, 0, &cfg).unwrap();
        let estimated = explain(&FirstSample, &x, 0, &cfg).unwrap();
        for (a, b) in estimated.values().iter().zip(exact.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 0.02);
        }
    }

    #[test]
    fn estimator_is_deterministic_and_seed_sensitive() {
        let x = TimeSeries::new(vec![0.3, -0.7, 1.2, 0.0, 2.0, -1.0, 0.4, 0.9], 8.0).unwrap();
        let cfg = time_cfg(200);
        let a = explain(&FirstSample, &x, 0, &cfg).unwrap();
        let b = explain(&FirstSample, &x, 0, &cfg).unwrap();
        assert_eq!(a.values(), b.values());
        let other = ExplainConfig { seed: 1, ..cfg };
        let c = explain(&FirstSample, &x, 0, &other).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn batch_size_does_not_change_the_estimate() {
        let x = TimeSeries::new(vec![0.3, -0.7, 1.2, 0.0, 2.0, -1.0, 0.4, 0.9], 8.0).unwrap();
        let small = ExplainConfig { batch_size: 3, ..time_cfg(100) };
        let large = ExplainConfig { batch_size: 64, ..time_cfg(100) };
        let a = explain(&FirstSample, &x, 0, &small).unwrap();
        let b = explain(&FirstSample, &x, 0, &large).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn frequency_domain_relevance_finds_the_detector_bin() {
        let t = 32;
        let model = OracleModel::new(vec![3], t).unwrap();
        let samples: Vec<f64> =
            (0..t).map(|n| (std::f64::consts::TAU * 3.0 * n as f64 / t as f64).sin()).collect();
        let x = TimeSeries::new(samples, t as f64).unwrap();
        let cfg = ExplainConfig { n_masks: 2000, ..Default::default() };
        let map = explain(&model, &x, 1, &cfg).unwrap();
        assert_eq!(map.shape(), Shape::vector(17));
        let best = map
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        assert_eq!(best, 3, "relevance map {:?}", map.values());
    }

    #[test]
    fn enumeration_agrees_with_estimator_through_a_transform() {
        // Frequency domain over a short signal: D = 9 positions, fully
        // enumerable, nontrivial reconstruction between mask and model.
        let t = 16;
        let model = OracleModel::new(vec![3], t).unwrap();
        let samples: Vec<f64> = (0..t)
            .map(|n| {
                let ph = std::f64::consts::TAU * n as f64 / t as f64;
                (ph * 3.0).sin() + 0.4 * (ph * 6.0).sin()
            })
            .collect();
        let x = TimeSeries::new(samples, t as f64).unwrap();
        let cfg = ExplainConfig { n_masks: 60_000, seed: 3, ..Default::default() };
        let exact = exact_relevance(&model, &x, 1, &cfg).unwrap();
        let estimated = explain(&model, &x, 1, &cfg).unwrap();
        for (a, b) in estimated.values().iter().zip(exact.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 0.015);
        }
    }

    #[test]
    fn enumeration_refuses_large_representations() {
        let x = TimeSeries::new(vec![0.0; 64], 64.0).unwrap();
        let err = exact_relevance(&FirstSample, &x, 0, &time_cfg(1)).unwrap_err();
        match err {
            Error::TooLargeToEnumerate { len, max } => {
                assert_eq!(len, 64);
                assert_eq!(max, MAX_EXACT_POSITIONS);
            }
            other => panic!("expected TooLargeToEnumerate, got {other:?}"),
        }
    }

    #[test]
    fn model_failures_carry_the_mask_index() {
        let x = TimeSeries::new(vec![1.0, 2.0, 3.0], 3.0).unwrap();
        let cfg = ExplainConfig { batch_size: 2, ..time_cfg(10) };
        match explain(&AlwaysFails, &x, 0, &cfg) {
            Err(Error::ExplainFailed { mask_index, source }) => {
                assert_eq!(mask_index, 0);
                assert!(matches!(*source, Error::EndpointError(_)));
            }
            other => panic!("expected ExplainFailed, got {other:?}"),
        }
    }

    #[test]
    fn config_and_compat_errors_are_reported() {
        let x = TimeSeries::new(vec![1.0, 2.0, 3.0, 4.0], 4.0).unwrap();
        // Class out of range.
        assert!(matches!(
            explain(&FirstSample, &x, 3, &time_cfg(10)),
            Err(Error::InvalidParameter(_))
        ));
        // Model with a fixed input length sees the mismatch up front.
        let model = OracleModel::new(vec![2], 8).unwrap();
        assert!(matches!(
            explain(&model, &x, 0, &ExplainConfig::default()),
            Err(Error::ShapeError(_))
        ));
        // Time-frequency without a window.
        let cfg = ExplainConfig { domain: Domain::TimeFrequency, ..Default::default() };
        assert!(matches!(explain(&FirstSample, &x, 0, &cfg), Err(Error::InvalidWindow(_))));
        // Grid masks cannot be enumerated exactly.
        let cfg = ExplainConfig { grid: Some(GridSpec::OneD(2)), ..time_cfg(4) };
        assert!(matches!(
            exact_relevance(&FirstSample, &x, 0, &cfg),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn quantile_suppression_matches_hand_computed_example() {
        let map = RelevanceMap::analytic(
            vec![1.0, 2.0, 3.0, 4.0],
            Shape::vector(4),
            Domain::Frequency,
            None,
        )
        .unwrap();
        let out = postprocess_quantile(&map, &PostprocessConfig::new(0.5).unwrap()).unwrap();
        assert_eq!(out.values(), &[0.0, 0.0, 3.0, 4.0]);

        // Quantile zero keeps everything.
        let out = postprocess_quantile(&map, &PostprocessConfig::new(0.0).unwrap()).unwrap();
        assert_eq!(out.values(), map.values());
    }

    #[test]
    fn quantile_suppression_is_idempotent() {
        let map = RelevanceMap::analytic(
            vec![0.1, 0.9, 0.0, 0.5, 0.7, 0.2, 0.4, 0.3],
            Shape::vector(8),
            Domain::Time,
            None,
        )
        .unwrap();
        let cfg = PostprocessConfig::new(0.75).unwrap();
        let once = postprocess_quantile(&map, &cfg).unwrap();
        let twice = postprocess_quantile(&once, &cfg).unwrap();
        assert_eq!(once.values(), twice.values());
        // 8 positions, quantile 0.75: rank 6 of the ascending sort is the
        // threshold, so exactly two survive.
        assert_eq!(once.values().iter().filter(|&&v| v > 0.0).count(), 2);
    }

    #[test]
    fn postprocess_rejects_bad_quantiles() {
        assert!(PostprocessConfig::new(1.0).is_err());
        assert!(PostprocessConfig::new(-0.1).is_err());
        assert!(PostprocessConfig::new(0.0).is_ok());
    }
}
