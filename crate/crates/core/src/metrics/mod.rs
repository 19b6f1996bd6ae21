//! Quality measures for relevance maps.
//!
//! Three complementary views: *localization* (does the map rank the
//! truly informative positions first), *faithfulness* (does deleting
//! what the map considers relevant actually hurt the model), and
//! *complexity* (is the map concentrated or smeared out). Baseline maps
//! give the numbers something to beat.

mod report;
mod svg;

pub use report::{
    write_curve_csv, write_report_csv, write_report_json, EvalReport, MethodSummary,
};
pub use svg::write_deletion_svg;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{BlackBoxModel, OutputKind};
use crate::relevance::{Representation, RelevanceMap};
use crate::rng::{substream, StreamKind};
use crate::transforms::{Domain, InversePlan, TimeSeries, WindowSpec};

use rand::Rng;

/// Indices of the `k` largest values, largest first. Ties resolve to the
/// lower index so rankings are total and reproducible.
pub fn top_k_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(k.min(values.len()));
    order
}

/// Fraction of the ground-truth positions recovered in the map's top-K,
/// with K equal to the ground-truth size.
pub fn relevance_rank_accuracy(map: &RelevanceMap, ground_truth: &[usize]) -> Result<f64> {
    if ground_truth.is_empty() {
        return Err(Error::UndefinedMetric(
            "rank accuracy needs a non-empty ground-truth set".into(),
        ));
    }
    let d = map.values().len();
    let mut seen = vec![false; d];
    for &g in ground_truth {
        if g >= d {
            return Err(Error::param(format!(
                "ground-truth index {g} out of range for {d} positions"
            )));
        }
        if seen[g] {
            return Err(Error::param(format!("ground-truth index {g} listed twice")));
        }
        seen[g] = true;
    }
    let top = top_k_indices(map.values(), ground_truth.len());
    let hits = top.iter().filter(|&&i| seen[i]).count();
    Ok(hits as f64 / ground_truth.len() as f64)
}

/// Model score as a function of the fraction of top-relevance positions
/// removed. `fractions` and `scores` are the evaluated schedule;
/// `baseline_score` is the score with nothing removed (fraction 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeletionCurve {
    pub fractions: Vec<f64>,
    pub scores: Vec<f64>,
    pub baseline_score: f64,
    /// Mean score over the evaluated span; see [`faithfulness_auc`].
    pub auc: f64,
}

fn validate_schedule(fractions: &[f64]) -> Result<()> {
    let mut prev = 0.0;
    for &f in fractions {
        if !(f > prev && f <= 1.0) {
            return Err(Error::param(format!(
                "deletion schedule must be strictly increasing within (0, 1], got {fractions:?}"
            )));
        }
        prev = f;
    }
    Ok(())
}

/// Area under the deletion curve, normalized by the evaluated span so
/// the result is a mean score. Lower means the deletions hurt more, so
/// for a faithful explanation lower is better. The curve is anchored at
/// `(0, baseline_score)`; an empty schedule degenerates to the baseline.
pub fn faithfulness_auc(baseline_score: f64, fractions: &[f64], scores: &[f64]) -> Result<f64> {
    if fractions.len() != scores.len() {
        return Err(Error::shape(format!(
            "{} fractions but {} scores",
            fractions.len(),
            scores.len()
        )));
    }
    validate_schedule(fractions)?;
    let Some(&span) = fractions.last() else {
        return Ok(baseline_score);
    };
    let mut area = 0.0;
    let mut prev = (0.0, baseline_score);
    for (&f, &s) in fractions.iter().zip(scores) {
        area += (f - prev.0) * (s + prev.1) / 2.0;
        prev = (f, s);
    }
    Ok(area / span)
}

/// Evaluates `model` on `x` with the top `⌈φ·D⌉` positions of `map`
/// zeroed in the map's own domain, for each `φ` in `schedule`. Scores
/// are probabilities of `class`, so curves from different maps and
/// models are on a common scale.
pub fn deletion_curve(
    model: &dyn BlackBoxModel,
    x: &TimeSeries,
    map: &RelevanceMap,
    class: usize,
    schedule: &[f64],
) -> Result<DeletionCurve> {
    validate_schedule(schedule)?;
    let repr = Representation::build(x, map.domain(), map.window())?;
    if repr.shape() != map.shape() {
        return Err(Error::shape(format!(
            "map shape {} does not match the {} representation {} of the input",
            map.shape(),
            map.domain(),
            repr.shape()
        )));
    }
    let d = map.shape().len();
    let t = x.len();
    let rows = schedule.len() + 1;

    let mut signals = vec![0.0f64; rows * t];
    signals[..t].copy_from_slice(x.samples());
    let mut plan: Option<InversePlan> = None;
    let mut mask = vec![1.0f64; d];
    for (i, &fraction) in schedule.iter().enumerate() {
        let k = ((fraction * d as f64).ceil() as usize).min(d);
        mask.fill(1.0);
        for &idx in &top_k_indices(map.values(), k) {
            mask[idx] = 0.0;
        }
        let row = &mut signals[(i + 1) * t..(i + 2) * t];
        repr.masked_signal_into(&mut plan, &mask, row)?;
    }

    let view = ArrayView2::from_shape((rows, t), &signals).expect("buffer sized rows*t");
    let outputs = model.predict_batch(view)?;
    if outputs.len() != rows {
        return Err(Error::shape(format!(
            "model returned {} outputs for {rows} signals",
            outputs.len()
        )));
    }
    let baseline_score = outputs[0].score(class, OutputKind::Probability)?;
    let scores = outputs[1..]
        .iter()
        .map(|o| o.score(class, OutputKind::Probability))
        .collect::<Result<Vec<f64>>>()?;
    let auc = faithfulness_auc(baseline_score, schedule, &scores)?;
    Ok(DeletionCurve { fractions: schedule.to_vec(), scores, baseline_score, auc })
}

/// Pointwise average of curves over a shared schedule. Trapezoid areas
/// are linear in the scores, so the averaged curve's AUC equals the mean
/// of the individual AUCs.
pub fn mean_deletion_curve(curves: &[DeletionCurve]) -> Result<DeletionCurve> {
    let Some(first) = curves.first() else {
        return Err(Error::UndefinedMetric("no deletion curves to average".into()));
    };
    for c in &curves[1..] {
        if c.fractions != first.fractions {
            return Err(Error::param(
                "deletion curves with different schedules cannot be averaged",
            ));
        }
    }
    let n = curves.len() as f64;
    let mut scores = vec![0.0f64; first.scores.len()];
    let mut baseline_score = 0.0f64;
    for c in curves {
        baseline_score += c.baseline_score / n;
        for (acc, &s) in scores.iter_mut().zip(&c.scores) {
            *acc += s / n;
        }
    }
    let auc = faithfulness_auc(baseline_score, &first.fractions, &scores)?;
    Ok(DeletionCurve { fractions: first.fractions.clone(), scores, baseline_score, auc })
}

/// Shannon entropy (nats) of the map normalized to a distribution. Low
/// entropy means the relevance is concentrated on few positions; the
/// maximum is `ln D` for a uniform map. Scale-invariant. An all-zero map
/// carries no distribution and is rejected.
pub fn complexity_entropy(map: &RelevanceMap) -> Result<f64> {
    let total: f64 = map.values().iter().sum();
    if total <= 0.0 {
        return Err(Error::UndefinedMetric(
            "entropy of an all-zero relevance map is undefined".into(),
        ));
    }
    let mut h = 0.0;
    for &v in map.values() {
        if v > 0.0 {
            let q = v / total;
            h -= q * q.ln();
        }
    }
    Ok(h)
}

/// Magnitude of the input's representation, as a relevance map. The
/// obvious non-learned competitor: loud positions are called relevant.
pub fn baseline_amplitude_map(
    x: &TimeSeries,
    domain: Domain,
    window: Option<&WindowSpec>,
) -> Result<RelevanceMap> {
    let repr = Representation::build(x, domain, window)?;
    let shape = repr.shape();
    let values = match &repr {
        Representation::Time(samples) => samples.iter().map(|s| s.abs()).collect(),
        Representation::Spectral(view) => view.magnitudes(),
    };
    RelevanceMap::analytic(values, shape, domain, window.copied())
}

/// Uniform random relevance, the floor any method must clear. `index`
/// selects an independent stream per sample under a shared `seed`.
pub fn baseline_random_map(
    x: &TimeSeries,
    domain: Domain,
    window: Option<&WindowSpec>,
    seed: u64,
    index: u64,
) -> Result<RelevanceMap> {
    let repr = Representation::build(x, domain, window)?;
    let shape = repr.shape();
    let mut rng = substream(seed, StreamKind::RandomBaseline, index);
    let values = (0..shape.len()).map(|_| rng.random::<f64>()).collect();
    RelevanceMap::analytic(values, shape, domain, window.copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::OracleModel;
    use crate::transforms::Shape;
    use approx::assert_abs_diff_eq;

    fn map_of(values: Vec<f64>) -> RelevanceMap {
        let shape = Shape::vector(values.len());
        RelevanceMap::analytic(values, shape, Domain::Frequency, None).unwrap()
    }

    fn sinusoid(t: usize, cycles: f64) -> TimeSeries {
        let samples =
            (0..t).map(|n| (std::f64::consts::TAU * cycles * n as f64 / t as f64).sin()).collect();
        TimeSeries::new(samples, t as f64).unwrap()
    }

    #[test]
    fn top_k_orders_by_value_then_index() {
        let values = [0.5, 0.9, 0.5, 0.1];
        assert_eq!(top_k_indices(&values, 3), vec![1, 0, 2]);
        // Oversized k clamps to the full ordering.
        assert_eq!(top_k_indices(&values, 10), vec![1, 0, 2, 3]);
        assert_eq!(top_k_indices(&values, 0), Vec::<usize>::new());
    }

    #[test]
    fn rank_accuracy_counts_recovered_positions() {
        let map = map_of(vec![0.1, 0.9, 0.3, 0.5]);
        assert_abs_diff_eq!(relevance_rank_accuracy(&map, &[1, 3]).unwrap(), 1.0);
        assert_abs_diff_eq!(relevance_rank_accuracy(&map, &[0, 1]).unwrap(), 0.5);
        assert_abs_diff_eq!(relevance_rank_accuracy(&map, &[0]).unwrap(), 0.0);

        assert!(matches!(
            relevance_rank_accuracy(&map, &[]),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(matches!(
            relevance_rank_accuracy(&map, &[9]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            relevance_rank_accuracy(&map, &[1, 1]),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn auc_matches_hand_computed_trapezoids() {
        // (0, 1) → (0.5, 0.5) → (1, 0): area 0.5 over span 1.
        let auc = faithfulness_auc(1.0, &[0.5, 1.0], &[0.5, 0.0]).unwrap();
        assert_abs_diff_eq!(auc, 0.5, epsilon = 1e-12);
        // Empty schedule degenerates to the baseline.
        assert_abs_diff_eq!(faithfulness_auc(0.7, &[], &[]).unwrap(), 0.7);
        // Non-increasing schedules are rejected.
        assert!(faithfulness_auc(1.0, &[0.5, 0.5], &[0.1, 0.1]).is_err());
        assert!(faithfulness_auc(1.0, &[0.0], &[0.1]).is_err());
        assert!(faithfulness_auc(1.0, &[1.5], &[0.1]).is_err());
    }

    #[test]
    fn deleting_the_detector_bin_collapses_the_oracle_score() {
        let t = 64;
        let model = OracleModel::new(vec![3], t).unwrap();
        let x = sinusoid(t, 3.0);
        let map = baseline_amplitude_map(&x, Domain::Frequency, None).unwrap();
        let curve = deletion_curve(&model, &x, &map, 1, &[0.1, 1.0]).unwrap();
        // Clean signal: the detector sees the tone.
        assert!(curve.baseline_score > 0.9, "baseline {}", curve.baseline_score);
        // The amplitude map's top bins include bin 3; removing them
        // starves the detector.
        assert!(curve.scores[0] < 0.1, "after deletion {}", curve.scores[0]);
        assert!(curve.auc < curve.baseline_score);
    }

    #[test]
    fn empty_schedule_curve_is_the_baseline() {
        let t = 64;
        let model = OracleModel::new(vec![3], t).unwrap();
        let x = sinusoid(t, 3.0);
        let map = baseline_amplitude_map(&x, Domain::Frequency, None).unwrap();
        let curve = deletion_curve(&model, &x, &map, 1, &[]).unwrap();
        assert!(curve.fractions.is_empty());
        assert_abs_diff_eq!(curve.auc, curve.baseline_score);
    }

    #[test]
    fn time_frequency_deletion_exercises_the_window_path() {
        let t = 64;
        let model = OracleModel::new(vec![3], t).unwrap();
        let x = sinusoid(t, 3.0);
        let w = WindowSpec::hann(16, 8);
        let map = baseline_amplitude_map(&x, Domain::TimeFrequency, Some(&w)).unwrap();
        assert!(!map.shape().is_vector());
        let curve = deletion_curve(&model, &x, &map, 1, &[0.25, 0.5, 1.0]).unwrap();
        assert!(curve.scores.iter().all(|s| s.is_finite()));
        // Full deletion silences the signal entirely.
        assert!(curve.scores[2] < 0.2, "after full deletion {}", curve.scores[2]);
    }

    #[test]
    fn curve_averaging_requires_matching_schedules() {
        let a = DeletionCurve {
            fractions: vec![0.5, 1.0],
            scores: vec![0.8, 0.2],
            baseline_score: 1.0,
            auc: faithfulness_auc(1.0, &[0.5, 1.0], &[0.8, 0.2]).unwrap(),
        };
        let b = DeletionCurve {
            fractions: vec![0.5, 1.0],
            scores: vec![0.4, 0.0],
            baseline_score: 0.8,
            auc: faithfulness_auc(0.8, &[0.5, 1.0], &[0.4, 0.0]).unwrap(),
        };
        let mean = mean_deletion_curve(&[a.clone(), b.clone()]).unwrap();
        assert_abs_diff_eq!(mean.baseline_score, 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(mean.scores[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(mean.auc, (a.auc + b.auc) / 2.0, epsilon = 1e-12);

        let c = DeletionCurve {
            fractions: vec![0.25],
            scores: vec![0.5],
            baseline_score: 1.0,
            auc: 0.75,
        };
        assert!(mean_deletion_curve(&[a, c]).is_err());
        assert!(matches!(mean_deletion_curve(&[]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn entropy_spans_delta_to_uniform() {
        let uniform = map_of(vec![0.25; 4]);
        assert_abs_diff_eq!(complexity_entropy(&uniform).unwrap(), (4.0f64).ln(), epsilon = 1e-12);

        let delta = map_of(vec![0.0, 7.0, 0.0, 0.0]);
        assert_abs_diff_eq!(complexity_entropy(&delta).unwrap(), 0.0);

        // Scale invariance: the normalization removes the overall level.
        let a = map_of(vec![0.1, 0.4, 0.2, 0.3]);
        let b = map_of(vec![1.0, 4.0, 2.0, 3.0]);
        assert_abs_diff_eq!(
            complexity_entropy(&a).unwrap(),
            complexity_entropy(&b).unwrap(),
            epsilon = 1e-12
        );

        let zero = map_of(vec![0.0; 4]);
        assert!(matches!(complexity_entropy(&zero), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn baseline_maps_are_deterministic_and_well_formed() {
        let x = sinusoid(64, 5.0);
        let amp = baseline_amplitude_map(&x, Domain::Frequency, None).unwrap();
        assert_eq!(amp.shape(), Shape::vector(33));
        let best = top_k_indices(amp.values(), 1)[0];
        assert_eq!(best, 5);

        let r1 = baseline_random_map(&x, Domain::Frequency, None, 9, 0).unwrap();
        let r2 = baseline_random_map(&x, Domain::Frequency, None, 9, 0).unwrap();
        let r3 = baseline_random_map(&x, Domain::Frequency, None, 9, 1).unwrap();
        assert_eq!(r1.values(), r2.values());
        assert_ne!(r1.values(), r3.values());
        assert!(r1.values().iter().all(|&v| (0.0..1.0).contains(&v)));
    }
}
