//! Masking-based relevance maps for time-series classifiers.
//!
//! The pipeline: transform a signal into the domain under study
//! ([`transforms`]), occlude random parts of it ([`masks`]), watch how a
//! classifier's score moves ([`models`]), and aggregate the scores into a
//! per-position relevance map ([`relevance`]). Synthetic benchmarks with
//! known ground truth ([`data`]) make the maps checkable.

pub use ndarray;

pub mod data;
pub mod error;
pub mod masks;
pub mod metrics;
pub mod models;
pub mod relevance;
pub mod rng;
pub mod transforms;

pub use data::{
    gen_synthetic, label_of, load_wav, preprocess_audio, read_dataset, resample, subset_of,
    write_dataset, write_wav, LabeledSample, PreprocessConfig, StoredDataset, SyntheticConfig,
};
pub use error::{Error, Result};
pub use masks::{
    expected_mask, sample_binary_masks, sample_grid_masks, GridSpec, MaskBatch, MaskSampler,
};
pub use metrics::{
    baseline_amplitude_map, baseline_random_map, complexity_entropy, deletion_curve,
    faithfulness_auc, mean_deletion_curve, relevance_rank_accuracy, top_k_indices,
    write_curve_csv, write_deletion_svg, write_report_csv, write_report_json, DeletionCurve,
    EvalReport, MethodSummary,
};
pub use models::{
    gradient_check_max_rel_error, mlp_train, serve_echo, softmax, BlackBoxModel, EchoMode,
    ExternalModel, MlpModel, ModelOutput, OracleModel, OutputKind, TrainConfig, TrainReport,
    Trained, WireRequest, WireResponse,
};
pub use relevance::{
    exact_relevance, explain, postprocess_quantile, read_relevance_map, write_relevance_map,
    ExplainConfig, PostprocessConfig, RelevanceMap, MAX_EXACT_POSITIONS,
};
pub use transforms::{
    dft_onesided, idft_onesided, istdft, stdft, Domain, Shape, SpectralView, TimeSeries,
    WindowKind, WindowSpec,
};
