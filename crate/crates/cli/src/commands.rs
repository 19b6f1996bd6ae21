//! One function per subcommand. Each assembles its effective
//! configuration (file defaults, then flag overrides), validates it
//! before touching the filesystem, and stamps outputs with the
//! configuration digest.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Args;
use freqrise_core::ndarray::ArrayView2;
use serde::Serialize;

use freqrise_core::masks::GridSpec;
use freqrise_core::metrics::{
    baseline_amplitude_map, baseline_random_map, complexity_entropy, deletion_curve,
    mean_deletion_curve, relevance_rank_accuracy, write_curve_csv, write_deletion_svg,
    write_report_csv, write_report_json, DeletionCurve, EvalReport, MethodSummary,
};
use freqrise_core::models::{EchoMode, OutputKind};
use freqrise_core::relevance::{
    explain, postprocess_quantile, read_relevance_map, write_relevance_map, PostprocessConfig,
    RelevanceMap,
};
use freqrise_core::rng::{derive_seed, StreamKind};
use freqrise_core::transforms::{Domain, TimeSeries, WindowSpec};
use freqrise_core::{
    gen_synthetic, mlp_train, read_dataset, serve_echo, write_dataset, Error as CoreError,
    LabeledSample, StoredDataset, SyntheticConfig, TrainConfig,
};

use crate::config::{config_digest, default_schedule, usage, ModelSpec, RunConfig};

fn refuse_overwrite(path: &Path, force: bool) -> Result<()> {
    if !force && path.exists() {
        bail!("{} exists; pass --force to overwrite", path.display());
    }
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    Ok(())
}

fn load_data(path: &Path) -> Result<StoredDataset> {
    read_dataset(path).with_context(|| format!("reading dataset {}", path.display()))
}

/// Synthetic signals span one analysis window, so bin `k` of the
/// spectrum is the component with `k` cycles; a sample rate equal to the
/// length keeps that correspondence when a rate is required.
fn to_series(sample: &LabeledSample, length: usize) -> Result<TimeSeries> {
    Ok(TimeSeries::new(sample.signal.clone(), length as f64)?)
}

fn map_stem(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("sample_{index:05}"))
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    let mut prev = 0.0;
    for &f in schedule {
        if !(f > prev && f <= 1.0) {
            return Err(usage(format!(
                "schedule must be strictly increasing within (0, 1], got {schedule:?}"
            )));
        }
        prev = f;
    }
    Ok(())
}

/// Loads the contiguous run of `sample_#####` maps present in `dir`.
fn load_maps(dir: &Path, limit: usize) -> Result<Vec<(usize, RelevanceMap)>> {
    let mut maps = Vec::new();
    for i in 0..limit {
        let stem = map_stem(dir, i);
        let mut csv = stem.clone().into_os_string();
        csv.push(".csv");
        if !Path::new(&csv).exists() {
            break;
        }
        let (map, _tag) = read_relevance_map(&stem)
            .with_context(|| format!("reading map {}", stem.display()))?;
        maps.push((i, map));
    }
    if maps.is_empty() {
        bail!("no relevance maps named sample_00000.csv… found in {}", dir.display());
    }
    Ok(maps)
}

// ---------------------------------------------------------------------------
// gen-data

#[derive(Args, Debug)]
pub struct GenDataArgs {
    /// Output dataset file; a JSON sidecar is written next to it
    #[arg(long)]
    output: PathBuf,
    /// JSON file with default settings for this run
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of samples to generate
    #[arg(long)]
    count: Option<usize>,
    /// Signal length in samples
    #[arg(long)]
    length: Option<usize>,
    /// Noise standard deviation
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// Seed; every sample draws from its own stream under it
    #[arg(long)]
    seed: Option<u64>,
    /// Overwrite existing output files
    #[arg(long)]
    force: bool,
}

pub fn gen_data(args: GenDataArgs) -> Result<()> {
    let file_cfg = RunConfig::load_opt(args.config.as_ref())?;
    let mut syn = file_cfg.synthetic.clone().unwrap_or_default();
    if let Some(v) = args.length {
        syn.length = v;
    }
    if let Some(v) = args.sigma {
        syn.sigma = v;
    }
    syn.validate().map_err(|e| usage(e.to_string()))?;
    let count = args.count.or(file_cfg.count).unwrap_or(1000);
    if count == 0 {
        return Err(usage("count must be positive"));
    }
    let seed = args.seed.or(file_cfg.seed).unwrap_or(0);

    #[derive(Serialize)]
    struct Manifest<'a> {
        synthetic: &'a SyntheticConfig,
        count: usize,
        seed: u64,
    }
    let digest = config_digest(&Manifest { synthetic: &syn, count, seed });

    refuse_overwrite(&args.output, args.force)?;
    ensure_parent(&args.output)?;
    let samples = gen_synthetic(&syn, count, seed)?;
    write_dataset(&args.output, &samples, &syn, seed, Some(&digest))?;
    println!(
        "wrote {count} samples of length {} ({} classes) to {} [{}]",
        syn.length,
        syn.num_classes(),
        args.output.display(),
        &digest[..12]
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// train

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Training dataset
    #[arg(long)]
    data: PathBuf,
    /// Held-out dataset for test accuracy
    #[arg(long)]
    test_data: Option<PathBuf>,
    /// Output model file
    #[arg(long)]
    output: PathBuf,
    /// JSON file with default settings for this run
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training epochs; 0 saves the untrained initialization
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    learning_rate: Option<f64>,
    /// Seed for weight initialization and shuffling
    #[arg(long)]
    seed: Option<u64>,
    /// Overwrite an existing model file
    #[arg(long)]
    force: bool,
}

pub fn train(args: TrainArgs) -> Result<()> {
    let file_cfg = RunConfig::load_opt(args.config.as_ref())?;
    let mut tcfg = file_cfg.train.unwrap_or_default();
    if let Some(v) = args.epochs {
        tcfg.epochs = v;
    }
    if let Some(v) = args.batch_size {
        tcfg.batch_size = v;
    }
    if let Some(v) = args.learning_rate {
        tcfg.learning_rate = v;
    }
    if let Some(v) = args.seed.or(file_cfg.seed) {
        tcfg.seed = v;
    }
    tcfg.validate().map_err(|e| usage(e.to_string()))?;

    let dataset = load_data(&args.data)?;
    let test = args.test_data.as_ref().map(|p| load_data(p)).transpose()?;
    if let Some(t) = &test {
        if t.config.length != dataset.config.length
            || t.config.num_classes() != dataset.config.num_classes()
        {
            return Err(usage("test dataset is not compatible with the training dataset"));
        }
    }
    refuse_overwrite(&args.output, args.force)?;

    #[derive(Serialize)]
    struct Manifest<'a> {
        train: &'a TrainConfig,
        dataset: &'a SyntheticConfig,
        dataset_seed: u64,
    }
    let digest = config_digest(&Manifest {
        train: &tcfg,
        dataset: &dataset.config,
        dataset_seed: dataset.seed,
    });

    let trained = mlp_train(
        &dataset.samples,
        test.as_ref().map(|t| t.samples.as_slice()),
        dataset.config.num_classes(),
        &tcfg,
    )?;
    for (epoch, loss) in trained.report.epoch_losses.iter().enumerate() {
        println!("epoch {}/{}: loss {loss:.6}", epoch + 1, tcfg.epochs);
    }
    ensure_parent(&args.output)?;
    trained.model.save(&args.output, Some(&digest))?;
    match trained.report.test_accuracy {
        Some(acc) => println!(
            "train accuracy {:.4}, test accuracy {acc:.4}",
            trained.report.train_accuracy
        ),
        None => println!("train accuracy {:.4}", trained.report.train_accuracy),
    }
    println!("saved model to {} [{}]", args.output.display(), &digest[..12]);
    Ok(())
}

// ---------------------------------------------------------------------------
// explain

/// Which class a relevance map attributes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// The sample's stored label.
    Label,
    /// The model's prediction on the unmasked signal.
    Predicted,
    /// A fixed class index.
    Class(usize),
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "label" => Ok(Target::Label),
            "predicted" => Ok(Target::Predicted),
            other => other
                .parse::<usize>()
                .map(Target::Class)
                .map_err(|_| format!("target must be label, predicted, or a class index, got {other:?}")),
        }
    }
}

#[derive(Args, Debug)]
pub struct ExplainArgs {
    /// Dataset whose samples get explained
    #[arg(long)]
    data: PathBuf,
    /// Classifier: oracle, mlp:PATH, or external:COMMAND
    #[arg(long)]
    model: ModelSpec,
    /// Directory for sample_#####.csv maps and their sidecars
    #[arg(long)]
    output_dir: PathBuf,
    /// JSON file with default settings for this run
    #[arg(long)]
    config: Option<PathBuf>,
    /// Explain only the first N samples
    #[arg(long)]
    limit: Option<usize>,
    /// Masked representation: time, frequency, or time-frequency
    #[arg(long)]
    domain: Option<Domain>,
    #[arg(long)]
    n_masks: Option<usize>,
    /// Bernoulli keep probability per mask position
    #[arg(long, allow_negative_numbers = true)]
    keep_probability: Option<f64>,
    /// Coarse mask grid, e.g. 200 or 24x32
    #[arg(long)]
    grid: Option<GridSpec>,
    /// Score to attribute: probability or logit
    #[arg(long)]
    output_kind: Option<OutputKind>,
    /// Analysis window length for the time-frequency domain
    #[arg(long)]
    window_length: Option<usize>,
    /// Analysis hop for the time-frequency domain
    #[arg(long)]
    window_hop: Option<usize>,
    /// Masks per model query
    #[arg(long)]
    batch_size: Option<usize>,
    /// Base seed; sample i masks with a stream derived from (seed, i)
    #[arg(long)]
    seed: Option<u64>,
    /// Class to attribute: label, predicted, or a class index
    #[arg(long, default_value = "label")]
    target: Target,
    /// Overwrite existing map files
    #[arg(long)]
    force: bool,
}

pub fn explain_cmd(args: ExplainArgs) -> Result<()> {
    let file_cfg = RunConfig::load_opt(args.config.as_ref())?;
    let mut ecfg = file_cfg.explain.clone().unwrap_or_default();
    if let Some(v) = args.domain {
        ecfg.domain = v;
    }
    if let Some(v) = args.n_masks {
        ecfg.n_masks = v;
    }
    if let Some(v) = args.keep_probability {
        ecfg.keep_probability = v;
    }
    if let Some(v) = args.grid {
        ecfg.grid = Some(v);
    }
    if let Some(v) = args.output_kind {
        ecfg.output_kind = v;
    }
    if let Some(v) = args.batch_size {
        ecfg.batch_size = v;
    }
    if let Some(v) = args.seed.or(file_cfg.seed) {
        ecfg.seed = v;
    }
    match (args.window_length, args.window_hop) {
        (Some(length), Some(hop)) => ecfg.window = Some(WindowSpec::hann(length, hop)),
        (None, None) => {}
        _ => return Err(usage("--window-length and --window-hop go together")),
    }
    if let Some(w) = &ecfg.window {
        w.validate().map_err(|e| usage(e.to_string()))?;
    }
    ecfg.validate().map_err(|e| usage(e.to_string()))?;

    let dataset = load_data(&args.data)?;
    let model = args.model.build(&dataset.config)?;
    let limit = args.limit.unwrap_or(usize::MAX).min(dataset.samples.len());

    #[derive(Serialize)]
    struct Manifest<'a> {
        explain: &'a freqrise_core::relevance::ExplainConfig,
        model: String,
        dataset_seed: u64,
    }
    let digest = config_digest(&Manifest {
        explain: &ecfg,
        model: args.model.to_string(),
        dataset_seed: dataset.seed,
    });

    fs::create_dir_all(&args.output_dir)
        .with_context(|| format!("creating {}", args.output_dir.display()))?;
    for i in 0..limit {
        let stem = map_stem(&args.output_dir, i);
        let mut csv = stem.clone().into_os_string();
        csv.push(".csv");
        refuse_overwrite(Path::new(&csv), args.force)?;

        let sample = &dataset.samples[i];
        let x = to_series(sample, dataset.config.length)?;
        let class = match args.target {
            Target::Label => usize::from(sample.label),
            Target::Class(c) => c,
            Target::Predicted => {
                let row = ArrayView2::from_shape((1, x.len()), sample.signal.as_slice())
                    .expect("signal length matches");
                model.predict_batch(row)?[0].argmax()
            }
        };
        let mut per_sample = ecfg.clone();
        per_sample.seed = derive_seed(ecfg.seed, StreamKind::Derive, i as u64);
        let map = explain(model.as_ref(), &x, class, &per_sample)?;
        write_relevance_map(&stem, &map, Some(&digest))?;
    }
    println!(
        "wrote {limit} relevance maps ({} domain) to {} [{}]",
        ecfg.domain,
        args.output_dir.display(),
        &digest[..12]
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Dataset the maps were computed on
    #[arg(long)]
    data: PathBuf,
    /// Classifier: oracle, mlp:PATH, or external:COMMAND
    #[arg(long)]
    model: ModelSpec,
    /// Directory holding sample_#####.csv maps
    #[arg(long)]
    maps: PathBuf,
    /// Directory for report.json, report.csv, curves, and the plot
    #[arg(long)]
    output_dir: PathBuf,
    /// JSON file with default settings for this run
    #[arg(long)]
    config: Option<PathBuf>,
    /// Deletion fractions, e.g. 0.05,0.1,0.2
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<f64>>,
    /// Also evaluate the maps after quantile suppression at this level
    #[arg(long, allow_negative_numbers = true)]
    postprocess: Option<f64>,
    /// Also evaluate amplitude and random baseline maps
    #[arg(long)]
    with_baselines: bool,
    /// Evaluate at most N maps
    #[arg(long)]
    limit: Option<usize>,
    /// Seed for the random baseline
    #[arg(long)]
    seed: Option<u64>,
    /// Overwrite existing report files
    #[arg(long)]
    force: bool,
}

#[derive(Default)]
struct Accum {
    ranks: Vec<f64>,
    curves: Vec<DeletionCurve>,
    entropies: Vec<f64>,
}

impl Accum {
    fn push_entropy(&mut self, map: &RelevanceMap) -> Result<()> {
        match complexity_entropy(map) {
            Ok(h) => self.entropies.push(h),
            // An all-zero map has no distribution; it simply does not
            // contribute to the mean.
            Err(CoreError::UndefinedMetric(_)) => {}
            Err(e) => return Err(e.into()),
        }
        Ok(())
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let file_cfg = RunConfig::load_opt(args.config.as_ref())?;
    let schedule = args
        .schedule
        .clone()
        .or(file_cfg.schedule.clone())
        .unwrap_or_else(default_schedule);
    check_schedule(&schedule)?;
    let quantile = args.postprocess.or(file_cfg.postprocess.map(|p| p.quantile));
    let pcfg = quantile
        .map(PostprocessConfig::new)
        .transpose()
        .map_err(|e| usage(e.to_string()))?;
    let eval_seed = args.seed.or(file_cfg.seed).unwrap_or(0);

    let dataset = load_data(&args.data)?;
    let model = args.model.build(&dataset.config)?;
    let limit = args.limit.unwrap_or(usize::MAX).min(dataset.samples.len());
    let maps = load_maps(&args.maps, limit)?;

    let mut names = vec!["freqrise".to_string()];
    if let Some(p) = &pcfg {
        names.push(format!("freqrise-q{}", p.quantile));
    }
    if args.with_baselines {
        names.push("amplitude".into());
        names.push("random".into());
    }
    let mut accums: Vec<Accum> = names.iter().map(|_| Accum::default()).collect();

    for (i, map) in &maps {
        let sample = &dataset.samples[*i];
        let x = to_series(sample, dataset.config.length)?;
        let mut variants: Vec<RelevanceMap> = vec![map.clone()];
        if let Some(p) = &pcfg {
            variants.push(postprocess_quantile(map, p)?);
        }
        if args.with_baselines {
            variants.push(baseline_amplitude_map(&x, map.domain(), map.window())?);
            variants.push(baseline_random_map(
                &x,
                map.domain(),
                map.window(),
                eval_seed,
                *i as u64,
            )?);
        }
        for (variant, accum) in variants.iter().zip(&mut accums) {
            // Ground truth lives on frequency bins; rank accuracy only
            // makes sense there, and only when components are present.
            if variant.domain() == Domain::Frequency && !sample.subset.is_empty() {
                accum.ranks.push(relevance_rank_accuracy(variant, &sample.subset)?);
            }
            accum
                .curves
                .push(deletion_curve(model.as_ref(), &x, variant, usize::from(sample.label), &schedule)?);
            accum.push_entropy(variant)?;
        }
    }

    fs::create_dir_all(&args.output_dir)
        .with_context(|| format!("creating {}", args.output_dir.display()))?;
    let report_json = args.output_dir.join("report.json");
    refuse_overwrite(&report_json, args.force)?;

    let mut methods = Vec::new();
    let mut plot = Vec::new();
    println!("{:<16} {:>10} {:>10} {:>10}", "method", "rank_acc", "auc", "entropy");
    for (name, accum) in names.iter().zip(&accums) {
        let curve = mean_deletion_curve(&accum.curves)?;
        let rank_accuracy = mean(&accum.ranks);
        let complexity = mean(&accum.entropies);
        let fmt_opt = |v: Option<f64>| match v {
            Some(v) => format!("{v:.4}"),
            None => "-".into(),
        };
        println!(
            "{name:<16} {:>10} {:>10.4} {:>10}",
            fmt_opt(rank_accuracy),
            curve.auc,
            fmt_opt(complexity)
        );
        write_curve_csv(&args.output_dir.join(format!("curve_{name}.csv")), &curve)?;
        plot.push((name.clone(), curve.clone()));
        methods.push(MethodSummary {
            method: name.clone(),
            domain: maps[0].1.domain(),
            samples: maps.len(),
            rank_accuracy,
            faithfulness_auc: Some(curve.auc),
            complexity,
            curve: Some(curve),
        });
    }

    let report = EvalReport {
        dataset: Some(args.data.display().to_string()),
        model: Some(args.model.to_string()),
        methods,
    };
    write_report_json(&report_json, &report)?;
    write_report_csv(&args.output_dir.join("report.csv"), &report)?;
    write_deletion_svg(&args.output_dir.join("deletion.svg"), "deletion curves", &plot)?;
    println!("evaluated {} maps; report in {}", maps.len(), args.output_dir.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep-postprocess

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Dataset the maps were computed on
    #[arg(long)]
    data: PathBuf,
    /// Classifier: oracle, mlp:PATH, or external:COMMAND
    #[arg(long)]
    model: ModelSpec,
    /// Directory holding sample_#####.csv maps
    #[arg(long)]
    maps: PathBuf,
    /// Output CSV: quantile,faithfulness_auc,complexity
    #[arg(long)]
    output: PathBuf,
    /// JSON file with default settings for this run
    #[arg(long)]
    config: Option<PathBuf>,
    /// Quantiles to sweep, e.g. 0.9,0.95,0.99
    #[arg(long, value_delimiter = ',')]
    quantiles: Vec<f64>,
    /// Deletion fractions, e.g. 0.05,0.1,0.2
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<f64>>,
    /// Evaluate at most N maps
    #[arg(long)]
    limit: Option<usize>,
    /// Overwrite an existing output file
    #[arg(long)]
    force: bool,
}

pub fn sweep_postprocess(args: SweepArgs) -> Result<()> {
    let file_cfg = RunConfig::load_opt(args.config.as_ref())?;
    let schedule = args
        .schedule
        .clone()
        .or(file_cfg.schedule.clone())
        .unwrap_or_else(default_schedule);
    check_schedule(&schedule)?;

    let mut quantiles = args.quantiles.clone();
    if quantiles.is_empty() {
        return Err(usage("--quantiles needs at least one value"));
    }
    quantiles.sort_by(f64::total_cmp);
    let before = quantiles.len();
    quantiles.dedup();
    if quantiles.len() < before {
        eprintln!("warning: dropped {} duplicate quantile(s)", before - quantiles.len());
    }
    let cfgs: Vec<PostprocessConfig> = quantiles
        .iter()
        .map(|&q| PostprocessConfig::new(q).map_err(|e| usage(e.to_string())))
        .collect::<Result<_>>()?;

    let dataset = load_data(&args.data)?;
    let model = args.model.build(&dataset.config)?;
    let limit = args.limit.unwrap_or(usize::MAX).min(dataset.samples.len());
    let maps = load_maps(&args.maps, limit)?;

    refuse_overwrite(&args.output, args.force)?;
    ensure_parent(&args.output)?;
    let mut rows = Vec::with_capacity(cfgs.len());
    println!("{:<10} {:>16} {:>12}", "quantile", "faithfulness_auc", "complexity");
    for pcfg in &cfgs {
        let mut accum = Accum::default();
        for (i, map) in &maps {
            let sample = &dataset.samples[*i];
            let x = to_series(sample, dataset.config.length)?;
            let processed = postprocess_quantile(map, pcfg)?;
            accum.curves.push(deletion_curve(
                model.as_ref(),
                &x,
                &processed,
                usize::from(sample.label),
                &schedule,
            )?);
            accum.push_entropy(&processed)?;
        }
        let auc = mean_deletion_curve(&accum.curves)?.auc;
        let complexity = mean(&accum.entropies);
        println!(
            "{:<10} {auc:>16.4} {:>12}",
            pcfg.quantile,
            complexity.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
        );
        rows.push((pcfg.quantile, auc, complexity));
    }

    let mut csv = String::from("quantile,faithfulness_auc,complexity\n");
    for (q, auc, complexity) in rows {
        let c = complexity.map(|v| v.to_string()).unwrap_or_default();
        csv.push_str(&format!("{q},{auc},{c}\n"));
    }
    fs::write(&args.output, csv)?;
    println!("swept {} quantile(s) over {} maps into {}", cfgs.len(), maps.len(), args.output.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// stub-endpoint

#[derive(Args, Debug)]
pub struct StubArgs {
    /// Respond with these fixed logits instead of echoing each signal
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    fixed: Option<Vec<f64>>,
}

pub fn stub_endpoint(args: StubArgs) -> Result<()> {
    let mode = match args.fixed {
        Some(logits) => {
            if logits.is_empty() {
                return Err(usage("--fixed needs at least one logit"));
            }
            EchoMode::Fixed(logits)
        }
        None => EchoMode::Echo,
    };
    serve_echo(mode)?;
    Ok(())
}
