//! Experiment configuration, training loop and evaluation.

pub mod metrics;
pub mod record;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datasets::rng::splitmix64;
use crate::datasets::{edge_dropout, generate, read_dataset, Family, LabeledSample, Rng};
use crate::error::{Error, Result};
use crate::graph::Label;
use crate::matrix::Matrix;
use crate::model::{Head, ModelBatch, ModelConfig, PreparedGraph, SpectralGn};
use crate::nn::{checkpoint, positive_class_weights, Adam, AdamConfig, Tape};

pub use metrics::{binary_metrics, roc_auc, BinaryMetrics};
pub use record::{merge_curves, RunRecord};

/// Where the samples come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSpec {
    Generate { generator: Family, count: usize, seed: u64 },
    File { path: PathBuf },
}

impl DataSpec {
    pub fn load(&self) -> Result<Vec<LabeledSample>> {
        match self {
            DataSpec::Generate { generator, count, seed } => generate(generator, *count, *seed),
            DataSpec::File { path } => read_dataset(path),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// How samples are assigned to splits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// 80/10/10 by a seeded hash of the sample index.
    #[default]
    Hash,
    /// Every sample is in every split.
    All,
}

/// Split of sample `index` under `seed`.
pub fn split_of(seed: u64, index: usize) -> Split {
    match splitmix64(seed ^ splitmix64(index as u64)) % 10 {
        0..=7 => Split::Train,
        8 => Split::Val,
        _ => Split::Test,
    }
}

fn default_variant() -> String {
    "run".into()
}
fn default_batch() -> usize {
    32
}
fn default_eval_every() -> usize {
    50
}
fn default_true() -> bool {
    true
}
fn default_eval_splits() -> Vec<Split> {
    vec![Split::Val, Split::Test]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Name used when curves from several runs are merged.
    #[serde(default = "default_variant")]
    pub variant: String,
    pub data: DataSpec,
    pub model: ModelConfig,
    #[serde(default)]
    pub optimizer: AdamConfig,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    pub iterations: usize,
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    /// Seeds splits, batch order and edge dropout.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub split: SplitMode,
    #[serde(default = "default_eval_splits")]
    pub eval_splits: Vec<Split>,
    /// Evaluate at most this many samples per split.
    #[serde(default)]
    pub eval_cap: Option<usize>,
    /// Fraction of undirected edges removed from the message-passing graph.
    /// The spectral basis still comes from the full graph.
    #[serde(default)]
    pub edge_dropout: Option<f64>,
    /// Weight positive vertices by `#neg/#pos` in the node loss. Helps F1 and
    /// ROC-AUC on sparse labels but moves the accuracy-optimal threshold.
    #[serde(default = "default_true")]
    pub balance_classes: bool,
    /// Output directory; nothing is written when absent.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.eval_every == 0 {
            return Err(Error::InvalidParameter("batch size and eval cadence must be positive".into()));
        }
        if let DataSpec::File { path } = &self.data {
            if !path.exists() {
                return Err(Error::InvalidParameter(format!("dataset {} does not exist", path.display())));
            }
        }
        if let Some(f) = self.edge_dropout {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidParameter(format!("edge dropout must be in [0, 1], got {f}")));
            }
        }
        self.model.validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Supervision in the form the loss needs.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Nodes(Vec<f64>),
    Class(usize),
    Values(Vec<f64>),
}

/// A sample with its basis computed and its target extracted.
#[derive(Clone, Debug)]
pub struct PreparedSample {
    pub input: PreparedGraph,
    pub target: Target,
}

fn target_for(label: &Label, head: Head, n_nodes: usize) -> Result<Target> {
    match (label, head) {
        (Label::Nodes { values, .. }, Head::NodeBinary) if values.len() == n_nodes => {
            Ok(Target::Nodes(values.iter().map(|&v| f64::from(v)).collect()))
        }
        (Label::Class(c), Head::GraphClass { classes }) if *c < classes => Ok(Target::Class(*c)),
        (Label::Target(t), Head::GraphRegress { outputs }) if t.len() == outputs => Ok(Target::Values(t.clone())),
        _ => Err(Error::ShapeMismatch(format!("label {label:?} does not fit head {head:?}"))),
    }
}

/// Copies the feature widths of `samples` into the model config.
pub fn infer_widths(model: &mut ModelConfig, samples: &[LabeledSample]) {
    if let Some(s) = samples.first() {
        let (v, e, g) = s.graph.widths();
        model.node_in = v;
        model.edge_in = e;
        model.global_in = g;
    }
}

/// Computes bases and targets. With `edge_fraction`, sample `i` loses edges
/// drawn from a stream derived from `seed` and `i`; the basis is computed
/// before the edges are removed.
pub fn prepare_samples(
    samples: &[LabeledSample],
    model: &ModelConfig,
    edge_fraction: Option<f64>,
    seed: u64,
) -> Result<Vec<PreparedSample>> {
    let dropout_seed = splitmix64(seed ^ 0x6564_6765);
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let target = target_for(&s.label, model.head, s.graph.n_nodes())?;
            let input = match edge_fraction {
                Some(f) => {
                    let dropped = edge_dropout(&s.graph, f, &mut Rng::derived(dropout_seed, i as u64))?;
                    PreparedGraph::new(dropped, Some(&s.graph), model)?
                }
                None => PreparedGraph::new(s.graph.clone(), None, model)?,
            };
            Ok(PreparedSample { input, target })
        })
        .collect()
}

/// Indices of samples in `split`, capped at `cap`.
pub fn split_indices(n: usize, mode: SplitMode, seed: u64, split: Split, cap: Option<usize>) -> Vec<usize> {
    let mut idx: Vec<usize> = match mode {
        SplitMode::All => (0..n).collect(),
        SplitMode::Hash => (0..n).filter(|&i| split_of(seed, i) == split).collect(),
    };
    if let Some(c) = cap {
        idx.truncate(c);
    }
    idx
}

fn make_batch(data: &[PreparedSample], idx: &[usize]) -> Result<ModelBatch> {
    let items: Vec<&PreparedGraph> = idx.iter().map(|&i| &data[i].input).collect();
    ModelBatch::new(&items)
}

/// Scalar training loss for a batch.
fn batch_loss(
    tape: &mut Tape,
    out: crate::nn::Var,
    head: Head,
    targets: &[&Target],
    balance: bool,
) -> Result<crate::nn::Var> {
    match head {
        Head::NodeBinary => {
            let mut y = Vec::new();
            for t in targets {
                if let Target::Nodes(v) = t {
                    y.extend_from_slice(v);
                }
            }
            let w = if balance { positive_class_weights(&y) } else { vec![1.0; y.len()].into() };
            tape.bce_with_logits(out, y.into(), w)
        }
        Head::GraphClass { .. } => {
            let labels: Arc<[usize]> =
                targets.iter().map(|t| if let Target::Class(c) = t { *c } else { 0 }).collect();
            tape.softmax_cross_entropy(out, labels)
        }
        Head::GraphRegress { outputs } => {
            let mut data = Vec::new();
            for t in targets {
                if let Target::Values(v) = t {
                    data.extend_from_slice(v);
                }
            }
            tape.mse(out, Arc::new(Matrix::from_vec(targets.len(), outputs, data)?))
        }
    }
}

/// Task metrics for `model` on the given samples, evaluated in chunks.
pub fn evaluate(model: &SpectralGn, data: &[PreparedSample], idx: &[usize], chunk: usize) -> Result<Vec<(String, f64)>> {
    let batches: Vec<Vec<usize>> = idx.chunks(chunk.max(1)).map(<[usize]>::to_vec).collect();
    evaluate_batches(model, data, &batches, None)
}

fn evaluate_batches(
    model: &SpectralGn,
    data: &[PreparedSample],
    chunks: &[Vec<usize>],
    cached: Option<&[ModelBatch]>,
) -> Result<Vec<(String, f64)>> {
    let mut logits = Vec::new();
    let mut node_labels = Vec::new();
    let mut correct = 0usize;
    let mut graphs = 0usize;
    let (mut abs_err, mut sq_err, mut n_vals) = (0.0, 0.0, 0usize);
    for (c, chunk) in chunks.iter().enumerate() {
        let out = match cached {
            Some(b) => model.predict(&b[c])?,
            None => model.predict(&make_batch(data, chunk)?)?,
        };
        match model.config.head {
            Head::NodeBinary => {
                logits.extend_from_slice(out.as_slice());
                for &i in chunk {
                    if let Target::Nodes(v) = &data[i].target {
                        node_labels.extend(v.iter().map(|&y| y > 0.5));
                    }
                }
            }
            Head::GraphClass { .. } => {
                for (r, &i) in chunk.iter().enumerate() {
                    graphs += 1;
                    if Target::Class(metrics::argmax(out.row(r))) == data[i].target {
                        correct += 1;
                    }
                }
            }
            Head::GraphRegress { .. } => {
                for (r, &i) in chunk.iter().enumerate() {
                    if let Target::Values(v) = &data[i].target {
                        for (p, y) in out.row(r).iter().zip(v) {
                            abs_err += (p - y).abs();
                            sq_err += (p - y) * (p - y);
                            n_vals += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(match model.config.head {
        Head::NodeBinary => {
            let m = binary_metrics(&logits, &node_labels);
            vec![
                ("accuracy".into(), m.accuracy),
                ("precision".into(), m.precision),
                ("recall".into(), m.recall),
                ("f1".into(), m.f1),
                ("roc_auc".into(), m.roc_auc),
            ]
        }
        Head::GraphClass { .. } => vec![("accuracy".into(), correct as f64 / graphs.max(1) as f64)],
        Head::GraphRegress { .. } => {
            let n = n_vals.max(1) as f64;
            vec![("mae".into(), abs_err / n), ("mse".into(), sq_err / n)]
        }
    })
}

/// Larger is better.
fn score(head: Head, metrics: &[(String, f64)]) -> f64 {
    let key = match head {
        Head::GraphRegress { .. } => "mae",
        _ => "accuracy",
    };
    let v = metrics.iter().find(|(k, _)| k == key).map_or(f64::NAN, |m| m.1);
    if key == "mae" {
        -v
    } else {
        v
    }
}

pub struct TrainOutcome {
    pub record: RunRecord,
    pub model: SpectralGn,
    /// Wall-clock seconds at each evaluation, kept apart from the record so
    /// the record stays reproducible.
    pub timing: Vec<(usize, f64)>,
}

/// Loads the configured data and trains.
pub fn train(cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let samples = cfg.data.load()?;
    train_on(cfg, &samples)
}

/// Trains on already loaded samples. Feature widths come from the data.
pub fn train_on(cfg: &ExperimentConfig, samples: &[LabeledSample]) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    infer_widths(&mut cfg.model, samples);
    let data = prepare_samples(samples, &cfg.model, cfg.edge_dropout, cfg.seed)?;
    train_prepared(&cfg, &data)
}

/// Trains on prepared samples; `cfg.model` must already carry the right widths.
pub fn train_prepared(cfg: &ExperimentConfig, data: &[PreparedSample]) -> Result<TrainOutcome> {
    let start = Instant::now();
    let mut model = SpectralGn::new(cfg.model.clone())?;
    let train_idx = split_indices(data.len(), cfg.split, cfg.seed, Split::Train, None);
    if train_idx.is_empty() {
        return Err(Error::InvalidParameter("training split is empty".into()));
    }
    let eval_sets: Vec<(Split, Vec<Vec<usize>>, Vec<ModelBatch>)> = cfg
        .eval_splits
        .iter()
        .map(|&s| {
            let idx = split_indices(data.len(), cfg.split, cfg.seed, s, cfg.eval_cap);
            let chunks: Vec<Vec<usize>> = idx.chunks(cfg.batch_size).map(<[usize]>::to_vec).collect();
            let batches = chunks.iter().map(|c| make_batch(data, c)).collect::<Result<Vec<_>>>()?;
            Ok((s, chunks, batches))
        })
        .collect::<Result<_>>()?;

    if let Some(out) = &cfg.out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("config.json"), serde_json::to_string_pretty(cfg)? + "\n")?;
    }
    let meta = serde_json::json!({ "model": cfg.model });

    let mut record = RunRecord::default();
    let mut timing = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut log_eval = |it: usize, model: &SpectralGn, record: &mut RunRecord, loss: Option<f64>| -> Result<()> {
        if let Some(l) = loss {
            record.push(it, "train", "loss", l);
        }
        let mut first = None;
        for (split, chunks, batches) in &eval_sets {
            let m = evaluate_batches(model, data, chunks, Some(batches))?;
            first.get_or_insert_with(|| score(cfg.model.head, &m));
            for (k, v) in &m {
                record.push(it, split.name(), k, *v);
            }
        }
        timing.push((it, start.elapsed().as_secs_f64()));
        if let (Some(out), Some(s)) = (&cfg.out, first) {
            if s > best {
                best = s;
                checkpoint::save(&out.join("best.ckpt"), &model.params, meta.clone())?;
            }
        }
        Ok(())
    };
    log_eval(0, &model, &mut record, None)?;

    let mut rng = Rng::derived(cfg.seed, 0x7472_6169);
    let mut order = train_idx.clone();
    rng.shuffle(&mut order);
    let mut cursor = 0;
    let bs = cfg.batch_size.min(order.len());
    let mut adam = Adam::new(cfg.optimizer);
    let mut loss_sum = 0.0;
    let mut loss_count = 0usize;
    for it in 1..=cfg.iterations {
        if cursor + bs > order.len() {
            rng.shuffle(&mut order);
            cursor = 0;
        }
        let idx = &order[cursor..cursor + bs];
        cursor += bs;
        let batch = make_batch(data, idx)?;
        let targets: Vec<&Target> = idx.iter().map(|&i| &data[i].target).collect();
        let mut tape = Tape::new();
        let (bound, out) = model.forward(&mut tape, &batch)?;
        let loss = batch_loss(&mut tape, out, cfg.model.head, &targets, cfg.balance_classes)?;
        let value = tape.value(loss)[(0, 0)];
        if !value.is_finite() {
            return Err(Error::NanLoss { iteration: it, loss: value });
        }
        let grads = tape.backward(loss)?;
        let g: Vec<Matrix> = bound
            .vars()
            .iter()
            .zip(model.params.values())
            .map(|(&v, p)| grads.get_or_zeros(v, p.shape()))
            .collect();
        adam.step(&mut model.params, &g)?;
        loss_sum += value;
        loss_count += 1;
        if it % cfg.eval_every == 0 || it == cfg.iterations {
            log_eval(it, &model, &mut record, Some(loss_sum / loss_count as f64))?;
            loss_sum = 0.0;
            loss_count = 0;
        }
    }

    if let Some(out) = &cfg.out {
        checkpoint::save(&out.join("final.ckpt"), &model.params, meta)?;
        record.write(&out.join("record.csv"))?;
        let mut t = String::from("iteration,seconds\n");
        for (it, s) in &timing {
            writeln!(t, "{it},{s:.3}").unwrap();
        }
        std::fs::write(out.join("timing.csv"), t)?;
    }
    Ok(TrainOutcome { record, model, timing })
}

/// Rebuilds a model from a checkpoint written by [`train`].
pub fn load_model(path: &Path) -> Result<SpectralGn> {
    let (header, values) = checkpoint::load(path)?;
    let cfg: ModelConfig = serde_json::from_value(
        header.meta.get("model").cloned().ok_or_else(|| Error::Checkpoint("checkpoint has no model config".into()))?,
    )?;
    let mut model = SpectralGn::new(cfg)?;
    checkpoint::load_into(&mut model.params, &header, values)?;
    Ok(model)
}

/// Metrics of a checkpoint on one split of the data described by `cfg`.
pub fn evaluate_checkpoint(
    path: &Path,
    cfg: &ExperimentConfig,
    samples: &[LabeledSample],
    split: Split,
) -> Result<Vec<(String, f64)>> {
    let model = load_model(path)?;
    let data = prepare_samples(samples, &model.config, cfg.edge_dropout, cfg.seed)?;
    let idx = split_indices(data.len(), cfg.split, cfg.seed, split, cfg.eval_cap);
    evaluate(&model, &data, &idx, cfg.batch_size)
}
