//! Command implementations for the `sgn` binary.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use spectral_gn::datasets::{
    self, load_idx, mnist_graph, write_dataset, Family, LabeledSample, Manifest, Perturbation, SampleMeta,
};
use spectral_gn::harness::{self, merge_curves, ExperimentConfig, RunRecord, Split};
use spectral_gn::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "sgn", version, about = "Spectral graph network toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a JSON-lines dataset and its manifest.
    Generate(GenerateArgs),
    /// Train from a JSON experiment config.
    Train(TrainArgs),
    /// Evaluate a checkpoint on one split of a config's data.
    Eval(EvalArgs),
    /// Apply a perturbation to every sample of a dataset.
    Perturb(PerturbArgs),
    /// Merge run records into one CSV keyed by variant.
    Curves(CurvesArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FamilyArg {
    Delaunay2d,
    BarabasiAlbert,
    RandomPartition,
    Mnist,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Vertex count (random families).
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 5000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub p_in: Option<f64>,
    #[arg(long)]
    pub p_out: Option<f64>,
    /// IDX image file (mnist).
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// IDX label file (mnist).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SplitArg {
    Train,
    Val,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Val => Split::Val,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Experiment config describing data, split and perturbation; defaults
    /// to `config.json` next to the checkpoint.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset file replacing the config's data.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PerturbKind {
    UniformVertexDropout,
    ShortestPathVertexDropout,
    EdgeDropout,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long, value_enum)]
    pub kind: PerturbKind,
    /// Vertex dropout probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of shortest paths to remove.
    #[arg(long)]
    pub n_paths: Option<usize>,
    /// Fraction of undirected edges to remove.
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Run directories, each holding `record.csv` and `config.json`.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn missing(flag: &str) -> Error {
    Error::InvalidParameter(format!("--{flag} is required here"))
}

pub fn generate(a: &GenerateArgs) -> Result<usize> {
    let (samples, generator, params) = match a.family {
        FamilyArg::Mnist => {
            let images = a.images.as_deref().ok_or_else(|| missing("images"))?;
            let labels = a.labels.as_deref().ok_or_else(|| missing("labels"))?;
            let samples = load_idx(images, labels)?
                .iter()
                .take(a.count)
                .enumerate()
                .map(|(i, (img, y))| {
                    let mut s = mnist_graph(img, *y)?;
                    s.meta = SampleMeta { generator: "mnist".into(), seed: a.seed, index: i as u64 };
                    Ok(s)
                })
                .collect::<Result<Vec<_>>>()?;
            let params = serde_json::json!({ "images": images, "labels": labels });
            (samples, "mnist".to_string(), params)
        }
        fam => {
            let family = match fam {
                FamilyArg::Delaunay2d => Family::Delaunay2d { n: a.n },
                FamilyArg::BarabasiAlbert => Family::BarabasiAlbert { n: a.n },
                _ => Family::RandomPartition { n: a.n, p_in: a.p_in, p_out: a.p_out },
            };
            let samples = datasets::generate(&family, a.count, a.seed)?;
            (samples, family.name().to_string(), serde_json::to_value(&family)?)
        }
    };
    let manifest = Manifest { generator, params, seed: a.seed, count: samples.len() };
    write_dataset(&a.out, &samples, &manifest)?;
    Ok(samples.len())
}

pub fn train(a: &TrainArgs) -> Result<RunRecord> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(out) = &a.out {
        cfg.out = Some(out.clone());
    }
    if cfg.out.is_none() {
        return Err(missing("out"));
    }
    Ok(harness::train(&cfg)?.record)
}

pub fn eval(a: &EvalArgs) -> Result<Vec<(String, f64)>> {
    let config = match &a.config {
        Some(c) => c.clone(),
        None => a.checkpoint.parent().unwrap_or(Path::new(".")).join("config.json"),
    };
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(d) = &a.data {
        cfg.data = harness::DataSpec::File { path: d.clone() };
    }
    let samples = cfg.data.load()?;
    harness::evaluate_checkpoint(&a.checkpoint, &cfg, &samples, a.split.into())
}

pub fn perturb(a: &PerturbArgs) -> Result<Vec<LabeledSample>> {
    let p = match a.kind {
        PerturbKind::UniformVertexDropout => Perturbation::UniformVertexDropout { p: a.p.ok_or_else(|| missing("p"))? },
        PerturbKind::ShortestPathVertexDropout => {
            Perturbation::ShortestPathVertexDropout { n_paths: a.n_paths.ok_or_else(|| missing("n-paths"))? }
        }
        PerturbKind::EdgeDropout => Perturbation::EdgeDropout { fraction: a.fraction.ok_or_else(|| missing("fraction"))? },
    };
    let samples = datasets::read_dataset(&a.input)?;
    let out = p.apply_all(&samples, a.seed)?;
    let source = datasets::read_manifest(&a.input)?;
    let manifest = Manifest {
        generator: source.as_ref().map_or_else(|| "file".into(), |m| m.generator.clone()),
        params: serde_json::json!({ "source": source, "perturbation": p }),
        seed: a.seed,
        count: out.len(),
    };
    write_dataset(&a.out, &out, &manifest)?;
    Ok(out)
}

pub fn curves(a: &CurvesArgs) -> Result<String> {
    let mut runs = Vec::new();
    for dir in &a.runs {
        let record = RunRecord::read(&dir.join("record.csv"))?;
        let name = match ExperimentConfig::load(&dir.join("config.json")) {
            Ok(cfg) => cfg.variant,
            Err(_) => dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned()),
        };
        runs.push((name, record));
    }
    let merged = merge_curves(&runs);
    std::fs::write(&a.out, &merged)?;
    Ok(merged)
}

/// Keeps freed buffers in the heap instead of returning them to the kernel;
/// training reallocates the same large matrices every iteration.
pub fn tune_allocator() {
    #[cfg(all(target_os = "linux", target_env = "gnu"))]
    // SAFETY: mallopt only adjusts allocator thresholds.
    unsafe {
        libc::mallopt(libc::M_MMAP_THRESHOLD, 32 << 20);
        libc::mallopt(libc::M_TRIM_THRESHOLD, 1 << 30);
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => {
            let n = generate(&a)?;
            println!("wrote {n} samples to {}", a.out.display());
        }
        Command::Train(a) => {
            let rec = train(&a)?;
            let last = rec.iterations().last().copied().unwrap_or(0);
            for r in rec.rows.iter().filter(|r| r.iteration == last) {
                println!("{} {} {} {}", r.iteration, r.split, r.metric, r.value);
            }
        }
        Command::Eval(a) => {
            let m: serde_json::Map<String, serde_json::Value> =
                eval(&a)?.into_iter().map(|(k, v)| (k, serde_json::json!(v))).collect();
            println!("{}", serde_json::Value::Object(m));
        }
        Command::Perturb(a) => {
            let out = perturb(&a)?;
            println!("wrote {} samples to {}", out.len(), a.out.display());
        }
        Command::Curves(a) => {
            curves(&a)?;
            println!("wrote {}", a.out.display());
        }
    }
    Ok(())
}
