//! Dataset generators, perturbations and on-disk formats.

pub mod delaunay;
pub mod generators;
pub mod idx;
pub mod perturb;
pub mod rng;
pub mod shortest_path;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphLine, Label};
use crate::matrix::Matrix;

pub use generators::{
    barabasi_albert_tree, delaunay2d, grid_graph, partition_clusters, random_partition_graph, PartitionParams,
};
pub use idx::{load_idx, Image};
pub use perturb::{diameter, edge_dropout, remove_vertices, shortest_path_vertex_dropout, uniform_vertex_dropout};
pub use rng::Rng;
pub use shortest_path::{on_shortest_path, shortest_path_labels, shortest_path_labels_for};

/// Where a sample came from.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub generator: String,
    pub seed: u64,
    pub index: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub graph: Graph,
    pub label: Label,
    pub meta: SampleMeta,
}

impl LabeledSample {
    pub fn to_line(&self) -> GraphLine {
        GraphLine::from_graph(&self.graph, Some(self.label.clone()))
    }

    pub fn from_line(line: &GraphLine, meta: SampleMeta) -> Result<Self> {
        let label = line.labels.clone().ok_or_else(|| Error::InvalidGraph("sample has no labels".into()))?;
        let graph = line.to_graph()?;
        if let Label::Nodes { values, .. } = &label {
            if values.len() != graph.n_nodes() {
                return Err(Error::ShapeMismatch(format!(
                    "{} node labels for {} vertices",
                    values.len(),
                    graph.n_nodes()
                )));
            }
        }
        Ok(Self { graph, label, meta })
    }
}

/// 28×28 pixel-grid graph with intensities in `[0, 1]` as node features.
pub fn mnist_graph(image: &Image, class: u8) -> Result<LabeledSample> {
    if image.rows != 28 || image.cols != 28 || image.pixels.len() != 784 {
        return Err(Error::BadImageShape(image.pixels.len()));
    }
    let feats = image.pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    let graph = grid_graph(28, 28).with_node_feats(Matrix::from_vec(784, 1, feats)?)?;
    Ok(LabeledSample { graph, label: Label::Class(usize::from(class)), meta: SampleMeta::default() })
}

/// Random graph family used by the shortest-path node task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Delaunay2d {
        n: usize,
    },
    BarabasiAlbert {
        n: usize,
    },
    RandomPartition {
        n: usize,
        #[serde(default)]
        p_in: Option<f64>,
        #[serde(default)]
        p_out: Option<f64>,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Delaunay2d { .. } => "delaunay2d",
            Family::BarabasiAlbert { .. } => "barabasi-albert",
            Family::RandomPartition { .. } => "random-partition",
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            Family::Delaunay2d { n } | Family::BarabasiAlbert { n } | Family::RandomPartition { n, .. } => n,
        }
    }

    pub fn graph(&self, rng: &mut Rng) -> Result<Graph> {
        match *self {
            Family::Delaunay2d { n } => delaunay2d(n, rng),
            Family::BarabasiAlbert { n } => barabasi_albert_tree(n, rng),
            Family::RandomPartition { n, p_in, p_out } => {
                let mut params = PartitionParams::for_size(n);
                params.p_in = p_in.unwrap_or(params.p_in);
                params.p_out = p_out.unwrap_or(params.p_out);
                random_partition_graph(n, params, rng)
            }
        }
    }

    /// Sample `index` of the stream seeded with `seed`: a graph with a
    /// shortest-path query and its per-vertex labels.
    pub fn sample(&self, seed: u64, index: u64) -> Result<LabeledSample> {
        let mut rng = Rng::derived(seed, index);
        let graph = self.graph(&mut rng)?;
        let (graph, values, pair) = shortest_path_labels(&graph, &mut rng)?;
        Ok(LabeledSample {
            graph,
            label: Label::Nodes { values, pair: Some(pair) },
            meta: SampleMeta { generator: self.name().into(), seed, index },
        })
    }
}

/// Samples `0..count` of a seeded stream.
pub fn generate(family: &Family, count: usize, seed: u64) -> Result<Vec<LabeledSample>> {
    (0..count as u64).map(|i| family.sample(seed, i)).collect()
}

/// A named perturbation applied to a whole dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Perturbation {
    UniformVertexDropout { p: f64 },
    ShortestPathVertexDropout { n_paths: usize },
    EdgeDropout { fraction: f64 },
}

impl Perturbation {
    pub fn apply(&self, sample: &LabeledSample, rng: &mut Rng) -> Result<LabeledSample> {
        match *self {
            Perturbation::UniformVertexDropout { p } => uniform_vertex_dropout(sample, p, rng),
            Perturbation::ShortestPathVertexDropout { n_paths } => shortest_path_vertex_dropout(sample, n_paths, rng),
            Perturbation::EdgeDropout { fraction } => Ok(LabeledSample {
                graph: edge_dropout(&sample.graph, fraction, rng)?,
                label: sample.label.clone(),
                meta: sample.meta.clone(),
            }),
        }
    }

    /// Perturbs every sample with its own stream derived from `seed`.
    pub fn apply_all(&self, samples: &[LabeledSample], seed: u64) -> Result<Vec<LabeledSample>> {
        samples.iter().enumerate().map(|(i, s)| self.apply(s, &mut Rng::derived(seed, i as u64))).collect()
    }
}

/// Sidecar describing how a dataset file was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator: String,
    pub params: serde_json::Value,
    pub seed: u64,
    pub count: usize,
}

/// `data.jsonl` → `data.manifest.json`.
pub fn manifest_path(dataset: &Path) -> PathBuf {
    dataset.with_extension("manifest.json")
}

pub fn write_jsonl(path: &Path, samples: &[LabeledSample]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for s in samples {
        serde_json::to_writer(&mut w, &s.to_line())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the samples and their manifest sidecar.
pub fn write_dataset(path: &Path, samples: &[LabeledSample], manifest: &Manifest) -> Result<()> {
    write_jsonl(path, samples)?;
    let mut w = BufWriter::new(File::create(manifest_path(path))?);
    serde_json::to_writer_pretty(&mut w, manifest)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_manifest(dataset: &Path) -> Result<Option<Manifest>> {
    let path = manifest_path(dataset);
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_reader(BufReader::new(File::open(path)?))?))
}

/// Reads a JSON-lines dataset; sample metadata comes from the manifest if present.
pub fn read_dataset(path: &Path) -> Result<Vec<LabeledSample>> {
    let manifest = read_manifest(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: GraphLine = serde_json::from_str(&line)?;
        let meta = SampleMeta {
            generator: manifest.as_ref().map(|m| m.generator.clone()).unwrap_or_default(),
            seed: manifest.as_ref().map_or(0, |m| m.seed),
            index: i as u64,
        };
        out.push(LabeledSample::from_line(&parsed, meta)?);
    }
    Ok(out)
}
