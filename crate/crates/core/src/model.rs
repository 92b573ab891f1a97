//! The spectral graph network: encoders, coupled spatial/spectral message
//! passing with eigenpooling and eigenbroadcasting, and a decoder.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::blocks::{Aggregation, GcnLayer, GftBlock, GnBlock, Latents, Processor, Topology};
use crate::error::{Error, Result};
use crate::graph::{disjoint_union, BatchedGraph, Graph};
use crate::matrix::Matrix;
use crate::nn::{BlockProjection, Bound, Linear, Mlp, ParamStore, Part, Tape, Var};
use crate::spectral::{spectral_basis, threshold_basis, SpectralBasis};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialKind {
    #[default]
    Gn,
    Gcn,
    NodeOnly,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralKind {
    #[default]
    Gn,
    Gcn,
    Gft,
    NodeOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Head {
    GraphClass { classes: usize },
    NodeBinary,
    GraphRegress { outputs: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Number of eigenvectors; 0 disables the spectral pathway.
    pub k: usize,
    /// Use `concat[θ(U), θ(−U)]` as the projection (2K spectral vertices).
    pub threshold: bool,
    /// Message-passing steps.
    pub steps: usize,
    pub spatial: SpatialKind,
    pub spectral: SpectralKind,
    pub latent: usize,
    pub hidden: usize,
    pub hidden_layers: usize,
    pub head: Head,
    /// Reuse one set of step parameters for every step.
    pub share_weights: bool,
    /// Give spectral GN blocks a global term.
    pub spectral_global: bool,
    pub aggregation: Aggregation,
    pub node_in: usize,
    pub edge_in: usize,
    pub global_in: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            k: 4,
            threshold: false,
            steps: 3,
            spatial: SpatialKind::Gn,
            spectral: SpectralKind::Gn,
            latent: 64,
            hidden: 64,
            hidden_layers: 2,
            head: Head::NodeBinary,
            share_weights: false,
            spectral_global: true,
            aggregation: Aggregation::Sum,
            node_in: 0,
            edge_in: 0,
            global_in: 0,
            seed: 0,
        }
    }
}

impl ModelConfig {
    /// Spectral vertices per graph.
    pub fn channels(&self) -> usize {
        if self.threshold {
            2 * self.k
        } else {
            self.k
        }
    }

    fn hidden_widths(&self) -> Vec<usize> {
        vec![self.hidden; self.hidden_layers]
    }

    fn mlp_widths(&self, d_in: usize, d_out: usize) -> Vec<usize> {
        std::iter::once(d_in).chain(self.hidden_widths()).chain(std::iter::once(d_out)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.latent == 0 {
            return Err(Error::InvalidParameter("latent width must be positive".into()));
        }
        if self.threshold && self.k == 0 {
            return Err(Error::InvalidParameter("thresholding needs K >= 1".into()));
        }
        match self.head {
            Head::GraphClass { classes: 0 } | Head::GraphRegress { outputs: 0 } => {
                Err(Error::InvalidParameter("head needs at least one output".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Complete directed graph on the spectral vertices, one per eigenvector,
/// with the eigenvalue as node feature.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralGraph {
    pub graph: Graph,
}

impl SpectralGraph {
    pub fn eigvals(&self) -> Vec<f64> {
        self.graph.node_feats().column(0)
    }
}

/// Builds the spectral input graph from eigenvalue labels. Edge and global
/// features are a single zero channel.
pub fn build_spectral_input(eigvals: &[f64]) -> SpectralGraph {
    let c = eigvals.len();
    let mut edges = Vec::with_capacity(c * c.saturating_sub(1));
    for s in 0..c {
        for r in 0..c {
            if s != r {
                edges.push((s, r));
            }
        }
    }
    let (senders, receivers): (Vec<_>, Vec<_>) = edges.into_iter().unzip();
    let n_edges = senders.len();
    let graph = Graph::new(
        Matrix::from_vec(c, 1, eigvals.to_vec()).expect("one eigenvalue per vertex"),
        senders,
        receivers,
        Matrix::zeros(n_edges, 1),
        vec![0.0],
    )
    .expect("complete graph is valid");
    SpectralGraph { graph }
}

/// Projection matrix and spectral graph for one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralInput {
    pub projection: Matrix,
    pub graph: SpectralGraph,
}

impl SpectralInput {
    pub fn from_basis(basis: &SpectralBasis, threshold: bool) -> Self {
        if threshold {
            let t = threshold_basis(basis);
            Self { projection: t.projection().clone(), graph: build_spectral_input(t.eigvals()) }
        } else {
            Self { projection: basis.eigvecs().clone(), graph: build_spectral_input(basis.eigvals()) }
        }
    }
}

/// A graph ready for the model: the message-passing graph plus, when the
/// spectral pathway is enabled, its projection.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedGraph {
    pub graph: Graph,
    pub spectral: Option<SpectralInput>,
}

impl PreparedGraph {
    /// The basis comes from `basis_graph` when given (e.g. the graph before
    /// edge dropout), otherwise from `graph` itself.
    pub fn new(graph: Graph, basis_graph: Option<&Graph>, cfg: &ModelConfig) -> Result<Self> {
        let spectral = if cfg.k == 0 {
            None
        } else {
            let source = basis_graph.unwrap_or(&graph);
            if source.n_nodes() != graph.n_nodes() {
                return Err(Error::ShapeMismatch("basis graph has a different vertex count".into()));
            }
            let basis = spectral_basis(source, cfg.k)?;
            Some(SpectralInput::from_basis(&basis, cfg.threshold))
        };
        Ok(Self { graph, spectral })
    }

    pub fn with_basis(graph: Graph, basis: &SpectralBasis, threshold: bool) -> Self {
        Self { graph, spectral: Some(SpectralInput::from_basis(basis, threshold)) }
    }
}

/// Batched spectral graphs and their block projection.
#[derive(Clone, Debug)]
pub struct SpectralBatch {
    pub batch: BatchedGraph,
    pub topo: Topology,
    pub projection: Arc<BlockProjection>,
}

/// Several prepared graphs merged for one forward pass.
#[derive(Clone, Debug)]
pub struct ModelBatch {
    pub batch: BatchedGraph,
    pub topo: Topology,
    pub spectral: Option<SpectralBatch>,
}

impl ModelBatch {
    pub fn new(items: &[&PreparedGraph]) -> Result<Self> {
        let graphs: Vec<Graph> = items.iter().map(|p| p.graph.clone()).collect();
        let batch = disjoint_union(&graphs)?;
        let topo = Topology::batched(&batch);
        let spectral = match items.iter().filter(|p| p.spectral.is_some()).count() {
            0 => None,
            n if n == items.len() => {
                let inputs: Vec<&SpectralInput> = items.iter().map(|p| p.spectral.as_ref().unwrap()).collect();
                let c = inputs[0].projection.cols();
                if inputs.iter().any(|s| s.projection.cols() != c) {
                    return Err(Error::WidthMismatch("spectral widths differ within a batch".into()));
                }
                let sgraphs: Vec<Graph> = inputs.iter().map(|s| s.graph.graph.clone()).collect();
                let sbatch = disjoint_union(&sgraphs)?;
                let stopo = Topology::batched(&sbatch);
                let proj = Matrix::vstack(&inputs.iter().map(|s| &s.projection).collect::<Vec<_>>(), c)?;
                let projection = Arc::new(BlockProjection::new(proj, batch.node_offsets.clone())?);
                Some(SpectralBatch { batch: sbatch, topo: stopo, projection })
            }
            _ => return Err(Error::InvalidParameter("mixed spectral and non-spectral samples".into())),
        };
        Ok(Self { batch, topo, spectral })
    }

    pub fn n_graphs(&self) -> usize {
        self.batch.n_graphs()
    }

    pub fn n_nodes(&self) -> usize {
        self.batch.graph.n_nodes()
    }
}

/// Node, edge and global encoders for one graph kind.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoder {
    pub node: Mlp,
    pub edge: Mlp,
    pub global: Mlp,
}

impl Encoder {
    fn declare(store: &mut ParamStore, name: &str, cfg: &ModelConfig, inputs: (usize, usize, usize)) -> Result<Self> {
        let h = cfg.latent;
        Ok(Self {
            node: Mlp::declare(store, &format!("{name}.node"), &cfg.mlp_widths(inputs.0, h))?,
            edge: Mlp::declare(store, &format!("{name}.edge"), &cfg.mlp_widths(inputs.1, h))?,
            global: Mlp::declare(store, &format!("{name}.global"), &cfg.mlp_widths(inputs.2, h))?,
        })
    }

    pub fn apply(&self, tape: &mut Tape, bound: &Bound, b: &BatchedGraph) -> Result<Latents> {
        let nodes = tape.leaf(b.graph.node_feats().clone());
        let edges = tape.leaf(b.graph.edge_feats().clone());
        let globals = tape.leaf(b.globals.clone());
        Ok(Latents {
            nodes: self.node.apply(tape, bound, nodes)?,
            edges: self.edge.apply(tape, bound, edges)?,
            globals: self.global.apply(tape, bound, globals)?,
        })
    }
}

/// Parameters of one coupled message-passing step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepParams {
    pub spatial: Processor,
    /// Spectral processor with the two concat-then-reduce maps; absent when K = 0.
    pub spectral: Option<(Processor, Linear, Linear)>,
}

pub(crate) fn declare_spatial(store: &mut ParamStore, name: &str, cfg: &ModelConfig) -> Result<Processor> {
    let h = cfg.latent;
    Ok(match cfg.spatial {
        SpatialKind::Gn => Processor::Gn(GnBlock::declare(
            store,
            name,
            (h, h, h),
            (h, h, h),
            &cfg.hidden_widths(),
            cfg.aggregation,
            true,
        )?),
        SpatialKind::Gcn => Processor::Gcn(GcnLayer::declare(store, name, h, h)?),
        SpatialKind::NodeOnly => Processor::NodeOnly(Mlp::declare(store, name, &cfg.mlp_widths(h, h))?),
    })
}

fn declare_step(store: &mut ParamStore, name: &str, cfg: &ModelConfig) -> Result<StepParams> {
    let h = cfg.latent;
    let spatial = declare_spatial(store, &format!("{name}.spatial"), cfg)?;
    let spectral = if cfg.k == 0 {
        None
    } else {
        let sname = format!("{name}.spectral");
        let proc = match cfg.spectral {
            SpectralKind::Gn => Processor::Gn(GnBlock::declare(
                store,
                &sname,
                (h, h, h),
                (h, h, h),
                &cfg.hidden_widths(),
                cfg.aggregation,
                cfg.spectral_global,
            )?),
            SpectralKind::Gcn => Processor::Gcn(GcnLayer::declare(store, &sname, h, h)?),
            SpectralKind::Gft => {
                Processor::Gft(GftBlock::declare(store, &sname, cfg.channels(), h, h, &cfg.hidden_widths())?)
            }
            SpectralKind::NodeOnly => Processor::NodeOnly(Mlp::declare(store, &sname, &cfg.mlp_widths(h, h))?),
        };
        let fuse_spectral = Linear::declare(store, &format!("{name}.fuse_spectral"), 2 * h, h)?;
        let fuse_spatial = Linear::declare(store, &format!("{name}.fuse_spatial"), 2 * h, h)?;
        Some((proc, fuse_spectral, fuse_spatial))
    };
    Ok(StepParams { spatial, spectral })
}

pub(crate) fn declare_decoder(store: &mut ParamStore, cfg: &ModelConfig) -> Result<Mlp> {
    let h = cfg.latent;
    let widths = match cfg.head {
        Head::NodeBinary => cfg.mlp_widths(h, 1),
        Head::GraphClass { classes } => cfg.mlp_widths(2 * h, classes),
        Head::GraphRegress { outputs } => cfg.mlp_widths(2 * h, outputs),
    };
    Mlp::declare(store, "decoder", &widths)
}

/// Applies the decoder: per node for node heads, otherwise on the global
/// latent concatenated with the mean node latent of each graph.
pub(crate) fn decode(
    decoder: &Mlp,
    head: Head,
    tape: &mut Tape,
    bound: &Bound,
    topo: &Topology,
    g: Latents,
) -> Result<Var> {
    match head {
        Head::NodeBinary => decoder.apply(tape, bound, g.nodes),
        Head::GraphClass { .. } | Head::GraphRegress { .. } => {
            let mean = tape.segment_mean(g.nodes, Arc::clone(&topo.node_graph), topo.n_graphs)?;
            decoder.apply_parts(tape, bound, &[Part::Dense(g.globals), Part::Dense(mean)], topo.n_graphs)
        }
    }
}

/// Spectral graph network.
#[derive(Clone, Debug)]
pub struct SpectralGn {
    pub config: ModelConfig,
    pub params: ParamStore,
    pub spatial_encoder: Encoder,
    pub spectral_encoder: Option<Encoder>,
    pub steps: Vec<StepParams>,
    pub decoder: Mlp,
}

impl SpectralGn {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new(config.seed);
        let spatial_encoder =
            Encoder::declare(&mut params, "enc", &config, (config.node_in, config.edge_in, config.global_in))?;
        let spectral_encoder =
            if config.k > 0 { Some(Encoder::declare(&mut params, "spectral_enc", &config, (1, 1, 1))?) } else { None };
        let steps = (0..config.steps)
            .map(|m| {
                let name = if config.share_weights { "step".to_string() } else { format!("step{m}") };
                declare_step(&mut params, &name, &config)
            })
            .collect::<Result<_>>()?;
        let decoder = declare_decoder(&mut params, &config)?;
        Ok(Self { config, params, spatial_encoder, spectral_encoder, steps, decoder })
    }

    /// Encodes both graphs into latents `(G₀, Γ₀)`.
    pub fn encode(&self, tape: &mut Tape, bound: &Bound, batch: &ModelBatch) -> Result<(Latents, Option<Latents>)> {
        let g = self.spatial_encoder.apply(tape, bound, &batch.batch)?;
        let s = match (&self.spectral_encoder, &batch.spectral) {
            (Some(enc), Some(sb)) => Some(enc.apply(tape, bound, &sb.batch)?),
            (None, _) => None,
            (Some(_), None) => return Err(Error::InvalidParameter("batch lacks spectral inputs".into())),
        };
        Ok((g, s))
    }

    /// One coupled step `(G_m, Γ_m) → (G_{m+1}, Γ_{m+1})`.
    pub fn step(
        &self,
        m: usize,
        tape: &mut Tape,
        bound: &Bound,
        batch: &ModelBatch,
        g: Latents,
        s: Option<Latents>,
    ) -> Result<(Latents, Option<Latents>)> {
        let params = &self.steps[m];
        let g_hat = params.spatial.apply(tape, bound, &batch.topo, g)?;
        let (Some((proc, fuse_spectral, fuse_spatial)), Some(s), Some(sb)) = (&params.spectral, s, &batch.spectral)
        else {
            return Ok((g_hat, None));
        };
        let s_hat = proc.apply(tape, bound, &sb.topo, s)?;

        let pooled = tape.eigenpool(g.nodes, &sb.projection)?;
        let spectral_in = tape.concat(&[s_hat.nodes, pooled])?;
        let spectral_nodes = fuse_spectral.apply(tape, bound, spectral_in)?;
        let spectral_nodes = tape.relu(spectral_nodes);

        let spread = tape.eigenbroadcast(s.nodes, &sb.projection)?;
        let spatial_in = tape.concat(&[g_hat.nodes, spread])?;
        let spatial_nodes = fuse_spatial.apply(tape, bound, spatial_in)?;
        let spatial_nodes = tape.relu(spatial_nodes);

        Ok((Latents { nodes: spatial_nodes, ..g_hat }, Some(Latents { nodes: spectral_nodes, ..s_hat })))
    }

    /// Full forward pass on a bound parameter set; returns node logits
    /// (`|V|×1`) or per-graph outputs (`B×out`) depending on the head.
    pub fn forward_bound(&self, tape: &mut Tape, bound: &Bound, batch: &ModelBatch) -> Result<Var> {
        let (mut g, mut s) = self.encode(tape, bound, batch)?;
        for m in 0..self.steps.len() {
            (g, s) = self.step(m, tape, bound, batch, g, s)?;
        }
        decode(&self.decoder, self.config.head, tape, bound, &batch.topo, g)
    }

    pub fn forward(&self, tape: &mut Tape, batch: &ModelBatch) -> Result<(Bound, Var)> {
        let bound = self.params.bind(tape);
        let out = self.forward_bound(tape, &bound, batch)?;
        Ok((bound, out))
    }

    /// Forward pass without keeping the tape.
    pub fn predict(&self, batch: &ModelBatch) -> Result<Matrix> {
        let mut tape = Tape::new();
        let (_, out) = self.forward(&mut tape, batch)?;
        Ok(tape.value(out).clone())
    }

    /// Prepares a graph for this model, computing its basis if needed.
    pub fn prepare(&self, graph: Graph, basis_graph: Option<&Graph>) -> Result<PreparedGraph> {
        PreparedGraph::new(graph, basis_graph, &self.config)
    }
}

/// Plain encode-process-decode GN/GCN stack with no spectral pathway.
#[derive(Clone, Debug)]
pub struct SpatialBaseline {
    pub config: ModelConfig,
    pub params: ParamStore,
    pub encoder: Encoder,
    pub blocks: Vec<Processor>,
    pub decoder: Mlp,
}

impl SpatialBaseline {
    /// Parameter names mirror [`SpectralGn`] so equal seeds give equal weights.
    pub fn new(config: ModelConfig) -> Result<Self> {
        let cfg = ModelConfig { k: 0, threshold: false, ..config };
        cfg.validate()?;
        let mut params = ParamStore::new(cfg.seed);
        let encoder = Encoder::declare(&mut params, "enc", &cfg, (cfg.node_in, cfg.edge_in, cfg.global_in))?;
        let blocks = (0..cfg.steps)
            .map(|m| {
                let name = if cfg.share_weights { "step".to_string() } else { format!("step{m}") };
                declare_spatial(&mut params, &format!("{name}.spatial"), &cfg)
            })
            .collect::<Result<_>>()?;
        let decoder = declare_decoder(&mut params, &cfg)?;
        Ok(Self { config: cfg, params, encoder, blocks, decoder })
    }

    pub fn predict(&self, graphs: &[Graph]) -> Result<Matrix> {
        let batch = disjoint_union(graphs)?;
        let topo = Topology::batched(&batch);
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape);
        let mut g = self.encoder.apply(&mut tape, &bound, &batch)?;
        for block in &self.blocks {
            g = block.apply(&mut tape, &bound, &topo, g)?;
        }
        let out = decode(&self.decoder, self.config.head, &mut tape, &bound, &topo, g)?;
        Ok(tape.value(out).clone())
    }
}
