//! Learned graph blocks: the GN block, the GCN layer and the GFT block.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BatchedGraph, Graph};
use crate::nn::{Bound, Linear, Mlp, ParamStore, Part, Tape, Var};

/// Edge structure of a (possibly batched) graph in tape-friendly form.
#[derive(Clone, Debug)]
pub struct Topology {
    pub n_nodes: usize,
    pub n_graphs: usize,
    pub senders: Arc<[usize]>,
    pub receivers: Arc<[usize]>,
    pub node_graph: Arc<[usize]>,
    pub edge_graph: Arc<[usize]>,
    gcn: std::result::Result<GcnNorm, (usize, usize)>,
}

/// Symmetric-normalised propagation `D̃^{-1/2}(A+I)D̃^{-1/2}` as weighted edges.
#[derive(Clone, Debug)]
struct GcnNorm {
    senders: Arc<[usize]>,
    receivers: Arc<[usize]>,
    weights: Arc<[f64]>,
}

impl GcnNorm {
    fn build(n: usize, senders: &[usize], receivers: &[usize]) -> std::result::Result<Self, (usize, usize)> {
        let set: HashSet<(usize, usize)> =
            senders.iter().copied().zip(receivers.iter().copied()).filter(|(s, r)| s != r).collect();
        let mut pairs: Vec<(usize, usize)> = set.iter().copied().collect();
        pairs.sort_unstable();
        if let Some(&(s, r)) = pairs.iter().find(|&&(s, r)| !set.contains(&(r, s))) {
            return Err((s, r));
        }
        let mut deg = vec![1.0f64; n];
        for &(_, r) in &pairs {
            deg[r] += 1.0;
        }
        let mut s_out = Vec::with_capacity(pairs.len() + n);
        let mut r_out = Vec::with_capacity(pairs.len() + n);
        let mut w_out = Vec::with_capacity(pairs.len() + n);
        for (i, &d) in deg.iter().enumerate() {
            s_out.push(i);
            r_out.push(i);
            w_out.push(1.0 / d);
        }
        for (s, r) in pairs {
            s_out.push(s);
            r_out.push(r);
            w_out.push(1.0 / (deg[s] * deg[r]).sqrt());
        }
        Ok(Self { senders: s_out.into(), receivers: r_out.into(), weights: w_out.into() })
    }
}

impl Topology {
    pub fn new(
        n_nodes: usize,
        senders: Vec<usize>,
        receivers: Vec<usize>,
        node_graph: Vec<usize>,
        edge_graph: Vec<usize>,
        n_graphs: usize,
    ) -> Result<Self> {
        if senders.len() != receivers.len() || senders.len() != edge_graph.len() || node_graph.len() != n_nodes {
            return Err(Error::ShapeMismatch("inconsistent topology arrays".into()));
        }
        if let Some(&bad) = senders.iter().chain(&receivers).find(|&&v| v >= n_nodes) {
            return Err(Error::InvalidGraph(format!("vertex {bad} out of range")));
        }
        if let Some(&bad) = node_graph.iter().chain(&edge_graph).find(|&&b| b >= n_graphs) {
            return Err(Error::SegmentIdOutOfRange { id: bad, segments: n_graphs });
        }
        let gcn = GcnNorm::build(n_nodes, &senders, &receivers);
        Ok(Self {
            n_nodes,
            n_graphs,
            senders: senders.into(),
            receivers: receivers.into(),
            node_graph: node_graph.into(),
            edge_graph: edge_graph.into(),
            gcn,
        })
    }

    pub fn single(g: &Graph) -> Self {
        Self::new(
            g.n_nodes(),
            g.senders().to_vec(),
            g.receivers().to_vec(),
            vec![0; g.n_nodes()],
            vec![0; g.n_edges()],
            1,
        )
        .expect("a valid graph has a valid topology")
    }

    pub fn batched(b: &BatchedGraph) -> Self {
        Self::new(
            b.graph.n_nodes(),
            b.graph.senders().to_vec(),
            b.graph.receivers().to_vec(),
            b.node_graph.clone(),
            b.edge_graph.clone(),
            b.n_graphs(),
        )
        .expect("a valid batch has a valid topology")
    }

    pub fn n_edges(&self) -> usize {
        self.senders.len()
    }
}

/// Node, edge and global latents of a (batched) graph on the tape.
#[derive(Clone, Copy, Debug)]
pub struct Latents {
    pub nodes: Var,
    pub edges: Var,
    pub globals: Var,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Sum,
    Mean,
}

/// Latent widths `(node, edge, global)`.
pub type Widths = (usize, usize, usize);

/// GN block with edge, node and (optionally) global update functions.
#[derive(Clone, Debug, PartialEq)]
pub struct GnBlock {
    pub edge: Mlp,
    pub node: Mlp,
    pub global: Option<Mlp>,
    pub aggregation: Aggregation,
}

impl GnBlock {
    /// `hidden` lists the hidden widths of every update MLP.
    pub fn declare(
        store: &mut ParamStore,
        name: &str,
        input: Widths,
        output: Widths,
        hidden: &[usize],
        aggregation: Aggregation,
        global_term: bool,
    ) -> Result<Self> {
        let (dv, de, dg) = input;
        let (ov, oe, og) = output;
        let g_in = if global_term { dg } else { 0 };
        let widths = |d_in: usize, d_out: usize| -> Vec<usize> {
            std::iter::once(d_in).chain(hidden.iter().copied()).chain(std::iter::once(d_out)).collect()
        };
        let edge = Mlp::declare(store, &format!("{name}.edge"), &widths(de + 2 * dv + g_in, oe))?;
        let node = Mlp::declare(store, &format!("{name}.node"), &widths(dv + oe + g_in, ov))?;
        let global = if global_term {
            Some(Mlp::declare(store, &format!("{name}.global"), &widths(dg + ov + oe, og))?)
        } else {
            None
        };
        Ok(Self { edge, node, global, aggregation })
    }

    pub fn apply(&self, tape: &mut Tape, bound: &Bound, topo: &Topology, x: Latents) -> Result<Latents> {
        let n_edges = topo.n_edges();
        let mut edge_parts = vec![
            Part::Dense(x.edges),
            Part::Gathered(x.nodes, Arc::clone(&topo.senders)),
            Part::Gathered(x.nodes, Arc::clone(&topo.receivers)),
        ];
        if self.global.is_some() {
            edge_parts.push(Part::Gathered(x.globals, Arc::clone(&topo.edge_graph)));
        }
        let edges = self.edge.apply_parts(tape, bound, &edge_parts, n_edges)?;

        let aggregated = match self.aggregation {
            Aggregation::Sum => tape.segment_sum(edges, Arc::clone(&topo.receivers), topo.n_nodes)?,
            Aggregation::Mean => tape.segment_mean(edges, Arc::clone(&topo.receivers), topo.n_nodes)?,
        };
        let mut node_parts = vec![Part::Dense(x.nodes), Part::Dense(aggregated)];
        if self.global.is_some() {
            node_parts.push(Part::Gathered(x.globals, Arc::clone(&topo.node_graph)));
        }
        let nodes = self.node.apply_parts(tape, bound, &node_parts, topo.n_nodes)?;

        let globals = match &self.global {
            Some(phi) => {
                let node_mean = tape.segment_mean(nodes, Arc::clone(&topo.node_graph), topo.n_graphs)?;
                let edge_mean = tape.segment_mean(edges, Arc::clone(&topo.edge_graph), topo.n_graphs)?;
                phi.apply_parts(
                    tape,
                    bound,
                    &[Part::Dense(x.globals), Part::Dense(node_mean), Part::Dense(edge_mean)],
                    topo.n_graphs,
                )?
            }
            None => x.globals,
        };
        Ok(Latents { nodes, edges, globals })
    }
}

/// `X′ = act(D̃^{-1/2}(A+I)D̃^{-1/2}·X·W + b)`; edges and globals pass through.
#[derive(Clone, Debug, PartialEq)]
pub struct GcnLayer {
    pub linear: Linear,
    pub relu: bool,
}

impl GcnLayer {
    pub fn declare(store: &mut ParamStore, name: &str, d_in: usize, d_out: usize) -> Result<Self> {
        Ok(Self { linear: Linear::declare(store, name, d_in, d_out)?, relu: true })
    }

    pub fn apply_nodes(&self, tape: &mut Tape, bound: &Bound, topo: &Topology, nodes: Var) -> Result<Var> {
        let norm = topo
            .gcn
            .as_ref()
            .map_err(|&(sender, receiver)| Error::NonSymmetricGraph { sender, receiver })?;
        let xw = tape.matmul(nodes, bound.var(self.linear.weight))?;
        let msgs = tape.gather(xw, Arc::clone(&norm.senders))?;
        let msgs = tape.scale_rows(msgs, Arc::clone(&norm.weights))?;
        let agg = tape.segment_sum(msgs, Arc::clone(&norm.receivers), topo.n_nodes)?;
        let out = tape.add_bias(agg, bound.var(self.linear.bias))?;
        Ok(if self.relu { tape.relu(out) } else { out })
    }
}

/// MLP over the eigenvalue-ordered spectral latents of each graph, flattened.
#[derive(Clone, Debug, PartialEq)]
pub struct GftBlock {
    pub mlp: Mlp,
    pub rows: usize,
    pub d_out: usize,
}

impl GftBlock {
    pub fn declare(
        store: &mut ParamStore,
        name: &str,
        rows: usize,
        d_in: usize,
        d_out: usize,
        hidden: &[usize],
    ) -> Result<Self> {
        let widths: Vec<usize> = std::iter::once(rows * d_in)
            .chain(hidden.iter().copied())
            .chain(std::iter::once(rows * d_out))
            .collect();
        Ok(Self { mlp: Mlp::declare(store, &format!("{name}.gft"), &widths)?, rows, d_out })
    }

    /// `nodes` holds `rows` consecutive spectral vertices per graph.
    pub fn apply_nodes(&self, tape: &mut Tape, bound: &Bound, nodes: Var) -> Result<Var> {
        let (n, d) = tape.shape(nodes);
        if self.rows == 0 || n % self.rows != 0 || self.rows * d != self.mlp.d_in() {
            return Err(Error::ShapeMismatch(format!(
                "GFT block over {} rows of width {}, got {n}x{d}",
                self.rows,
                self.mlp.d_in() / self.rows.max(1)
            )));
        }
        let graphs = n / self.rows;
        let flat = tape.reshape(nodes, graphs, self.rows * d)?;
        let out = self.mlp.apply(tape, bound, flat)?;
        tape.reshape(out, graphs * self.rows, self.d_out)
    }
}

/// One message-passing pathway.
#[derive(Clone, Debug, PartialEq)]
pub enum Processor {
    Gn(GnBlock),
    Gcn(GcnLayer),
    Gft(GftBlock),
    /// Per-node MLP with no edge or global pooling.
    NodeOnly(Mlp),
}

impl Processor {
    pub fn apply(&self, tape: &mut Tape, bound: &Bound, topo: &Topology, x: Latents) -> Result<Latents> {
        let nodes = match self {
            Processor::Gn(block) => return block.apply(tape, bound, topo, x),
            Processor::Gcn(layer) => layer.apply_nodes(tape, bound, topo, x.nodes)?,
            Processor::Gft(block) => block.apply_nodes(tape, bound, x.nodes)?,
            Processor::NodeOnly(mlp) => mlp.apply(tape, bound, x.nodes)?,
        };
        Ok(Latents { nodes, ..x })
    }
}
