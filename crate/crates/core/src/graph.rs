//! Graph container, dense adjacency/Laplacian construction, batching by
//! disjoint union, and the JSON-lines interchange format.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A directed graph with node, edge and global features.
///
/// Edges are stored as parallel `senders` / `receivers` arrays with one row
/// of `edge_feats` per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    node_feats: Matrix,
    senders: Vec<usize>,
    receivers: Vec<usize>,
    edge_feats: Matrix,
    global_feats: Vec<f64>,
    positions: Option<Vec<[f64; 2]>>,
}

impl Graph {
    pub fn new(
        node_feats: Matrix,
        senders: Vec<usize>,
        receivers: Vec<usize>,
        edge_feats: Matrix,
        global_feats: Vec<f64>,
    ) -> Result<Self> {
        let n = node_feats.rows();
        if senders.len() != receivers.len() || senders.len() != edge_feats.rows() {
            return Err(Error::InvalidGraph(format!(
                "{} senders, {} receivers, {} edge feature rows",
                senders.len(),
                receivers.len(),
                edge_feats.rows()
            )));
        }
        if let Some(&bad) = senders.iter().chain(&receivers).find(|&&v| v >= n) {
            return Err(Error::InvalidGraph(format!("vertex index {bad} out of range for {n} vertices")));
        }
        Ok(Self { node_feats, senders, receivers, edge_feats, global_feats, positions: None })
    }

    /// Graph with the given topology and zero-width features.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let (s, r): (Vec<_>, Vec<_>) = edges.iter().copied().unzip();
        Self::new(Matrix::zeros(n, 0), s, r, Matrix::zeros(edges.len(), 0), Vec::new())
    }

    /// Symmetric graph with both directions of every listed pair.
    pub fn undirected(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let edges: Vec<_> = pairs.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
        Self::from_edges(n, &edges)
    }

    pub fn with_positions(mut self, positions: Vec<[f64; 2]>) -> Result<Self> {
        if positions.len() != self.n_nodes() {
            return Err(Error::InvalidGraph(format!(
                "{} positions for {} vertices",
                positions.len(),
                self.n_nodes()
            )));
        }
        self.positions = Some(positions);
        Ok(self)
    }

    pub fn with_node_feats(mut self, node_feats: Matrix) -> Result<Self> {
        if node_feats.rows() != self.n_nodes() {
            return Err(Error::InvalidGraph("node feature rows differ from vertex count".into()));
        }
        self.node_feats = node_feats;
        Ok(self)
    }

    pub fn with_edge_feats(mut self, edge_feats: Matrix) -> Result<Self> {
        if edge_feats.rows() != self.n_edges() {
            return Err(Error::InvalidGraph("edge feature rows differ from edge count".into()));
        }
        self.edge_feats = edge_feats;
        Ok(self)
    }

    pub fn with_global_feats(mut self, global_feats: Vec<f64>) -> Self {
        self.global_feats = global_feats;
        self
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.node_feats.rows()
    }

    #[inline]
    pub fn n_edges(&self) -> usize {
        self.senders.len()
    }

    pub fn node_feats(&self) -> &Matrix {
        &self.node_feats
    }

    pub fn edge_feats(&self) -> &Matrix {
        &self.edge_feats
    }

    pub fn global_feats(&self) -> &[f64] {
        &self.global_feats
    }

    pub fn senders(&self) -> &[usize] {
        &self.senders
    }

    pub fn receivers(&self) -> &[usize] {
        &self.receivers
    }

    pub fn positions(&self) -> Option<&[[f64; 2]]> {
        self.positions.as_deref()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.senders.iter().copied().zip(self.receivers.iter().copied())
    }

    /// Feature widths `(d_v, d_e, d_g)`.
    pub fn widths(&self) -> (usize, usize, usize) {
        (self.node_feats.cols(), self.edge_feats.cols(), self.global_feats.len())
    }

    /// Dense binary adjacency: `A[i][j] = 1` iff some edge has sender `i` and
    /// receiver `j`.
    pub fn adjacency(&self) -> Matrix {
        let n = self.n_nodes();
        let mut a = Matrix::zeros(n, n);
        for (s, r) in self.edges() {
            a[(s, r)] = 1.0;
        }
        a
    }

    /// Checks the edge set has no self-loops and contains the reverse of every edge.
    pub fn check_simple_symmetric(&self) -> Result<()> {
        if let Some((s, _)) = self.edges().find(|(s, r)| s == r) {
            return Err(Error::SelfLoop(s));
        }
        self.check_symmetric()
    }

    pub fn check_symmetric(&self) -> Result<()> {
        let set: HashSet<(usize, usize)> = self.edges().collect();
        match set.iter().find(|&&(s, r)| !set.contains(&(r, s))) {
            Some(&(sender, receiver)) => Err(Error::NonSymmetricGraph { sender, receiver }),
            None => Ok(()),
        }
    }

    /// Combinatorial Laplacian `L = D - A`.
    pub fn laplacian(&self) -> Result<Matrix> {
        self.check_simple_symmetric()?;
        let mut l = self.adjacency().map(|x| -x);
        for i in 0..self.n_nodes() {
            let deg: f64 = -l.row(i).iter().sum::<f64>();
            l[(i, i)] = deg;
        }
        Ok(l)
    }

    /// Sorted, deduplicated out-neighbour lists.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes()];
        for (s, r) in self.edges() {
            adj[s].push(r);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Undirected vertex pairs `(lo, hi)` in first-seen order.
    pub fn undirected_pairs(&self) -> Vec<(usize, usize)> {
        let mut seen = HashSet::new();
        self.edges()
            .filter(|(s, r)| s != r)
            .map(|(s, r)| (s.min(r), s.max(r)))
            .filter(|p| seen.insert(*p))
            .collect()
    }

    pub fn connected_components(&self) -> usize {
        let adj = self.neighbors();
        let mut seen = vec![false; self.n_nodes()];
        let mut count = 0;
        for start in 0..self.n_nodes() {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components() <= 1
    }

    /// Keeps the vertices flagged in `keep`, compacting indices and dropping
    /// every edge with a removed endpoint.
    pub fn induced_subgraph(&self, keep: &[bool]) -> Graph {
        let mut remap = vec![usize::MAX; self.n_nodes()];
        let mut next = 0;
        for (i, &k) in keep.iter().enumerate() {
            if k {
                remap[i] = next;
                next += 1;
            }
        }
        let kept_nodes: Vec<usize> = (0..self.n_nodes()).filter(|&i| keep[i]).collect();
        let node_feats = select_rows(&self.node_feats, &kept_nodes);
        let kept_edges: Vec<usize> =
            (0..self.n_edges()).filter(|&k| keep[self.senders[k]] && keep[self.receivers[k]]).collect();
        Graph {
            node_feats,
            senders: kept_edges.iter().map(|&k| remap[self.senders[k]]).collect(),
            receivers: kept_edges.iter().map(|&k| remap[self.receivers[k]]).collect(),
            edge_feats: select_rows(&self.edge_feats, &kept_edges),
            global_feats: self.global_feats.clone(),
            positions: self.positions.as_ref().map(|p| kept_nodes.iter().map(|&i| p[i]).collect()),
        }
    }

    /// Keeps the edges flagged in `keep`; vertices are untouched.
    pub fn retain_edges(&self, keep: &[bool]) -> Graph {
        let kept: Vec<usize> = (0..self.n_edges()).filter(|&k| keep[k]).collect();
        Graph {
            node_feats: self.node_feats.clone(),
            senders: kept.iter().map(|&k| self.senders[k]).collect(),
            receivers: kept.iter().map(|&k| self.receivers[k]).collect(),
            edge_feats: select_rows(&self.edge_feats, &kept),
            global_feats: self.global_feats.clone(),
            positions: self.positions.clone(),
        }
    }
}

pub(crate) fn select_rows(m: &Matrix, rows: &[usize]) -> Matrix {
    let mut data = Vec::with_capacity(rows.len() * m.cols());
    for &r in rows {
        data.extend_from_slice(m.row(r));
    }
    Matrix::from_vec(rows.len(), m.cols(), data).expect("row selection preserves shape")
}

/// Breadth-first hop distances from `source`; `None` marks unreachable vertices.
pub fn bfs_distances(adj: &[Vec<usize>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap() + 1;
        for &w in &adj[v] {
            if dist[w].is_none() {
                dist[w] = Some(d);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Several graphs merged into one with offset indices and no cross-graph edges.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchedGraph {
    pub graph: Graph,
    /// Graph id of every node.
    pub node_graph: Vec<usize>,
    /// Graph id of every edge.
    pub edge_graph: Vec<usize>,
    /// `node_offsets[b]..node_offsets[b + 1]` are the nodes of graph `b`.
    pub node_offsets: Vec<usize>,
    pub edge_offsets: Vec<usize>,
    /// Row `b` holds the global features of graph `b`.
    pub globals: Matrix,
}

impl BatchedGraph {
    pub fn n_graphs(&self) -> usize {
        self.node_offsets.len() - 1
    }

    pub fn unbatch(&self) -> Vec<Graph> {
        let g = &self.graph;
        (0..self.n_graphs())
            .map(|b| {
                let (n0, n1) = (self.node_offsets[b], self.node_offsets[b + 1]);
                let (e0, e1) = (self.edge_offsets[b], self.edge_offsets[b + 1]);
                Graph {
                    node_feats: g.node_feats.slice_rows(n0, n1),
                    senders: g.senders[e0..e1].iter().map(|s| s - n0).collect(),
                    receivers: g.receivers[e0..e1].iter().map(|r| r - n0).collect(),
                    edge_feats: g.edge_feats.slice_rows(e0, e1),
                    global_feats: self.globals.row(b).to_vec(),
                    positions: g.positions.as_ref().map(|p| p[n0..n1].to_vec()),
                }
            })
            .collect()
    }
}

/// Disjoint union of graphs sharing feature widths.
pub fn disjoint_union(graphs: &[Graph]) -> Result<BatchedGraph> {
    let widths = graphs.first().map_or((0, 0, 0), Graph::widths);
    if let Some(g) = graphs.iter().find(|g| g.widths() != widths) {
        return Err(Error::WidthMismatch(format!("widths {:?} vs {:?}", g.widths(), widths)));
    }
    let mut node_offsets = vec![0];
    let mut edge_offsets = vec![0];
    let mut senders = Vec::new();
    let mut receivers = Vec::new();
    let mut node_graph = Vec::new();
    let mut edge_graph = Vec::new();
    let mut globals = Vec::new();
    for (b, g) in graphs.iter().enumerate() {
        let base = *node_offsets.last().unwrap();
        senders.extend(g.senders.iter().map(|s| s + base));
        receivers.extend(g.receivers.iter().map(|r| r + base));
        node_graph.extend(std::iter::repeat(b).take(g.n_nodes()));
        edge_graph.extend(std::iter::repeat(b).take(g.n_edges()));
        globals.extend_from_slice(&g.global_feats);
        node_offsets.push(base + g.n_nodes());
        edge_offsets.push(edge_offsets.last().unwrap() + g.n_edges());
    }
    let node_feats = Matrix::vstack(&graphs.iter().map(|g| &g.node_feats).collect::<Vec<_>>(), widths.0)?;
    let edge_feats = Matrix::vstack(&graphs.iter().map(|g| &g.edge_feats).collect::<Vec<_>>(), widths.1)?;
    let positions = if !graphs.is_empty() && graphs.iter().all(|g| g.positions.is_some()) {
        Some(graphs.iter().flat_map(|g| g.positions.clone().unwrap()).collect())
    } else {
        None
    };
    Ok(BatchedGraph {
        graph: Graph {
            node_feats,
            senders,
            receivers,
            edge_feats,
            global_feats: Vec::new(),
            positions,
        },
        node_graph,
        edge_graph,
        node_offsets,
        edge_offsets,
        globals: Matrix::from_vec(graphs.len(), widths.2, globals)?,
    })
}

/// Supervision attached to a graph in the JSON-lines format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    /// Graph classification target.
    Class(usize),
    /// Per-vertex binary targets plus the query pair that produced them, if any.
    Nodes { values: Vec<u8>, pair: Option<(usize, usize)> },
    /// Graph-level regression target.
    Target(Vec<f64>),
}

/// One line of the JSON-lines dataset format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphLine {
    pub n: usize,
    pub nf: Vec<Vec<f64>>,
    pub edges: Vec<[usize; 2]>,
    pub ef: Vec<Vec<f64>>,
    pub g: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Label>,
    /// Feature widths, needed to round-trip graphs with no vertices or edges.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub widths: Option<[usize; 2]>,
}

impl GraphLine {
    pub fn from_graph(g: &Graph, labels: Option<Label>) -> Self {
        let (dv, de, _) = g.widths();
        let needs_widths = (g.n_nodes() == 0 && dv > 0) || (g.n_edges() == 0 && de > 0);
        GraphLine {
            n: g.n_nodes(),
            nf: g.node_feats.to_rows(),
            edges: g.edges().map(|(s, r)| [s, r]).collect(),
            ef: g.edge_feats.to_rows(),
            g: g.global_feats.clone(),
            pos: g.positions.clone(),
            labels,
            widths: needs_widths.then_some([dv, de]),
        }
    }

    pub fn to_graph(&self) -> Result<Graph> {
        let [dv, de] = self.widths.unwrap_or([0, 0]);
        let nf = if self.nf.is_empty() && self.n > 0 {
            Matrix::zeros(self.n, 0)
        } else {
            Matrix::from_rows(&self.nf, dv)?
        };
        if nf.rows() != self.n {
            return Err(Error::InvalidGraph(format!("n = {} but {} feature rows", self.n, nf.rows())));
        }
        let ef = if self.ef.is_empty() && !self.edges.is_empty() {
            Matrix::zeros(self.edges.len(), 0)
        } else {
            Matrix::from_rows(&self.ef, de)?
        };
        let g = Graph::new(
            nf,
            self.edges.iter().map(|e| e[0]).collect(),
            self.edges.iter().map(|e| e[1]).collect(),
            ef,
            self.g.clone(),
        )?;
        match &self.pos {
            Some(p) => g.with_positions(p.clone()),
            None => Ok(g),
        }
    }
}
