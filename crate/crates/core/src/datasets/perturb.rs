//! Vertex and edge perturbations.

use std::collections::{HashSet, VecDeque};

use crate::datasets::{LabeledSample, Rng};
use crate::error::{Error, Result};
use crate::graph::{Graph, Label};

/// Retries for a connected vertex pair before a shortest-path removal is skipped.
pub const PAIR_RETRIES: usize = 10;

/// Keeps the vertices flagged in `keep`, remapping per-vertex labels.
pub fn remove_vertices(sample: &LabeledSample, keep: &[bool]) -> Result<LabeledSample> {
    if keep.len() != sample.graph.n_nodes() {
        return Err(Error::ShapeMismatch(format!(
            "keep mask has {} entries for {} vertices",
            keep.len(),
            sample.graph.n_nodes()
        )));
    }
    if !keep.iter().any(|&k| k) {
        return Err(Error::EmptyGraph);
    }
    let graph = sample.graph.induced_subgraph(keep);
    let label = match &sample.label {
        Label::Nodes { values, pair } => {
            let mut remap = vec![None; keep.len()];
            let mut next = 0;
            for (v, &k) in keep.iter().enumerate() {
                if k {
                    remap[v] = Some(next);
                    next += 1;
                }
            }
            let pair = pair.and_then(|(s, t)| Some((remap[s]?, remap[t]?)));
            let values = values.iter().zip(keep).filter(|(_, &k)| k).map(|(&y, _)| y).collect();
            Label::Nodes { values, pair }
        }
        other => other.clone(),
    };
    Ok(LabeledSample { graph, label, meta: sample.meta.clone() })
}

/// Removes each vertex independently with probability `p`.
pub fn uniform_vertex_dropout(sample: &LabeledSample, p: f64, rng: &mut Rng) -> Result<LabeledSample> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("dropout probability must be in [0, 1), got {p}")));
    }
    let keep: Vec<bool> = (0..sample.graph.n_nodes()).map(|_| !rng.bernoulli(p)).collect();
    remove_vertices(sample, &keep)
}

/// One shortest path from `s` to `t` over the vertices flagged `alive`.
///
/// Breadth-first search from `s` visits neighbours in increasing index order
/// and each vertex keeps the first parent that reached it.
pub fn bfs_path(adj: &[Vec<usize>], alive: &[bool], s: usize, t: usize) -> Option<Vec<usize>> {
    let mut parent = vec![usize::MAX; adj.len()];
    parent[s] = s;
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        if v == t {
            break;
        }
        for &w in &adj[v] {
            if alive[w] && parent[w] == usize::MAX {
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    if parent[t] == usize::MAX {
        return None;
    }
    let mut path = vec![t];
    let mut v = t;
    while v != s {
        v = parent[v];
        path.push(v);
    }
    path.reverse();
    Some(path)
}

/// Removes every vertex, endpoints included, along `n_paths` shortest paths
/// between random pairs of surviving vertices.
///
/// A draw whose pair is disconnected is retried up to [`PAIR_RETRIES`] times,
/// after which that removal is skipped.
pub fn shortest_path_vertex_dropout(sample: &LabeledSample, n_paths: usize, rng: &mut Rng) -> Result<LabeledSample> {
    let n = sample.graph.n_nodes();
    let adj = sample.graph.neighbors();
    let mut alive = vec![true; n];
    for _ in 0..n_paths {
        let survivors: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
        if survivors.len() < 2 {
            break;
        }
        for _ in 0..PAIR_RETRIES {
            let (a, b) = rng.distinct_pair(survivors.len());
            if let Some(path) = bfs_path(&adj, &alive, survivors[a], survivors[b]) {
                for v in path {
                    alive[v] = false;
                }
                break;
            }
        }
    }
    remove_vertices(sample, &alive)
}

/// Removes `⌊fraction · pairs⌋` undirected edge pairs chosen uniformly at random.
pub fn edge_dropout(g: &Graph, fraction: f64, rng: &mut Rng) -> Result<Graph> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!("edge dropout fraction must be in [0, 1], got {fraction}")));
    }
    let mut pairs = g.undirected_pairs();
    let drop = (fraction * pairs.len() as f64).floor() as usize;
    rng.shuffle(&mut pairs);
    let removed: HashSet<(usize, usize)> = pairs[..drop].iter().copied().collect();
    let keep: Vec<bool> = g.edges().map(|(s, r)| !removed.contains(&(s.min(r), s.max(r)))).collect();
    Ok(g.retain_edges(&keep))
}

/// Diameter in hops; `None` when the graph is disconnected or empty.
pub fn diameter(g: &Graph) -> Option<usize> {
    let adj = g.neighbors();
    let mut best = 0;
    for s in 0..g.n_nodes() {
        for d in crate::graph::bfs_distances(&adj, s) {
            best = best.max(d?);
        }
    }
    (g.n_nodes() > 0).then_some(best)
}
