//! Shortest-path vertex labelling.

use crate::datasets::Rng;
use crate::error::{Error, Result};
use crate::graph::{bfs_distances, Graph};
use crate::matrix::Matrix;

const MAX_PAIR_DRAWS: usize = 100;

/// 1 for every vertex on at least one shortest `s`–`t` path.
///
/// A vertex lies on such a path exactly when `d(s, v) + d(v, t) = d(s, t)`.
pub fn on_shortest_path(adj: &[Vec<usize>], s: usize, t: usize) -> Option<Vec<u8>> {
    let ds = bfs_distances(adj, s);
    let dt = bfs_distances(adj, t);
    let total = ds[t]?;
    Some(
        ds.iter()
            .zip(&dt)
            .map(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => u8::from(a + b == total),
                _ => 0,
            })
            .collect(),
    )
}

/// Appends two indicator channels marking `s` and `t` to the node features.
pub fn mark_endpoints(g: &Graph, s: usize, t: usize) -> Result<Graph> {
    let n = g.n_nodes();
    let old = g.node_feats();
    let d = old.cols();
    let mut data = Vec::with_capacity(n * (d + 2));
    for v in 0..n {
        data.extend_from_slice(old.row(v));
        data.push(f64::from(u8::from(v == s)));
        data.push(f64::from(u8::from(v == t)));
    }
    g.clone().with_node_feats(Matrix::from_vec(n, d + 2, data)?)
}

/// Labels for a fixed query pair, with the endpoint channels appended.
pub fn shortest_path_labels_for(g: &Graph, s: usize, t: usize) -> Result<(Graph, Vec<u8>)> {
    if s == t || s >= g.n_nodes() || t >= g.n_nodes() {
        return Err(Error::InvalidParameter(format!("bad query pair ({s}, {t})")));
    }
    let labels = on_shortest_path(&g.neighbors(), s, t).ok_or(Error::DisconnectedPair(1))?;
    Ok((mark_endpoints(g, s, t)?, labels))
}

/// Draws a connected pair `(s, t)` uniformly and labels the union of all
/// shortest paths between them.
pub fn shortest_path_labels(g: &Graph, rng: &mut Rng) -> Result<(Graph, Vec<u8>, (usize, usize))> {
    if g.n_nodes() < 2 {
        return Err(Error::InvalidParameter("shortest-path task needs two vertices".into()));
    }
    let adj = g.neighbors();
    for _ in 0..MAX_PAIR_DRAWS {
        let (s, t) = rng.distinct_pair(g.n_nodes());
        if let Some(labels) = on_shortest_path(&adj, s, t) {
            return Ok((mark_endpoints(g, s, t)?, labels, (s, t)));
        }
    }
    Err(Error::DisconnectedPair(MAX_PAIR_DRAWS))
}
