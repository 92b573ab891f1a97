//! Random graph families and the pixel-grid graph.

use crate::datasets::delaunay::{triangle_edges, triangulate};
use crate::datasets::Rng;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;

/// Points are drawn on a `2^20` integer grid and scaled into the unit square.
pub const DELAUNAY_GRID_BITS: u32 = 20;
const MAX_REDRAWS: usize = 100;

/// Symmetric graph whose edges carry the displacement `pos[receiver] - pos[sender]`.
pub fn geometric_graph(positions: Vec<[f64; 2]>, pairs: &[(usize, usize)]) -> Result<Graph> {
    let n = positions.len();
    let mut senders = Vec::with_capacity(2 * pairs.len());
    let mut receivers = Vec::with_capacity(2 * pairs.len());
    let mut feats = Vec::with_capacity(4 * pairs.len());
    for &(a, b) in pairs {
        for (s, r) in [(a, b), (b, a)] {
            senders.push(s);
            receivers.push(r);
            feats.push(positions[r][0] - positions[s][0]);
            feats.push(positions[r][1] - positions[s][1]);
        }
    }
    let ef = Matrix::from_vec(senders.len(), 2, feats)?;
    Graph::new(Matrix::zeros(n, 0), senders, receivers, ef, Vec::new())?.with_positions(positions)
}

/// Delaunay graph of `n` points uniform in the unit square.
///
/// Points sit on a `2^20` grid so predicates are exact; draws with duplicate
/// points or all-collinear points are redrawn.
pub fn delaunay2d(n: usize, rng: &mut Rng) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("Delaunay graph needs n >= 3, got {n}")));
    }
    let side = 1i64 << DELAUNAY_GRID_BITS;
    for _ in 0..MAX_REDRAWS {
        let pts: Vec<[i64; 2]> = (0..n).map(|_| [rng.int_in(0, side), rng.int_in(0, side)]).collect();
        let tris = match triangulate(&pts) {
            Ok(t) => t,
            Err(Error::DegenerateInput(_)) => continue,
            Err(e) => return Err(e),
        };
        let positions = pts.iter().map(|p| [p[0] as f64 / side as f64, p[1] as f64 / side as f64]).collect();
        return geometric_graph(positions, &triangle_edges(&tris));
    }
    Err(Error::DegenerateInput(format!("no non-degenerate point set after {MAX_REDRAWS} draws")))
}

/// Preferential-attachment tree: each new vertex links to one existing vertex
/// chosen with probability proportional to its degree.
pub fn barabasi_albert_tree(n: usize, rng: &mut Rng) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("tree needs n >= 2, got {n}")));
    }
    let mut pairs = vec![(0, 1)];
    // Every vertex appears once per incident edge.
    let mut endpoints = vec![0, 1];
    for v in 2..n {
        let target = endpoints[rng.below(endpoints.len())];
        pairs.push((target, v));
        endpoints.push(target);
        endpoints.push(v);
    }
    Graph::undirected(n, &pairs)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PartitionParams {
    pub clusters: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Attempts at drawing a connected graph; 1 disables resampling.
    pub max_tries: usize,
}

impl PartitionParams {
    /// Defaults giving roughly six intra-cluster neighbours per vertex and
    /// about `3n/8` inter-cluster edges.
    pub fn for_size(n: usize) -> Self {
        let cluster = (n / 4).max(2);
        let p_in = (6.0 / (cluster - 1) as f64).min(1.0);
        let p_out = (1.0 / n as f64).min(p_in / 2.0);
        Self { clusters: 4, p_in, p_out, max_tries: 100 }
    }
}

/// Cluster id of every vertex when `n` vertices are split evenly.
pub fn partition_clusters(n: usize, clusters: usize) -> Vec<usize> {
    let base = n / clusters;
    let extra = n % clusters;
    (0..clusters).flat_map(|c| std::iter::repeat(c).take(base + usize::from(c < extra))).collect()
}

/// Random partition graph, redrawn until connected.
pub fn random_partition_graph(n: usize, params: PartitionParams, rng: &mut Rng) -> Result<Graph> {
    let PartitionParams { clusters, p_in, p_out, max_tries } = params;
    if clusters == 0 || n < clusters {
        return Err(Error::InvalidParameter(format!("{n} vertices cannot form {clusters} clusters")));
    }
    if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) || p_out > p_in {
        return Err(Error::InvalidParameter(format!("need 0 <= p_out <= p_in <= 1, got {p_out}, {p_in}")));
    }
    let cluster = partition_clusters(n, clusters);
    for _ in 0..max_tries.max(1) {
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let p = if cluster[i] == cluster[j] { p_in } else { p_out };
                if rng.bernoulli(p) {
                    pairs.push((i, j));
                }
            }
        }
        let g = Graph::undirected(n, &pairs)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::ConnectivityFailure(max_tries.max(1)))
}

/// `rows×cols` pixel grid with four-neighbour edges. Vertex `r·cols + c`
/// sits at `(x, y) = (c, r)`; edges carry the displacement in grid units.
pub fn grid_graph(rows: usize, cols: usize) -> Graph {
    let mut pairs = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                pairs.push((v, v + 1));
            }
            if r + 1 < rows {
                pairs.push((v, v + cols));
            }
        }
    }
    let positions = (0..rows * cols).map(|v| [(v % cols) as f64, (v / cols) as f64]).collect();
    geometric_graph(positions, &pairs).expect("grid indices are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ba_tree_basics() {
        let mut rng = Rng::new(3);
        let g = barabasi_albert_tree(2, &mut rng).unwrap();
        assert_eq!(g.undirected_pairs(), vec![(0, 1)]);
        let g = barabasi_albert_tree(50, &mut rng).unwrap();
        assert_eq!(g.undirected_pairs().len(), 49);
        assert!(g.is_connected());
        assert!(barabasi_albert_tree(1, &mut rng).is_err());
    }

    #[test]
    fn partition_extremes() {
        let mut rng = Rng::new(4);
        let complete = random_partition_graph(
            12,
            PartitionParams { clusters: 4, p_in: 1.0, p_out: 1.0, max_tries: 1 },
            &mut rng,
        )
        .unwrap();
        assert_eq!(complete.undirected_pairs().len(), 66);
        let cliques =
            random_partition_graph(12, PartitionParams { clusters: 4, p_in: 1.0, p_out: 0.0, max_tries: 1 }, &mut rng);
        assert!(matches!(cliques, Err(Error::ConnectivityFailure(1))));
    }

    #[test]
    fn partition_rejects_bad_probabilities() {
        let mut rng = Rng::new(5);
        let p = PartitionParams { clusters: 4, p_in: 0.1, p_out: 0.5, max_tries: 1 };
        assert!(random_partition_graph(12, p, &mut rng).is_err());
    }

    #[test]
    fn grid_counts_and_features() {
        let g = grid_graph(28, 28);
        assert_eq!(g.n_nodes(), 784);
        assert_eq!(g.n_edges(), 3024);
        let deg: Vec<usize> = g.neighbors().iter().map(Vec::len).collect();
        assert_eq!(deg[0], 2);
        assert_eq!(deg[28 + 1], 4);
        let k = g.edges().position(|e| e == (0, 1)).unwrap();
        assert_eq!(g.edge_feats().row(k), &[1.0, 0.0]);
        let k = g.edges().position(|e| e == (0, 28)).unwrap();
        assert_eq!(g.edge_feats().row(k), &[0.0, 1.0]);
    }

    #[test]
    fn delaunay_small_cases() {
        let mut rng = Rng::new(6);
        let g = delaunay2d(3, &mut rng).unwrap();
        assert_eq!(g.undirected_pairs().len(), 3);
        assert!(delaunay2d(2, &mut rng).is_err());
        for n in [10, 64, 200] {
            let g = delaunay2d(n, &mut rng).unwrap();
            assert!(g.undirected_pairs().len() <= 3 * n - 6);
            assert!(g.is_connected());
            g.check_simple_symmetric().unwrap();
        }
    }
}
