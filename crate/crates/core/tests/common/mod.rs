#![allow(dead_code)]

use std::sync::Arc;

use spectral_gn::datasets::Rng;
use spectral_gn::model::{ModelBatch, ModelConfig, SpectralGn};
use spectral_gn::nn::{Bound, Tape, Var};
use spectral_gn::{Graph, Matrix};

pub fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| 2.0 * rng.uniform() - 1.0).collect()).unwrap()
}

pub fn random_symmetric(n: usize, rng: &mut Rng) -> Matrix {
    let a = random_matrix(n, n, rng);
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m.as_mut_slice()[i * n + j] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    m
}

/// Erdős–Rényi graph with symmetric edges.
pub fn random_graph(n: usize, p: f64, rng: &mut Rng) -> Graph {
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.bernoulli(p) {
                pairs.push((i, j));
            }
        }
    }
    Graph::undirected(n, &pairs).unwrap()
}

/// Random graph with random node, edge and global features.
pub fn featured_graph(n: usize, p: f64, widths: (usize, usize, usize), rng: &mut Rng) -> Graph {
    let g = random_graph(n, p, rng);
    let ne = g.n_edges();
    g.with_node_feats(random_matrix(n, widths.0, rng))
        .unwrap()
        .with_edge_feats(random_matrix(ne, widths.1, rng))
        .unwrap()
        .with_global_feats((0..widths.2).map(|_| rng.uniform()).collect())
}

pub fn path_graph(n: usize) -> Graph {
    let pairs: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    Graph::undirected(n, &pairs).unwrap()
}

/// Relative error with a floor on the denominator so that near-zero
/// gradients are compared absolutely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Reduces any output to a scalar with fixed random row and column weights,
/// `Σ_ij w_i·out_ij·r_j`, so every entry influences the result differently.
pub fn scalarize(tape: &mut Tape, out: Var, seed: u64) -> Var {
    let (rows, cols) = tape.shape(out);
    let mut rng = Rng::new(seed);
    let w: Vec<f64> = (0..rows).map(|_| rng.uniform() + 0.5).collect();
    let r = tape.leaf(random_matrix(cols, 1, &mut rng));
    let scaled = tape.scale_rows(out, w.into()).unwrap();
    let summed = tape.sum_rows(scaled);
    tape.matmul(summed, r).unwrap()
}

/// Largest relative error between the tape gradient and central differences
/// with step `h` over every entry of every input.
pub fn gradient_error<F>(inputs: &[Matrix], h: f64, build: F) -> f64
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    let eval = |xs: &[Matrix]| -> f64 {
        let mut tape = Tape::new();
        let vars: Vec<Var> = xs.iter().map(|x| tape.leaf(x.clone())).collect();
        let out = build(&mut tape, &vars);
        let loss = scalarize(&mut tape, out, 99);
        tape.value(loss)[(0, 0)]
    };
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|x| tape.leaf(x.clone())).collect();
    let out = build(&mut tape, &vars);
    let loss = scalarize(&mut tape, out, 99);
    let grads = tape.backward(loss).unwrap();

    let mut worst = 0.0f64;
    for (k, x) in inputs.iter().enumerate() {
        let analytic = grads.get_or_zeros(vars[k], x.shape());
        for e in 0..x.as_slice().len() {
            let mut plus = inputs.to_vec();
            plus[k].as_mut_slice()[e] += h;
            let mut minus = inputs.to_vec();
            minus[k].as_mut_slice()[e] -= h;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * h);
            worst = worst.max(rel_err(analytic.as_slice()[e], numeric));
        }
    }
    worst
}

/// Weighted BCE loss of a node-head model against fixed binary targets.
pub fn node_loss(model: &SpectralGn, tape: &mut Tape, batch: &ModelBatch, targets: &[f64]) -> (Bound, Var) {
    let (bound, out) = model.forward(tape, batch).unwrap();
    let ones: Arc<[f64]> = vec![1.0; targets.len()].into();
    let loss = tape.bce_with_logits(out, targets.into(), ones).unwrap();
    (bound, loss)
}

/// Largest relative error between backprop and central differences over
/// every scalar parameter of `model`.
pub fn model_gradient_error(model: &mut SpectralGn, batch: &ModelBatch, targets: &[f64], h: f64) -> f64 {
    let mut tape = Tape::new();
    let (bound, loss) = node_loss(model, &mut tape, batch, targets);
    let grads = tape.backward(loss).unwrap();
    let names = model.params.names().to_vec();
    let mut worst = 0.0f64;
    for name in names {
        let id = model.params.by_name(&name).unwrap();
        let analytic = grads.get_or_zeros(bound.var(id), model.params.get(id).shape());
        for e in 0..analytic.as_slice().len() {
            let original = model.params.get(id).as_slice()[e];
            let mut eval = |x: f64| {
                model.params.get_mut(id).as_mut_slice()[e] = x;
                let mut t = Tape::new();
                let (_, l) = node_loss(model, &mut t, batch, targets);
                t.value(l)[(0, 0)]
            };
            let numeric = (eval(original + h) - eval(original - h)) / (2.0 * h);
            model.params.get_mut(id).as_mut_slice()[e] = original;
            worst = worst.max(rel_err(analytic.as_slice()[e], numeric));
        }
    }
    worst
}

/// Gradient-check setup: a 12-vertex Delaunay graph with random node
/// features, its model batch and binary targets.
pub fn gradcheck_setup(seed: u64, k: usize, steps: usize, latent: usize) -> (SpectralGn, ModelBatch, Vec<f64>) {
    gradcheck_setup_with(seed, k, steps, latent, |_| {})
}

pub fn gradcheck_setup_with(
    seed: u64,
    k: usize,
    steps: usize,
    latent: usize,
    adjust: impl FnOnce(&mut ModelConfig),
) -> (SpectralGn, ModelBatch, Vec<f64>) {
    let mut rng = Rng::new(seed);
    let g = spectral_gn::datasets::delaunay2d(12, &mut rng).unwrap();
    let g = g.with_node_feats(random_matrix(12, 3, &mut rng)).unwrap().with_global_feats(vec![0.5]);
    let mut cfg = ModelConfig {
        k,
        steps,
        latent,
        hidden: latent,
        node_in: 3,
        edge_in: 2,
        global_in: 1,
        seed,
        ..ModelConfig::default()
    };
    adjust(&mut cfg);
    let mut model = SpectralGn::new(cfg).unwrap();
    // Zero biases on zero inputs put preactivations exactly on the ReLU kink;
    // jitter every parameter so the check runs at a generic point.
    for value in model.params.values_mut() {
        value.as_mut_slice().iter_mut().for_each(|x| *x += 0.2 * rng.uniform() - 0.1);
    }
    let prepared = model.prepare(g, None).unwrap();
    let batch = ModelBatch::new(&[&prepared]).unwrap();
    let targets = (0..12).map(|_| f64::from(u8::from(rng.bernoulli(0.4)))).collect();
    (model, batch, targets)
}

/// Hop distances from `s`, `usize::MAX` when unreachable.
pub fn bfs(g: &Graph, s: usize) -> Vec<usize> {
    let mut adj = vec![Vec::new(); g.n_nodes()];
    for (a, b) in g.edges() {
        adj[a].push(b);
    }
    let mut dist = vec![usize::MAX; g.n_nodes()];
    dist[s] = 0;
    let mut frontier = vec![s];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for v in frontier {
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    dist
}

/// Diameter with disconnected graphs counted as infinitely wide.
pub fn diameter_or_inf(g: &Graph) -> usize {
    (0..g.n_nodes()).flat_map(|s| bfs(g, s)).max().unwrap_or(0)
}

/// Checks every structural and labelling invariant of a shortest-path sample.
pub fn check_shortest_path_sample(sample: &spectral_gn::datasets::LabeledSample) -> Result<(), String> {
    use spectral_gn::Label;
    let g = &sample.graph;
    g.check_simple_symmetric().map_err(|e| e.to_string())?;
    let Label::Nodes { values, pair: Some((s, t)) } = &sample.label else {
        return Err("expected node labels with a query pair".into());
    };
    let (s, t) = (*s, *t);
    let (ds, dt) = (bfs(g, s), bfs(g, t));
    let d = ds[t];
    if d == usize::MAX {
        return Err("query pair disconnected".into());
    }
    for v in 0..g.n_nodes() {
        let on = ds[v] != usize::MAX && dt[v] != usize::MAX && ds[v] + dt[v] == d;
        if (values[v] == 1) != on {
            return Err(format!("vertex {v}: label {} but d_s + d_t = {} + {} vs {d}", values[v], ds[v], dt[v]));
        }
        let w = g.node_feats().cols();
        let (fs, ft) = (g.node_feats()[(v, w - 2)], g.node_feats()[(v, w - 1)]);
        if fs != f64::from(u8::from(v == s)) || ft != f64::from(u8::from(v == t)) {
            return Err(format!("vertex {v}: wrong endpoint channels"));
        }
    }
    Ok(())
}

/// Lattice coordinates of Delaunay sample points (exact on the `2^20` grid).
pub fn lattice_points(g: &Graph) -> Vec<[i128; 2]> {
    let side = (1u64 << 20) as f64;
    g.positions().unwrap().iter().map(|p| [(p[0] * side) as i128, (p[1] * side) as i128]).collect()
}

fn orient(a: [i128; 2], b: [i128; 2], c: [i128; 2]) -> i128 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Positive when `d` is strictly inside the circle through `a, b, c`
/// (counter-clockwise).
fn in_circle(a: [i128; 2], b: [i128; 2], c: [i128; 2], d: [i128; 2]) -> i128 {
    let r = |p: [i128; 2]| [p[0] - d[0], p[1] - d[1]];
    let (a, b, c) = (r(a), r(b), r(c));
    let l = |p: [i128; 2]| p[0] * p[0] + p[1] * p[1];
    a[0] * (b[1] * l(c) - l(b) * c[1]) - a[1] * (b[0] * l(c) - l(b) * c[0]) + l(a) * (b[0] * c[1] - b[1] * c[0])
}

/// Brute-force Delaunay check: every edge lies on a triangle whose
/// circumcircle has no point strictly inside, and every edge of a triangle
/// whose closed circumdisk holds no other point is present.
pub fn check_delaunay(g: &Graph) -> Result<(), String> {
    let pts = lattice_points(g);
    let n = pts.len();
    let edges: std::collections::HashSet<(usize, usize)> = g.undirected_pairs().into_iter().collect();
    let mut supported = std::collections::HashSet::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = if orient(pts[i], pts[j], pts[k]) > 0 {
                    (i, j, k)
                } else if orient(pts[i], pts[j], pts[k]) < 0 {
                    (i, k, j)
                } else {
                    continue;
                };
                let tests: Vec<i128> =
                    (0..n).filter(|&m| m != i && m != j && m != k).map(|m| in_circle(pts[a], pts[b], pts[c], pts[m])).collect();
                if tests.iter().all(|&x| x <= 0) {
                    for e in [(i, j), (i, k), (j, k)] {
                        supported.insert(e);
                    }
                    if tests.iter().all(|&x| x < 0) {
                        for e in [(i, j), (i, k), (j, k)] {
                            if !edges.contains(&e) {
                                return Err(format!("edge {e:?} of an empty triangle is missing"));
                            }
                        }
                    }
                }
            }
        }
    }
    if let Some(e) = edges.iter().find(|e| !supported.contains(e)) {
        return Err(format!("edge {e:?} has no empty circumcircle"));
    }
    Ok(())
}

/// Points on the convex hull boundary, collinear boundary points included.
pub fn hull_boundary_count(pts: &[[i128; 2]]) -> usize {
    let n = pts.len();
    (0..n)
        .filter(|&i| {
            (0..n).any(|j| {
                j != i && {
                    let sides: Vec<i128> = (0..n).map(|m| orient(pts[i], pts[j], pts[m])).collect();
                    sides.iter().all(|&s| s >= 0) || sides.iter().all(|&s| s <= 0)
                }
            })
        })
        .count()
}

/// Relabels vertices by `perm` (vertex `i` becomes `perm[i]`) and reverses
/// the edge order.
pub fn relabel(g: &Graph, perm: &[usize]) -> Graph {
    let n = g.n_nodes();
    let mut nf = Matrix::zeros(n, g.node_feats().cols());
    for i in 0..n {
        nf.row_mut(perm[i]).copy_from_slice(g.node_feats().row(i));
    }
    let order: Vec<usize> = (0..g.n_edges()).rev().collect();
    let senders = order.iter().map(|&k| perm[g.senders()[k]]).collect();
    let receivers = order.iter().map(|&k| perm[g.receivers()[k]]).collect();
    let ef = Matrix::from_rows(&order.iter().map(|&k| g.edge_feats().row(k).to_vec()).collect::<Vec<_>>(), g.edge_feats().cols())
        .unwrap();
    Graph::new(nf, senders, receivers, ef, g.global_feats().to_vec()).unwrap()
}
