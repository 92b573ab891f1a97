//! Browser bindings for a few spectral operations on random Delaunay graphs.
//!
//! Every export returns a JSON string so the page can draw it directly.

use serde::Serialize;
use spectral_gn::datasets::{delaunay2d, shortest_path_labels, Rng};
use spectral_gn::spectral::{eigenbroadcast, eigenpool, spectral_basis, threshold_basis};
use spectral_gn::{Graph, Matrix, Result};
use wasm_bindgen::prelude::*;

/// Largest graph the page may request; the eigensolver is cubic.
pub const MAX_VERTICES: usize = 400;

#[derive(Debug, Serialize)]
pub struct Layout {
    pub positions: Vec<[f64; 2]>,
    pub edges: Vec<(usize, usize)>,
}

impl Layout {
    fn of(g: &Graph) -> Self {
        Self { positions: g.positions().map(<[_]>::to_vec).unwrap_or_default(), edges: g.undirected_pairs() }
    }
}

#[derive(Debug, Serialize)]
pub struct Spectrum {
    #[serde(flatten)]
    pub layout: Layout,
    pub eigvals: Vec<f64>,
    /// One entry per eigenvector, each holding a value per vertex.
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct Filtered {
    #[serde(flatten)]
    pub layout: Layout,
    pub signal: Vec<f64>,
    pub filtered: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ShortestPath {
    #[serde(flatten)]
    pub layout: Layout,
    pub source: usize,
    pub target: usize,
    pub labels: Vec<u8>,
}

fn graph(n: usize, seed: u64) -> Result<Graph> {
    delaunay2d(n.clamp(3, MAX_VERTICES), &mut Rng::new(seed))
}

/// Delaunay graph with its `k` lowest Laplacian eigenpairs.
pub fn spectrum(n: usize, seed: u64, k: usize) -> Result<Spectrum> {
    let g = graph(n, seed)?;
    let basis = spectral_basis(&g, k.clamp(1, g.n_nodes()))?;
    let vectors = (0..basis.k()).map(|j| basis.eigvecs().column(j)).collect();
    Ok(Spectrum { layout: Layout::of(&g), eigvals: basis.eigvals().to_vec(), vectors })
}

/// A noisy smooth signal and its projection onto the lowest `k` eigenvectors
/// (or their thresholded halves), i.e. `P·Pᵀ·x`.
pub fn low_pass(n: usize, seed: u64, k: usize, threshold: bool) -> Result<Filtered> {
    let g = graph(n, seed)?;
    let mut rng = Rng::new(seed ^ 0x5151);
    let pos = g.positions().unwrap_or_default();
    let signal: Vec<f64> =
        pos.iter().map(|p| (3.0 * p[0]).sin() + (2.0 * p[1]).cos() + 0.6 * (rng.uniform() - 0.5)).collect();
    let basis = spectral_basis(&g, k.clamp(1, g.n_nodes()))?;
    let p = if threshold { threshold_basis(&basis).projection().clone() } else { basis.eigvecs().clone() };
    let x = Matrix::from_vec(signal.len(), 1, signal.clone())?;
    let filtered = eigenbroadcast(&p, &eigenpool(&p, &x)?)?.into_vec();
    Ok(Filtered { layout: Layout::of(&g), signal, filtered })
}

/// Random query pair and the union of its shortest paths.
pub fn shortest_path(n: usize, seed: u64) -> Result<ShortestPath> {
    let g = graph(n, seed)?;
    let (_, labels, (source, target)) = shortest_path_labels(&g, &mut Rng::new(seed ^ 0x7a7a))?;
    Ok(ShortestPath { layout: Layout::of(&g), source, target, labels })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = spectrum)]
pub fn spectrum_js(n: usize, seed: u32, k: usize) -> std::result::Result<String, JsError> {
    to_js(spectrum(n, u64::from(seed), k))
}

#[wasm_bindgen(js_name = lowPass)]
pub fn low_pass_js(n: usize, seed: u32, k: usize, threshold: bool) -> std::result::Result<String, JsError> {
    to_js(low_pass(n, u64::from(seed), k, threshold))
}

#[wasm_bindgen(js_name = shortestPath)]
pub fn shortest_path_js(n: usize, seed: u32) -> std::result::Result<String, JsError> {
    to_js(shortest_path(n, u64::from(seed)))
}
