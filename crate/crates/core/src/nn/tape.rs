//! Reverse-mode automatic differentiation over rank-2 `f64` tensors.
//!
//! A [`Tape`] records every operation as it is evaluated. Calling
//! [`Tape::backward`] on a scalar node walks the record in reverse and
//! accumulates gradients for every node that fed into it.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::{gemm, gemm_view, MatView, Matrix};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Per-graph projection blocks for a batch: rows `offsets[b]..offsets[b+1]`
/// of `matrix` project graph `b`'s nodes onto its own `width` spectral vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockProjection {
    matrix: Matrix,
    offsets: Vec<usize>,
}

impl BlockProjection {
    pub fn new(matrix: Matrix, offsets: Vec<usize>) -> Result<Self> {
        if offsets.first() != Some(&0) || offsets.last() != Some(&matrix.rows()) {
            return Err(Error::ShapeMismatch(format!(
                "projection offsets {:?} do not cover {} rows",
                offsets.first().zip(offsets.last()),
                matrix.rows()
            )));
        }
        if offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::ShapeMismatch("projection offsets must be non-decreasing".into()));
        }
        Ok(Self { matrix, offsets })
    }

    /// Single-graph projection.
    pub fn single(matrix: Matrix) -> Self {
        let rows = matrix.rows();
        Self { matrix, offsets: vec![0, rows] }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn n_graphs(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Spectral vertices per graph.
    pub fn width(&self) -> usize {
        self.matrix.cols()
    }

    pub fn n_nodes(&self) -> usize {
        self.matrix.rows()
    }

    /// Per-graph `Pᵀ·X`, stacked: `(B·C)×d`.
    pub fn pool(&self, x: &Matrix) -> Matrix {
        let (c, d) = (self.width(), x.cols());
        let mut out = Matrix::zeros(self.n_graphs() * c, d);
        for b in 0..self.n_graphs() {
            let (r0, r1) = (self.offsets[b], self.offsets[b + 1]);
            let p = MatView {
                data: &self.matrix.as_slice()[r0 * c..r1 * c],
                rows: r1 - r0,
                cols: c,
                trans: true,
            };
            let xv = MatView { data: &x.as_slice()[r0 * d..r1 * d], rows: r1 - r0, cols: d, trans: false };
            gemm_view(p, xv, &mut out.as_mut_slice()[b * c * d..(b + 1) * c * d], 0.0);
        }
        out
    }

    /// Per-graph `P·S` for stacked spectral rows `S`: `|V|×d`.
    pub fn broadcast(&self, s: &Matrix) -> Matrix {
        let (c, d) = (self.width(), s.cols());
        let mut out = Matrix::zeros(self.n_nodes(), d);
        for b in 0..self.n_graphs() {
            let (r0, r1) = (self.offsets[b], self.offsets[b + 1]);
            let p = MatView {
                data: &self.matrix.as_slice()[r0 * c..r1 * c],
                rows: r1 - r0,
                cols: c,
                trans: false,
            };
            let sv = MatView { data: &s.as_slice()[b * c * d..(b + 1) * c * d], rows: c, cols: d, trans: false };
            gemm_view(p, sv, &mut out.as_mut_slice()[r0 * d..r1 * d], 0.0);
        }
        out
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddBias(Var, Var),
    Concat(Vec<Var>),
    Relu(Var),
    Sigmoid(Var),
    SumRows(Var),
    MeanRows(Var),
    SegmentSum { x: Var, ids: Arc<[usize]> },
    SegmentMean { x: Var, ids: Arc<[usize]>, counts: Arc<[usize]> },
    Gather { x: Var, idx: Arc<[usize]> },
    ScaleRows { x: Var, w: Arc<[f64]> },
    RowSlice { x: Var, start: usize },
    Reshape(Var),
    Pool { x: Var, proj: Arc<BlockProjection> },
    Broadcast { x: Var, proj: Arc<BlockProjection> },
    SoftmaxCe { logits: Var, labels: Arc<[usize]>, probs: Matrix },
    BceLogits { logits: Var, targets: Arc<[f64]>, weights: Arc<[f64]> },
    Mse { x: Var, target: Arc<Matrix> },
    Mae { x: Var, target: Arc<Matrix> },
}

struct Node {
    value: Matrix,
    op: Op,
}

/// Record of a forward computation.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn shape_err(what: &str, a: (usize, usize), b: (usize, usize)) -> Error {
    Error::ShapeMismatch(format!("{what}: {}x{} vs {}x{}", a.0, a.1, b.0, b.1))
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.1 != sb.0 {
            return Err(shape_err("matmul", sa, sb));
        }
        let mut out = Matrix::zeros(sa.0, sb.1);
        gemm(self.value(a), false, self.value(b), false, &mut out, 0.0);
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(shape_err("add", sa, sb));
        }
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// Adds a `1×c` row to every row of `x`.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (sx, sb) = (self.shape(x), self.shape(bias));
        if sb.0 != 1 || sb.1 != sx.1 {
            return Err(shape_err("add_bias", sx, sb));
        }
        let mut out = self.value(x).clone();
        let b = self.value(bias).as_slice();
        if sx.1 > 0 {
            for row in out.as_mut_slice().chunks_mut(sx.1) {
                for (o, bi) in row.iter_mut().zip(b) {
                    *o += bi;
                }
            }
        }
        Ok(self.push(out, Op::AddBias(x, bias)))
    }

    /// Column-wise concatenation of matrices with equal row counts.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts.first().map_or(0, |&p| self.shape(p).0);
        if let Some(&p) = parts.iter().find(|&&p| self.shape(p).0 != rows) {
            return Err(shape_err("concat", (rows, 0), self.shape(p)));
        }
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows {
            let mut off = 0;
            let dst = out.row_mut(i);
            for &p in parts {
                let src = self.nodes[p.0].value.row(i);
                dst[off..off + src.len()].copy_from_slice(src);
                off += src.len();
            }
        }
        Ok(self.push(out, Op::Concat(parts.to_vec())))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(|v| v.max(0.0));
        self.push(out, Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let out = self.value(x).map(sigmoid);
        self.push(out, Op::Sigmoid(x))
    }

    /// Column sums as a `1×c` row.
    pub fn sum_rows(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let mut out = Matrix::zeros(1, v.cols());
        for i in 0..v.rows() {
            for (o, x) in out.as_mut_slice().iter_mut().zip(v.row(i)) {
                *o += x;
            }
        }
        self.push(out, Op::SumRows(x))
    }

    /// Column means as a `1×c` row; zero for an empty matrix.
    pub fn mean_rows(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let n = v.rows().max(1) as f64;
        let mut out = Matrix::zeros(1, v.cols());
        for i in 0..v.rows() {
            for (o, x) in out.as_mut_slice().iter_mut().zip(v.row(i)) {
                *o += x;
            }
        }
        out.as_mut_slice().iter_mut().for_each(|o| *o /= n);
        self.push(out, Op::MeanRows(x))
    }

    /// Sums row `i` of `x` into output row `ids[i]`; the output has `segments` rows.
    pub fn segment_sum(&mut self, x: Var, ids: Arc<[usize]>, segments: usize) -> Result<Var> {
        let v = self.value(x);
        if ids.len() != v.rows() {
            return Err(shape_err("segment_sum ids", (ids.len(), 1), v.shape()));
        }
        if let Some(&id) = ids.iter().find(|&&id| id >= segments) {
            return Err(Error::SegmentIdOutOfRange { id, segments });
        }
        let out = segment_sum(v, &ids, segments);
        Ok(self.push(out, Op::SegmentSum { x, ids }))
    }

    /// Mean of the rows sharing each id; empty segments yield zero rows.
    pub fn segment_mean(&mut self, x: Var, ids: Arc<[usize]>, segments: usize) -> Result<Var> {
        let v = self.value(x);
        if ids.len() != v.rows() {
            return Err(shape_err("segment_mean ids", (ids.len(), 1), v.shape()));
        }
        if let Some(&id) = ids.iter().find(|&&id| id >= segments) {
            return Err(Error::SegmentIdOutOfRange { id, segments });
        }
        let mut counts = vec![0usize; segments];
        for &id in ids.iter() {
            counts[id] += 1;
        }
        let mut out = segment_sum(v, &ids, segments);
        let d = out.cols();
        for (s, &c) in counts.iter().enumerate() {
            if c > 0 {
                out.as_mut_slice()[s * d..(s + 1) * d].iter_mut().for_each(|o| *o /= c as f64);
            }
        }
        Ok(self.push(out, Op::SegmentMean { x, ids, counts: counts.into() }))
    }

    /// Output row `k` is row `idx[k]` of `x`.
    pub fn gather(&mut self, x: Var, idx: Arc<[usize]>) -> Result<Var> {
        let v = self.value(x);
        if let Some(&bad) = idx.iter().find(|&&i| i >= v.rows()) {
            return Err(Error::SegmentIdOutOfRange { id: bad, segments: v.rows() });
        }
        let d = v.cols();
        let mut data = Vec::with_capacity(idx.len() * d);
        for &i in idx.iter() {
            data.extend_from_slice(v.row(i));
        }
        let out = Matrix::from_vec(idx.len(), d, data)?;
        Ok(self.push(out, Op::Gather { x, idx }))
    }

    /// Multiplies row `i` of `x` by `w[i]`.
    pub fn scale_rows(&mut self, x: Var, w: Arc<[f64]>) -> Result<Var> {
        let mut out = self.value(x).clone();
        if w.len() != out.rows() {
            return Err(shape_err("scale_rows", (w.len(), 1), out.shape()));
        }
        let d = out.cols();
        if d > 0 {
            for (row, &s) in out.as_mut_slice().chunks_mut(d).zip(w.iter()) {
                row.iter_mut().for_each(|o| *o *= s);
            }
        }
        Ok(self.push(out, Op::ScaleRows { x, w }))
    }

    /// Rows `start..end` of `x`.
    pub fn row_slice(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let v = self.value(x);
        if start > end || end > v.rows() {
            return Err(Error::ShapeMismatch(format!("row slice {start}..{end} of {} rows", v.rows())));
        }
        let out = v.slice_rows(start, end);
        Ok(self.push(out, Op::RowSlice { x, start }))
    }

    /// Row-major reinterpretation with a new shape.
    pub fn reshape(&mut self, x: Var, rows: usize, cols: usize) -> Result<Var> {
        let out = self.value(x).clone().reshaped(rows, cols)?;
        Ok(self.push(out, Op::Reshape(x)))
    }

    /// Eigenpooling `Pᵀ·X`, block-wise per graph.
    pub fn eigenpool(&mut self, x: Var, proj: &Arc<BlockProjection>) -> Result<Var> {
        let s = self.shape(x);
        if s.0 != proj.n_nodes() {
            return Err(shape_err("eigenpool", proj.matrix().shape(), s));
        }
        let out = proj.pool(self.value(x));
        Ok(self.push(out, Op::Pool { x, proj: Arc::clone(proj) }))
    }

    /// Eigenbroadcasting `P·S`, block-wise per graph.
    pub fn eigenbroadcast(&mut self, x: Var, proj: &Arc<BlockProjection>) -> Result<Var> {
        let s = self.shape(x);
        if s.0 != proj.n_graphs() * proj.width() {
            return Err(shape_err("eigenbroadcast", proj.matrix().shape(), s));
        }
        let out = proj.broadcast(self.value(x));
        Ok(self.push(out, Op::Broadcast { x, proj: Arc::clone(proj) }))
    }

    /// Mean softmax cross-entropy of each logit row against its class label.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: Arc<[usize]>) -> Result<Var> {
        let v = self.value(logits);
        if labels.len() != v.rows() {
            return Err(shape_err("softmax_cross_entropy labels", (labels.len(), 1), v.shape()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= v.cols()) {
            return Err(Error::SegmentIdOutOfRange { id: bad, segments: v.cols() });
        }
        let mut probs = Matrix::zeros(v.rows(), v.cols());
        let mut loss = 0.0;
        for i in 0..v.rows() {
            let row = v.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|x| (x - max).exp()).sum();
            let log_z = max + z.ln();
            loss += log_z - row[labels[i]];
            for (p, x) in probs.row_mut(i).iter_mut().zip(row) {
                *p = (x - log_z).exp();
            }
        }
        let n = v.rows().max(1) as f64;
        let out = Matrix::filled(1, 1, loss / n);
        Ok(self.push(out, Op::SoftmaxCe { logits, labels, probs }))
    }

    /// Weighted binary cross-entropy on an `n×1` logit column:
    /// `(1/n) Σ wᵢ·[softplus(zᵢ) − yᵢ·zᵢ]`.
    pub fn bce_with_logits(&mut self, logits: Var, targets: Arc<[f64]>, weights: Arc<[f64]>) -> Result<Var> {
        let v = self.value(logits);
        if v.cols() != 1 || targets.len() != v.rows() || weights.len() != v.rows() {
            return Err(shape_err("bce_with_logits", v.shape(), (targets.len(), weights.len())));
        }
        let mut loss = 0.0;
        for ((&z, &y), &w) in v.as_slice().iter().zip(targets.iter()).zip(weights.iter()) {
            loss += w * (softplus(z) - y * z);
        }
        let out = Matrix::filled(1, 1, loss / v.rows().max(1) as f64);
        Ok(self.push(out, Op::BceLogits { logits, targets, weights }))
    }

    /// Mean squared error over all entries.
    pub fn mse(&mut self, x: Var, target: Arc<Matrix>) -> Result<Var> {
        let v = self.value(x);
        if v.shape() != target.shape() {
            return Err(shape_err("mse", v.shape(), target.shape()));
        }
        let n = v.as_slice().len().max(1) as f64;
        let loss: f64 = v.as_slice().iter().zip(target.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(self.push(Matrix::filled(1, 1, loss / n), Op::Mse { x, target }))
    }

    /// Mean absolute error over all entries.
    pub fn mae(&mut self, x: Var, target: Arc<Matrix>) -> Result<Var> {
        let v = self.value(x);
        if v.shape() != target.shape() {
            return Err(shape_err("mae", v.shape(), target.shape()));
        }
        let n = v.as_slice().len().max(1) as f64;
        let loss: f64 = v.as_slice().iter().zip(target.as_slice()).map(|(a, b)| (a - b).abs()).sum();
        Ok(self.push(Matrix::filled(1, 1, loss / n), Op::Mae { x, target }))
    }

    /// Gradients of the scalar `loss` with respect to every leaf.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.shape(loss) != (1, 1) {
            return Err(shape_err("backward needs a scalar", self.shape(loss), (1, 1)));
        }
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::filled(1, 1, 1.0));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            // Only leaf gradients are kept; intermediates are released early.
            if matches!(self.nodes[i].op, Op::Leaf) {
                grads[i] = Some(g);
            }
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, i: usize, g: &Matrix, grads: &mut [Option<Matrix>]) {
        let val = |v: Var| &self.nodes[v.0].value;
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                let ga = grad_slot(grads, *a, va.shape());
                gemm(g, false, vb, true, ga, 1.0);
                let gb = grad_slot(grads, *b, vb.shape());
                gemm(va, true, g, false, gb, 1.0);
            }
            Op::Add(a, b) => {
                accumulate(grads, *a, g);
                accumulate(grads, *b, g);
            }
            Op::AddBias(x, bias) => {
                accumulate(grads, *x, g);
                let gb = grad_slot(grads, *bias, val(*bias).shape());
                let d = g.cols();
                if d > 0 {
                    for row in g.as_slice().chunks(d) {
                        for (o, x) in gb.as_mut_slice().iter_mut().zip(row) {
                            *o += x;
                        }
                    }
                }
            }
            Op::Concat(parts) => {
                let mut off = 0;
                for &p in parts {
                    let (rows, cols) = val(p).shape();
                    let gp = grad_slot(grads, p, (rows, cols));
                    for r in 0..rows {
                        for (o, x) in gp.row_mut(r).iter_mut().zip(&g.row(r)[off..off + cols]) {
                            *o += x;
                        }
                    }
                    off += cols;
                }
            }
            Op::Relu(x) => {
                let vx = val(*x);
                let gx = grad_slot(grads, *x, vx.shape());
                for ((o, &xi), &gi) in gx.as_mut_slice().iter_mut().zip(vx.as_slice()).zip(g.as_slice()) {
                    if xi > 0.0 {
                        *o += gi;
                    }
                }
            }
            Op::Sigmoid(x) => {
                let y = &self.nodes[i].value;
                let gx = grad_slot(grads, *x, y.shape());
                for ((o, &yi), &gi) in gx.as_mut_slice().iter_mut().zip(y.as_slice()).zip(g.as_slice()) {
                    *o += gi * yi * (1.0 - yi);
                }
            }
            Op::SumRows(x) | Op::MeanRows(x) => {
                let shape = val(*x).shape();
                let scale = match &self.nodes[i].op {
                    Op::MeanRows(_) => 1.0 / shape.0.max(1) as f64,
                    _ => 1.0,
                };
                let gx = grad_slot(grads, *x, shape);
                for r in 0..shape.0 {
                    for (o, gi) in gx.row_mut(r).iter_mut().zip(g.as_slice()) {
                        *o += gi * scale;
                    }
                }
            }
            Op::SegmentSum { x, ids } => {
                let shape = val(*x).shape();
                let gx = grad_slot(grads, *x, shape);
                for (r, &id) in ids.iter().enumerate() {
                    for (o, gi) in gx.row_mut(r).iter_mut().zip(g.row(id)) {
                        *o += gi;
                    }
                }
            }
            Op::SegmentMean { x, ids, counts } => {
                let shape = val(*x).shape();
                let gx = grad_slot(grads, *x, shape);
                for (r, &id) in ids.iter().enumerate() {
                    let c = counts[id] as f64;
                    for (o, gi) in gx.row_mut(r).iter_mut().zip(g.row(id)) {
                        *o += gi / c;
                    }
                }
            }
            Op::Gather { x, idx } => {
                let shape = val(*x).shape();
                let gx = grad_slot(grads, *x, shape);
                for (k, &r) in idx.iter().enumerate() {
                    for (o, gi) in gx.row_mut(r).iter_mut().zip(g.row(k)) {
                        *o += gi;
                    }
                }
            }
            Op::ScaleRows { x, w } => {
                let shape = val(*x).shape();
                let gx = grad_slot(grads, *x, shape);
                for (r, &s) in w.iter().enumerate() {
                    for (o, gi) in gx.row_mut(r).iter_mut().zip(g.row(r)) {
                        *o += gi * s;
                    }
                }
            }
            Op::RowSlice { x, start } => {
                let shape = val(*x).shape();
                let gx = grad_slot(grads, *x, shape);
                let d = shape.1;
                for (o, gi) in gx.as_mut_slice()[start * d..].iter_mut().zip(g.as_slice()) {
                    *o += gi;
                }
            }
            Op::Reshape(x) => {
                let shape = val(*x).shape();
                let gx = grad_slot(grads, *x, shape);
                for (o, gi) in gx.as_mut_slice().iter_mut().zip(g.as_slice()) {
                    *o += gi;
                }
            }
            Op::Pool { x, proj } => {
                let back = proj.broadcast(g);
                accumulate(grads, *x, &back);
            }
            Op::Broadcast { x, proj } => {
                let back = proj.pool(g);
                accumulate(grads, *x, &back);
            }
            Op::SoftmaxCe { logits, labels, probs } => {
                let scale = g[(0, 0)] / probs.rows().max(1) as f64;
                let gx = grad_slot(grads, *logits, probs.shape());
                for (r, &l) in labels.iter().enumerate() {
                    for (j, (o, p)) in gx.row_mut(r).iter_mut().zip(probs.row(r)).enumerate() {
                        *o += scale * (p - if j == l { 1.0 } else { 0.0 });
                    }
                }
            }
            Op::BceLogits { logits, targets, weights } => {
                let vx = val(*logits);
                let scale = g[(0, 0)] / vx.rows().max(1) as f64;
                let gx = grad_slot(grads, *logits, vx.shape());
                for (k, o) in gx.as_mut_slice().iter_mut().enumerate() {
                    *o += scale * weights[k] * (sigmoid(vx.as_slice()[k]) - targets[k]);
                }
            }
            Op::Mse { x, target } => {
                let vx = val(*x);
                let scale = 2.0 * g[(0, 0)] / vx.as_slice().len().max(1) as f64;
                let gx = grad_slot(grads, *x, vx.shape());
                for ((o, a), b) in gx.as_mut_slice().iter_mut().zip(vx.as_slice()).zip(target.as_slice()) {
                    *o += scale * (a - b);
                }
            }
            Op::Mae { x, target } => {
                let vx = val(*x);
                let scale = g[(0, 0)] / vx.as_slice().len().max(1) as f64;
                let gx = grad_slot(grads, *x, vx.shape());
                for ((o, a), b) in gx.as_mut_slice().iter_mut().zip(vx.as_slice()).zip(target.as_slice()) {
                    let d = a - b;
                    if d != 0.0 {
                        *o += scale * d.signum();
                    }
                }
            }
        }
    }
}

fn grad_slot(grads: &mut [Option<Matrix>], v: Var, shape: (usize, usize)) -> &mut Matrix {
    grads[v.0].get_or_insert_with(|| Matrix::zeros(shape.0, shape.1))
}

fn accumulate(grads: &mut [Option<Matrix>], v: Var, g: &Matrix) {
    match &mut grads[v.0] {
        Some(acc) => acc.add_assign(g),
        slot @ None => *slot = Some(g.clone()),
    }
}

fn segment_sum(v: &Matrix, ids: &[usize], segments: usize) -> Matrix {
    let d = v.cols();
    let mut out = Matrix::zeros(segments, d);
    for (r, &id) in ids.iter().enumerate() {
        for (o, x) in out.row_mut(id).iter_mut().zip(v.row(r)) {
            *o += x;
        }
    }
    out
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + eˣ)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Gradients produced by [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// Gradient of a node, `None` if the loss does not depend on it.
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient of a node, zeros of the given shape if untouched.
    pub fn get_or_zeros(&self, v: Var, shape: (usize, usize)) -> Matrix {
        self.get(v).cloned().unwrap_or_else(|| Matrix::zeros(shape.0, shape.1))
    }
}
