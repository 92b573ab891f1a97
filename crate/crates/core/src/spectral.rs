//! Laplacian eigendecomposition and the projections that move node features
//! between a graph and its spectral graph.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::{gemm, Matrix};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// Relative tolerance under which two magnitudes count as tied when choosing
/// the sign-defining entry of an eigenvector.
const SIGN_TIE_RTOL: f64 = 1e-9;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order (stable with respect to solver
/// order on ties) and the matching eigenvectors as the columns of an `n×n`
/// matrix. `tol` bounds the off-diagonal Frobenius norm relative to the
/// Frobenius norm of `m`.
pub fn jacobi_eigh(m: &Matrix, tol: f64) -> Result<(Vec<f64>, Matrix)> {
    jacobi_eigh_with(m, tol, DEFAULT_MAX_SWEEPS)
}

pub fn jacobi_eigh_with(m: &Matrix, tol: f64, max_sweeps: usize) -> Result<(Vec<f64>, Matrix)> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::ShapeMismatch(format!("eigendecomposition of a {}x{} matrix", n, m.cols())));
    }
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if asym > 1e-12 {
        return Err(Error::NotSymmetric(asym));
    }

    let mut a = m.as_slice().to_vec();
    // Eigenvectors are accumulated as rows so rotations touch contiguous memory.
    let mut vt = Matrix::identity(n).into_vec();
    let scale = m.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = tol * scale;

    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += a[i * n + j] * a[i * n + j];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut sweep = 0;
    loop {
        let off = off_norm(&a);
        if off <= target || scale == 0.0 {
            break;
        }
        if sweep == max_sweeps {
            return Err(Error::NoConvergence { sweeps: max_sweeps, off_norm: off });
        }
        // Early sweeps only rotate large elements.
        let threshold = if sweep < 3 { 0.2 * off / (n * n) as f64 } else { 0.0 };
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                if sweep > 3 && apq.abs() * 1e18 < app.abs().min(aqq.abs()) {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                if apq == 0.0 || apq.abs() <= threshold {
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate_rows(&mut a, n, p, q, c, s);
                for k in 0..n {
                    if k != p && k != q {
                        a[k * n + p] = a[p * n + k];
                        a[k * n + q] = a[q * n + k];
                    }
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                rotate_rows(&mut vt, n, p, q, c, s);
            }
        }
        sweep += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let eigvals = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vecs = Matrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        for k in 0..n {
            vecs[(k, col)] = vt[i * n + k];
        }
    }
    Ok((eigvals, vecs))
}

/// Applies a Givens rotation to rows `p` and `q` of a row-major `n×n` buffer.
#[inline]
fn rotate_rows(buf: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = buf.split_at_mut(q * n);
    let rp = &mut head[p * n..p * n + n];
    let rq = &mut tail[..n];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Flips `col` in place so its largest-magnitude entry is positive. Entries
/// within a relative `1e-9` of the maximum count as tied; the lowest index wins.
pub fn fix_sign(col: &mut [f64]) {
    let max = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let pivot = col.iter().position(|x| x.abs() >= max * (1.0 - SIGN_TIE_RTOL)).unwrap();
    if col[pivot] < 0.0 {
        col.iter_mut().for_each(|x| *x = -*x);
    }
}

/// The `K` smallest Laplacian eigenpairs of a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralBasis {
    eigvals: Vec<f64>,
    eigvecs: Matrix,
    active: usize,
}

impl SpectralBasis {
    /// Assembles a basis from explicit parts, applying the sign rule to every column.
    pub fn from_parts(eigvals: Vec<f64>, mut eigvecs: Matrix, active: usize) -> Result<Self> {
        if eigvals.len() != eigvecs.cols() || active > eigvals.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} eigenvalues for {} eigenvector columns ({active} active)",
                eigvals.len(),
                eigvecs.cols()
            )));
        }
        for j in 0..eigvecs.cols() {
            let mut col = eigvecs.column(j);
            fix_sign(&mut col);
            for (i, x) in col.into_iter().enumerate() {
                eigvecs[(i, j)] = x;
            }
        }
        Ok(Self { eigvals, eigvecs, active })
    }

    pub fn k(&self) -> usize {
        self.eigvals.len()
    }

    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    /// `|V|×K` eigenvector matrix `U`.
    pub fn eigvecs(&self) -> &Matrix {
        &self.eigvecs
    }

    /// Number of columns that hold real eigenvectors rather than padding.
    pub fn active(&self) -> usize {
        self.active
    }

    /// Permutes the basis columns: column `j` of the result is column `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> SpectralBasis {
        let mut eigvecs = Matrix::zeros(self.eigvecs.rows(), perm.len());
        for (j, &src) in perm.iter().enumerate() {
            for i in 0..eigvecs.rows() {
                eigvecs[(i, j)] = self.eigvecs[(i, src)];
            }
        }
        SpectralBasis {
            eigvals: perm.iter().map(|&j| self.eigvals[j]).collect(),
            eigvecs,
            active: self.active,
        }
    }

    /// Relabels vertices: row `perm[i]` of the result is row `i` of `self`.
    pub fn relabeled(&self, perm: &[usize]) -> SpectralBasis {
        let mut eigvecs = Matrix::zeros(self.eigvecs.rows(), self.eigvecs.cols());
        for (i, &dst) in perm.iter().enumerate() {
            eigvecs.row_mut(dst).copy_from_slice(self.eigvecs.row(i));
        }
        SpectralBasis { eigvals: self.eigvals.clone(), eigvecs, active: self.active }
    }
}

/// Computes the `k` smallest eigenpairs of `laplacian(g)`, sign-fixed.
/// Columns beyond `|V|` are zero with eigenvalue 0.
pub fn spectral_basis(g: &Graph, k: usize) -> Result<SpectralBasis> {
    if k == 0 {
        return Err(Error::InvalidParameter("spectral basis needs K >= 1".into()));
    }
    let l = g.laplacian()?;
    let n = g.n_nodes();
    let (vals, vecs) = jacobi_eigh(&l, DEFAULT_TOL)?;
    let active = k.min(n);
    let mut eigvals = vec![0.0; k];
    let mut eigvecs = Matrix::zeros(n, k);
    for j in 0..active {
        eigvals[j] = vals[j].max(0.0);
        for i in 0..n {
            eigvecs[(i, j)] = vecs[(i, j)];
        }
    }
    SpectralBasis::from_parts(eigvals, eigvecs, active)
}

/// `concat[max(U, 0), max(-U, 0)]` with duplicated eigenvalue labels.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdedBasis {
    projection: Matrix,
    eigvals: Vec<f64>,
}

impl ThresholdedBasis {
    pub fn projection(&self) -> &Matrix {
        &self.projection
    }

    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    /// `θ(U) − θ(−U)`, which equals `U` exactly.
    pub fn reconstruct(&self) -> Matrix {
        let k = self.eigvals.len() / 2;
        let mut u = Matrix::zeros(self.projection.rows(), k);
        for i in 0..u.rows() {
            for j in 0..k {
                u[(i, j)] = self.projection[(i, j)] - self.projection[(i, j + k)];
            }
        }
        u
    }
}

pub fn threshold_basis(b: &SpectralBasis) -> ThresholdedBasis {
    let (n, k) = b.eigvecs.shape();
    let mut projection = Matrix::zeros(n, 2 * k);
    for i in 0..n {
        for j in 0..k {
            let u = b.eigvecs[(i, j)];
            projection[(i, j)] = u.max(0.0);
            projection[(i, j + k)] = (-u).max(0.0);
        }
    }
    let eigvals = b.eigvals.iter().chain(&b.eigvals).copied().collect();
    ThresholdedBasis { projection, eigvals }
}

/// Eigenpooling `Pᵀ·V`: one row per spectral vertex.
pub fn eigenpool(p: &Matrix, node_feats: &Matrix) -> Result<Matrix> {
    if p.rows() != node_feats.rows() {
        return Err(Error::ShapeMismatch(format!(
            "projection has {} rows, node features {}",
            p.rows(),
            node_feats.rows()
        )));
    }
    let mut out = Matrix::zeros(p.cols(), node_feats.cols());
    gemm(p, true, node_feats, false, &mut out, 0.0);
    Ok(out)
}

/// Eigenbroadcasting `P·S`: one row per spatial vertex.
pub fn eigenbroadcast(p: &Matrix, spectral_feats: &Matrix) -> Result<Matrix> {
    if p.cols() != spectral_feats.rows() {
        return Err(Error::ShapeMismatch(format!(
            "projection has {} columns, spectral features {} rows",
            p.cols(),
            spectral_feats.rows()
        )));
    }
    p.matmul(spectral_feats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn path(n: usize) -> Graph {
        let pairs: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Graph::undirected(n, &pairs).unwrap()
    }

    #[test]
    fn identity_and_diagonal() {
        let (w, _) = jacobi_eigh(&Matrix::identity(3), DEFAULT_TOL).unwrap();
        assert_eq!(w, vec![1.0, 1.0, 1.0]);
        let (w, v) = jacobi_eigh(&Matrix::from_diag(&[3.0, 1.0, 2.0]), DEFAULT_TOL).unwrap();
        assert_eq!(w, vec![1.0, 2.0, 3.0]);
        // Columns are standard basis vectors e1, e2, e0 up to sign.
        for (col, axis) in [(0, 1), (1, 2), (2, 0)] {
            assert_eq!(v[(axis, col)].abs(), 1.0);
        }
    }

    /// Roots of the monic characteristic cubic of a symmetric 3×3 matrix via
    /// the trigonometric method; independent of the Jacobi path.
    fn cubic_eigs(m: &Matrix) -> [f64; 3] {
        let tr = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let q = tr / 3.0;
        let mut b = m.clone();
        for i in 0..3 {
            b[(i, i)] -= q;
        }
        let p2: f64 = b.as_slice().iter().map(|x| x * x).sum::<f64>() / 6.0;
        let p = p2.sqrt();
        let det = b[(0, 0)] * (b[(1, 1)] * b[(2, 2)] - b[(1, 2)] * b[(2, 1)])
            - b[(0, 1)] * (b[(1, 0)] * b[(2, 2)] - b[(1, 2)] * b[(2, 0)])
            + b[(0, 2)] * (b[(1, 0)] * b[(2, 1)] - b[(1, 1)] * b[(2, 0)]);
        let r = (det / (2.0 * p * p2)).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let hi = q + 2.0 * p * phi.cos();
        let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        let mut e = [lo, 3.0 * q - hi - lo, hi];
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn path3_laplacian_eigenvalues() {
        let l = path(3).laplacian().unwrap();
        let oracle = cubic_eigs(&l);
        for (o, e) in oracle.iter().zip([0.0, 1.0, 3.0]) {
            assert_abs_diff_eq!(*o, e, epsilon = 1e-12);
        }
        let (w, _) = jacobi_eigh(&l, DEFAULT_TOL).unwrap();
        for (a, b) in w.iter().zip([0.0, 1.0, 3.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let m = Matrix::from_vec(2, 2, vec![1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(jacobi_eigh(&m, DEFAULT_TOL), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn reports_non_convergence() {
        let m = Matrix::from_vec(2, 2, vec![1.0, 0.5, 0.5, 2.0]).unwrap();
        assert!(matches!(jacobi_eigh_with(&m, 1e-10, 0), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn constant_kernel_vector() {
        let g = Graph::undirected(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        let b = spectral_basis(&g, 2).unwrap();
        assert_abs_diff_eq!(b.eigvals()[0], 0.0, epsilon = 1e-10);
        for i in 0..4 {
            assert_abs_diff_eq!(b.eigvecs()[(i, 0)], 0.5, epsilon = 1e-10);
        }
    }

    #[test]
    fn path3_second_vector_and_threshold() {
        let b = spectral_basis(&path(3), 2).unwrap();
        assert_abs_diff_eq!(b.eigvals()[1], 1.0, epsilon = 1e-10);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // Tie between |u0| and |u2| resolves to the lower index being positive.
        let expected = [h, 0.0, -h];
        for i in 0..3 {
            assert_abs_diff_eq!(b.eigvecs()[(i, 1)], expected[i], epsilon = 1e-9);
        }
        let t = threshold_basis(&b);
        let p = t.projection();
        for i in 0..3 {
            assert_abs_diff_eq!(p[(i, 1)], [h, 0.0, 0.0][i], epsilon = 1e-9);
            assert_abs_diff_eq!(p[(i, 3)], [0.0, 0.0, h][i], epsilon = 1e-9);
        }
    }

    #[test]
    fn disconnected_kernel_spans_indicators() {
        let g = Graph::undirected(4, &[(0, 1), (2, 3)]).unwrap();
        let b = spectral_basis(&g, 2).unwrap();
        assert_abs_diff_eq!(b.eigvals()[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(b.eigvals()[1], 0.0, epsilon = 1e-10);
        // Projecting each component indicator onto the span recovers it.
        let u = b.eigvecs();
        for ind in [[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]] {
            let mut proj = [0.0; 4];
            for j in 0..2 {
                let c: f64 = (0..4).map(|i| u[(i, j)] * ind[i]).sum();
                for i in 0..4 {
                    proj[i] += c * u[(i, j)];
                }
            }
            for i in 0..4 {
                assert_abs_diff_eq!(proj[i], ind[i], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn padding_beyond_vertex_count() {
        let b = spectral_basis(&path(2), 4).unwrap();
        assert_eq!(b.k(), 4);
        assert_eq!(b.active(), 2);
        assert_eq!(&b.eigvals()[2..], &[0.0, 0.0]);
        assert_eq!(b.eigvecs().column(3), vec![0.0, 0.0]);
    }

    #[test]
    fn threshold_examples() {
        let b = SpectralBasis::from_parts(vec![0.5], Matrix::from_vec(2, 1, vec![0.5, -0.5]).unwrap(), 1)
            .unwrap();
        let t = threshold_basis(&b);
        assert_eq!(t.projection().as_slice(), &[0.5, 0.0, 0.0, 0.5]);
        assert_eq!(t.eigvals(), &[0.5, 0.5]);
        let pos = SpectralBasis::from_parts(vec![1.0], Matrix::from_vec(2, 1, vec![0.3, 0.4]).unwrap(), 1)
            .unwrap();
        assert_eq!(threshold_basis(&pos).projection().as_slice(), &[0.3, 0.0, 0.4, 0.0]);
    }

    #[test]
    fn pool_and_broadcast_examples() {
        let tri = Graph::undirected(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let b = spectral_basis(&tri, 1).unwrap();
        let x = Matrix::from_vec(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let pooled = eigenpool(b.eigvecs(), &x).unwrap();
        assert_abs_diff_eq!(pooled[(0, 0)], 6.0 / 3f64.sqrt(), epsilon = 1e-12);
        assert_eq!(eigenpool(b.eigvecs(), &Matrix::zeros(3, 2)).unwrap(), Matrix::zeros(1, 2));

        let s = Matrix::from_vec(1, 1, vec![2.0]).unwrap();
        let spread = eigenbroadcast(b.eigvecs(), &s).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(spread[(i, 0)], 2.0 / 3f64.sqrt(), epsilon = 1e-12);
        }
        assert!(eigenpool(b.eigvecs(), &Matrix::zeros(2, 1)).is_err());
        assert!(eigenbroadcast(b.eigvecs(), &Matrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn sign_fix_is_idempotent() {
        let mut v = vec![0.1, -0.9, 0.3];
        fix_sign(&mut v);
        assert_eq!(v, vec![-0.1, 0.9, -0.3]);
        let before = v.clone();
        fix_sign(&mut v);
        assert_eq!(v, before);
    }
}
