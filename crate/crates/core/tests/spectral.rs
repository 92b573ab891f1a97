mod common;

use common::{max_abs_diff, random_graph, random_matrix, random_symmetric};
use nalgebra::DMatrix;
use proptest::prelude::*;
use spectral_gn::datasets::{delaunay2d, Rng};
use spectral_gn::spectral::{
    eigenbroadcast, eigenpool, fix_sign, jacobi_eigh, spectral_basis, threshold_basis,
};
use spectral_gn::Matrix;

fn reconstruct(w: &[f64], v: &Matrix) -> Matrix {
    let vw = Matrix::from_vec(
        v.rows(),
        v.cols(),
        (0..v.rows() * v.cols()).map(|e| v.as_slice()[e] * w[e % v.cols()]).collect(),
    )
    .unwrap();
    vw.matmul(&v.transpose()).unwrap()
}

fn orthonormality_error(v: &Matrix) -> f64 {
    max_abs_diff(&v.transpose().matmul(v).unwrap(), &Matrix::identity(v.cols()))
}

#[test]
fn random_symmetric_reconstruction_and_orthonormality() {
    let mut rng = Rng::new(1);
    for _ in 0..50 {
        let m = random_symmetric(32, &mut rng);
        let (w, v) = jacobi_eigh(&m, 1e-10).unwrap();
        assert!(max_abs_diff(&reconstruct(&w, &v), &m) <= 1e-8);
        assert!(orthonormality_error(&v) <= 1e-9);
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
    }
}

#[test]
fn eigenvalues_match_nalgebra() {
    let mut rng = Rng::new(2);
    for n in [1, 2, 5, 17, 32] {
        let m = random_symmetric(n, &mut rng);
        let (w, _) = jacobi_eigh(&m, 1e-10).unwrap();
        let mut expected: Vec<f64> =
            DMatrix::from_row_slice(n, n, m.as_slice()).symmetric_eigenvalues().iter().copied().collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in w.iter().zip(&expected) {
            assert!((a - b).abs() <= 1e-9, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn residual_bounded_by_tolerance() {
    let mut rng = Rng::new(3);
    for _ in 0..10 {
        let m = random_symmetric(20, &mut rng);
        let (w, v) = jacobi_eigh(&m, 1e-10).unwrap();
        let mv = m.matmul(&v).unwrap();
        let vw = Matrix::from_vec(20, 20, (0..400).map(|e| v.as_slice()[e] * w[e % 20]).collect()).unwrap();
        assert!(max_abs_diff(&mv, &vw) <= 1e-10 * m.norm_inf());
    }
}

#[test]
fn laplacian_basis_invariants() {
    let mut rng = Rng::new(4);
    for trial in 0..30 {
        let n = 3 + rng.below(30);
        let g = random_graph(n, 0.2, &mut rng);
        let k = 1 + trial % 8;
        let b = spectral_basis(&g, k).unwrap();
        let l = g.laplacian().unwrap();
        let u = b.eigvecs();
        assert_eq!(b.active(), k.min(n));
        assert!(b.eigvals().iter().all(|&x| x >= -1e-9));
        assert!(b.eigvals()[..b.active()].windows(2).all(|p| p[0] <= p[1]));
        let lu = l.matmul(u).unwrap();
        for j in 0..b.active() {
            for i in 0..n {
                assert!((lu[(i, j)] - b.eigvals()[j] * u[(i, j)]).abs() <= 1e-7);
            }
        }
        let active = Matrix::from_rows(&u.to_rows().iter().map(|r| r[..b.active()].to_vec()).collect::<Vec<_>>(), b.active())
            .unwrap();
        assert!(orthonormality_error(&active) <= 1e-8);
        for j in b.active()..k {
            assert!(u.column(j).iter().all(|&x| x == 0.0));
        }
    }
}

#[test]
fn full_basis_round_trip_is_identity() {
    let mut rng = Rng::new(5);
    for _ in 0..10 {
        let g = random_graph(15, 0.3, &mut rng);
        let b = spectral_basis(&g, 15).unwrap();
        let x = random_matrix(15, 4, &mut rng);
        let back = eigenbroadcast(b.eigvecs(), &eigenpool(b.eigvecs(), &x).unwrap()).unwrap();
        assert!(max_abs_diff(&back, &x) <= 1e-8);
    }
}

#[test]
fn single_vector_pool_is_scaled_mean() {
    let mut rng = Rng::new(6);
    for _ in 0..20 {
        let g = delaunay2d(5 + rng.below(40), &mut rng).unwrap();
        let n = g.n_nodes();
        let b = spectral_basis(&g, 1).unwrap();
        let x = random_matrix(n, 3, &mut rng);
        let pooled = eigenpool(b.eigvecs(), &x).unwrap();
        for c in 0..3 {
            let mean = x.column(c).iter().sum::<f64>() / n as f64;
            assert!((pooled[(0, c)] - (n as f64).sqrt() * mean).abs() <= 1e-10);
        }
    }
}

#[test]
fn threshold_reconstructs_exactly() {
    let mut rng = Rng::new(7);
    for _ in 0..20 {
        let g = random_graph(12, 0.3, &mut rng);
        let b = spectral_basis(&g, 6).unwrap();
        let t = threshold_basis(&b);
        assert_eq!(&t.reconstruct(), b.eigvecs());
        assert!(t.projection().as_slice().iter().all(|&x| x >= 0.0));
        assert_eq!(t.eigvals()[..6], t.eigvals()[6..]);
    }
}

#[test]
fn triangle_constant_pool() {
    let g = spectral_gn::Graph::undirected(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
    let b = spectral_basis(&g, 1).unwrap();
    let x = Matrix::from_vec(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
    let pooled = eigenpool(b.eigvecs(), &x).unwrap();
    assert!((pooled[(0, 0)] - 6.0 / 3f64.sqrt()).abs() <= 1e-12);
}

proptest! {
    #[test]
    fn sign_fix_idempotent_and_positive(col in prop::collection::vec(-1.0f64..1.0, 1..20)) {
        let mut once = col.clone();
        fix_sign(&mut once);
        let mut twice = once.clone();
        fix_sign(&mut twice);
        prop_assert_eq!(&once, &twice);
        let max = once.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let pivot = once.iter().position(|x| x.abs() >= max * (1.0 - 1e-9)).unwrap();
        prop_assert!(once[pivot] >= 0.0);
        for (a, b) in once.iter().zip(&col) {
            prop_assert_eq!(a.abs(), b.abs());
        }
    }

    #[test]
    fn laplacian_spectrum_nonnegative(seed in 0u64..500, n in 2usize..20) {
        let g = random_graph(n, 0.3, &mut Rng::new(seed));
        let (w, _) = jacobi_eigh(&g.laplacian().unwrap(), 1e-10).unwrap();
        prop_assert!(w[0] >= -1e-9);
    }
}
