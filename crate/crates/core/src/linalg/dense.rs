use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, SymmetricEigen};

/// Eigen decomposition of a dense symmetric matrix, ascending.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    pub eigenvalues: Vec<f64>,
    /// `vectors[i]` is the unit eigenvector for `eigenvalues[i]`.
    pub vectors: Vec<Vec<f64>>,
}

fn to_matrix(a: &[f64], n: usize) -> DMatrix<f64> {
    assert_eq!(a.len(), n * n, "matrix is not {n}x{n}");
    DMatrix::from_row_slice(n, n, a)
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// All eigenvalues of the symmetric row-major `n x n` matrix `a`, ascending.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let m = to_matrix(a, n);
    sorted(m.symmetric_eigenvalues().iter().copied().collect())
}

/// Full eigen decomposition of a symmetric row-major matrix, ascending.
pub fn symmetric_eigen(a: &[f64], n: usize) -> DenseEigen {
    let e = SymmetricEigen::new(to_matrix(a, n));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    DenseEigen {
        eigenvalues: idx.iter().map(|&i| e.eigenvalues[i]).collect(),
        vectors: idx
            .iter()
            .map(|&i| e.eigenvectors.column(i).iter().copied().collect())
            .collect(),
    }
}

/// All eigenvalues of a Hermitian row-major complex matrix, ascending.
pub fn hermitian_eigenvalues(a: &[Complex<f64>], n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n, "matrix is not {n}x{n}");
    let m = DMatrix::from_row_slice(n, n, a);
    sorted(m.symmetric_eigenvalues().iter().copied().collect())
}
