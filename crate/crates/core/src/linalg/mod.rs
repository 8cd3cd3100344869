//! Linear algebra: compressed sparse symmetric matrices, a banded Cholesky
//! factorization, dense eigen wrappers and a block Lanczos eigensolver.

mod banded;
mod dense;
mod lanczos;
mod sparse;

pub use banded::{bandwidth, BandCholesky};
pub use dense::{hermitian_eigenvalues, symmetric_eigen, symmetric_eigenvalues, DenseEigen};
pub use lanczos::{lowest_eigs, EigenPairs, LanczosOptions, SpectralTransform};
pub use sparse::SparseSymmetricMatrix;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    crate::math::sqrt(dot(a, a))
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
