use alloc::vec;
use alloc::vec::Vec;

use super::SparseSymmetricMatrix;
use crate::error::{Error, Result};
use crate::math::sqrt;

/// Half-bandwidth of `a` after renumbering unknown `old` to `inv[old]`.
pub fn bandwidth(a: &SparseSymmetricMatrix, inv: &[usize]) -> usize {
    a.entries().map(|(i, j, _)| inv[i].abs_diff(inv[j])).max().unwrap_or(0)
}

/// Cholesky factor `L L^T = P (A - sigma I) P^T` of a symmetric positive definite
/// banded matrix, stored row by row inside the band.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    inv: Vec<usize>,
    l: Vec<f64>,
}

impl BandCholesky {
    /// Factor `A - sigma I`. `order[new] = old` gives the elimination order; the
    /// identity is used when `None`.
    pub fn factor(a: &SparseSymmetricMatrix, sigma: f64, order: Option<&[usize]>) -> Result<Self> {
        let n = a.dim();
        let inv: Vec<usize> = match order {
            Some(o) => {
                assert_eq!(o.len(), n, "ordering length mismatch");
                let mut inv = vec![usize::MAX; n];
                for (new, &old) in o.iter().enumerate() {
                    inv[old] = new;
                }
                assert!(inv.iter().all(|&v| v != usize::MAX), "ordering is not a permutation");
                inv
            }
            None => (0..n).collect(),
        };
        let bw = bandwidth(a, &inv);
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for (r, c, v) in a.entries() {
            let (i, j) = (inv[r], inv[c]);
            if j <= i {
                l[i * w + (j + bw - i)] += v;
            }
        }
        for i in 0..n {
            l[i * w + bw] -= sigma;
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = l[i * w + (j + bw - i)];
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                for k in k0..j {
                    s -= l[ri + k] * l[rj + k];
                }
                if j < i {
                    l[i * w + (j + bw - i)] = s / l[j * w + bw];
                } else {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite { pivot: i, value: s });
                    }
                    l[i * w + bw] = sqrt(s);
                }
            }
        }
        Ok(BandCholesky { n, bw, inv, l })
    }

    pub fn half_bandwidth(&self) -> usize {
        self.bw
    }

    /// Solve `(A - sigma I) x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = vec![0.0; n];
        for (old, &new) in self.inv.iter().enumerate() {
            y[new] = b[old];
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            let ri = i * w + bw - i;
            let mut s = y[i];
            for k in j0..i {
                s -= self.l[ri + k] * y[k];
            }
            y[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            let hi = (i + bw).min(n - 1);
            for k in i + 1..=hi {
                s -= self.l[k * w + (i + bw - k)] * y[k];
            }
            y[i] = s / self.l[i * w + bw];
        }
        let mut x = vec![0.0; n];
        for (old, &new) in self.inv.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
