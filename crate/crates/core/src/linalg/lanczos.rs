use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::{axpy, dot, norm, symmetric_eigen, BandCholesky, SparseSymmetricMatrix};
use crate::error::{invalid, Error, Result};
use crate::math::sqrt;

/// Spectral transformation applied before the Krylov iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralTransform {
    /// Iterate with `H` itself.
    None,
    /// Iterate with `(H - sigma I)^{-1}`, factored by banded Cholesky.
    /// `sigma` must lie below the spectrum. `order[new] = old` is the
    /// elimination order used to keep the band narrow.
    ShiftInvert { sigma: f64, order: Option<Vec<usize>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanczosOptions {
    /// Converged when `||H v - lambda v|| <= tol * ||H||_inf`.
    pub tol: f64,
    /// Krylov basis size before an explicit restart (rounded to whole blocks).
    pub max_basis: usize,
    pub max_restarts: usize,
    /// Block size; `0` means one column per wanted eigenpair.
    pub block_size: usize,
    pub transform: SpectralTransform,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-12,
            max_basis: 120,
            max_restarts: 40,
            block_size: 0,
            transform: SpectralTransform::None,
            seed: 0x5eed_cafe,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residual_norms: Vec<f64>,
    /// `||H||_inf`, the scale residuals are measured against.
    pub scale: f64,
    /// Operator applications used.
    pub iterations: usize,
}

enum Op<'a> {
    Plain(&'a SparseSymmetricMatrix),
    Inverse(BandCholesky),
}

impl Op<'_> {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Op::Plain(h) => h.apply(x),
            Op::Inverse(f) => f.solve(x),
        }
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0)
        .collect()
}

/// Orthogonalize `v` against `basis` twice (classical Gram-Schmidt with one
/// reorthogonalization pass) and normalize it. Returns `false` if `v` was
/// numerically inside the span.
fn orthonormalize_against(v: &mut [f64], basis: &[Vec<f64>]) -> bool {
    let before = norm(v);
    if before == 0.0 {
        return false;
    }
    for _ in 0..2 {
        let coeffs: Vec<f64> = basis.iter().map(|q| dot(q, v)).collect();
        for (q, c) in basis.iter().zip(coeffs) {
            axpy(-c, q, v);
        }
    }
    let after = norm(v);
    if after <= 1e-10 * before {
        return false;
    }
    for x in v.iter_mut() {
        *x /= after;
    }
    true
}

/// Lowest `k` eigenpairs of the symmetric matrix `h` by block Lanczos with full
/// reorthogonalization and explicit restarts.
///
/// The start block is deterministic: the normalized all-ones vector followed by
/// pseudo-random columns from a fixed seed, so repeated runs are bitwise
/// identical.
pub fn lowest_eigs(h: &SparseSymmetricMatrix, k: usize, opts: &LanczosOptions) -> Result<EigenPairs> {
    let n = h.dim();
    if k == 0 || k > n {
        return Err(invalid(alloc::format!("requested {k} eigenpairs of a {n}x{n} matrix")));
    }
    if !h.is_symmetric() {
        return Err(invalid("lowest_eigs requires an exactly symmetric matrix"));
    }
    let scale = h.norm_inf().max(f64::MIN_POSITIVE);
    let b = if opts.block_size == 0 {
        k
    } else {
        opts.block_size.max(k)
    }
    .min(n);
    let max_basis = (opts.max_basis.max(3 * b) / b * b).min(n);
    let (op, inverted) = match &opts.transform {
        SpectralTransform::None => (Op::Plain(h), false),
        SpectralTransform::ShiftInvert { sigma, order } => {
            (Op::Inverse(BandCholesky::factor(h, *sigma, order.as_deref())?), true)
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<Vec<f64>> = Vec::with_capacity(b);
    start.push(vec![1.0; n]);
    while start.len() < b {
        start.push(random_vector(&mut rng, n));
    }

    let mut applications = 0usize;
    let mut best_res = vec![f64::INFINITY; k];
    for _restart in 0..=opts.max_restarts {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
        let mut images: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
        // t[i][j] = <v_i, op v_j>, filled for every i present when v_j was applied
        let mut t = vec![vec![f64::NAN; max_basis]; max_basis];
        let mut pending: Vec<Vec<f64>> = core::mem::take(&mut start);
        let mut last_check = 0usize;
        loop {
            // admit the pending block
            let mut added = 0;
            for mut v in pending.drain(..) {
                let mut ok = orthonormalize_against(&mut v, &basis);
                let mut tries = 0;
                while !ok && tries < 5 {
                    v = random_vector(&mut rng, n);
                    ok = orthonormalize_against(&mut v, &basis);
                    tries += 1;
                }
                if ok && basis.len() < max_basis {
                    basis.push(v);
                    added += 1;
                }
            }
            if added == 0 {
                // invariant subspace: the Ritz pairs are as good as they get
                if let Some(outcome) = ritz(h, &basis, &images, &t, k, inverted, scale, opts.tol) {
                    match outcome {
                        RitzOutcome::Converged(mut pairs) => {
                            pairs.iterations = applications;
                            return Ok(pairs);
                        }
                        RitzOutcome::NotYet { vectors, residuals } => {
                            for (bst, r) in best_res.iter_mut().zip(&residuals) {
                                *bst = bst.min(*r);
                            }
                            start = vectors;
                        }
                    }
                }
                break;
            }
            let lo = images.len();
            for j in lo..basis.len() {
                let w = op.apply(&basis[j]);
                applications += 1;
                for i in 0..basis.len() {
                    t[i][j] = dot(&basis[i], &w);
                }
                images.push(w);
            }
            let m = images.len();
            let full = m + b > max_basis;
            if full || m >= last_check + 4 * b {
                last_check = m;
                if let Some(done) = ritz(h, &basis, &images, &t, k, inverted, scale, opts.tol) {
                    match done {
                        RitzOutcome::Converged(mut pairs) => {
                            pairs.iterations = applications;
                            return Ok(pairs);
                        }
                        RitzOutcome::NotYet { vectors, residuals } => {
                            for (bst, r) in best_res.iter_mut().zip(&residuals) {
                                *bst = bst.min(*r);
                            }
                            if full {
                                start = vectors;
                                while start.len() < b {
                                    start.push(random_vector(&mut rng, n));
                                }
                                start.truncate(b);
                                break;
                            }
                        }
                    }
                }
            }
            if full {
                break;
            }
            pending = images[lo..].to_vec();
        }
        while start.len() < b {
            start.push(random_vector(&mut rng, n));
        }
        start.truncate(b);
    }
    Err(Error::Convergence {
        iterations: applications,
        residuals: best_res,
    })
}

enum RitzOutcome {
    Converged(EigenPairs),
    NotYet {
        vectors: Vec<Vec<f64>>,
        residuals: Vec<f64>,
    },
}

#[allow(clippy::too_many_arguments)]
fn ritz(
    h: &SparseSymmetricMatrix,
    basis: &[Vec<f64>],
    images: &[Vec<f64>],
    t: &[Vec<f64>],
    k: usize,
    inverted: bool,
    scale: f64,
    tol: f64,
) -> Option<RitzOutcome> {
    let m = images.len();
    if m < k {
        return None;
    }
    let mut s = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let (a, bb) = (t[i][j], t[j][i]);
            s[i * m + j] = match (a.is_nan(), bb.is_nan()) {
                (false, false) => 0.5 * (a + bb),
                (false, true) => a,
                (true, false) => bb,
                (true, true) => 0.0,
            };
        }
    }
    let e = symmetric_eigen(&s, m);
    let order: Vec<usize> = if inverted {
        (0..m).rev().collect()
    } else {
        (0..m).collect()
    };
    let n = h.dim();
    let mut vals = Vec::with_capacity(k);
    let mut vecs = Vec::with_capacity(k);
    let mut res = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let y = &e.vectors[idx];
        let mut x = vec![0.0; n];
        for (c, q) in y.iter().zip(basis) {
            axpy(*c, q, &mut x);
        }
        let nx = norm(&x);
        for v in x.iter_mut() {
            *v /= nx;
        }
        let hx = h.apply(&x);
        let lambda = dot(&x, &hx);
        let r = sqrt(
            hx.iter()
                .zip(&x)
                .map(|(a, b)| (a - lambda * b) * (a - lambda * b))
                .sum(),
        );
        vals.push(lambda);
        vecs.push(x);
        res.push(r);
    }
    if res.iter().all(|&r| r <= tol * scale) {
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        Some(RitzOutcome::Converged(EigenPairs {
            eigenvalues: idx.iter().map(|&i| vals[i]).collect(),
            vectors: idx.iter().map(|&i| vecs[i].clone()).collect(),
            residual_norms: idx.iter().map(|&i| res[i]).collect(),
            scale,
            iterations: 0,
        }))
    } else {
        Some(RitzOutcome::NotYet {
            vectors: vecs,
            residuals: res,
        })
    }
}
