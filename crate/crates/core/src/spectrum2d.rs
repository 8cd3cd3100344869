//! The quadratic form on the truncated strip `[-L, L] x C` and its spectrum.
//!
//! With `a = (d/dx h^2)/4h^2`, `b = f' xi1' + g' xi2'` and `c = (d/dt h^2)/4h^2`
//! the form is
//! `Q(psi) = int (1/h^2) |psi_x - a psi - b (psi_t - c psi)|^2 + |psi_t - c psi|^2`.
//! It is discretized with bilinear elements on the node grid (Dirichlet at
//! `x = +-L`, periodic in `t`), coefficients sampled at the 2 x 2 Gauss points of
//! each cell, and a lumped mass. The matrix is a sum of weighted outer products of
//! the two residuals, so it is symmetric and positive semidefinite by
//! construction, and no coefficient is ever sampled on a cell edge (in particular
//! not at the corner `x = 0` of the broken waveguide).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::geometry::{local_coefficients, CrossSection, ReferenceProfile, Slopes, Tangent};
use crate::linalg::{self, EigenPairs, LanczosOptions, SparseSymmetricMatrix, SpectralTransform};
use crate::transverse::{ring_order, transverse_eigs, TransverseOperatorSpec, TransverseScheme, GAUSS_HI, GAUSS_LO};

/// Node grid on `[-L, L] x [0, 1)`: `x_i = -L + (i + 1) hx`, `hx = 2L / (n_x + 1)`,
/// `t_j = j / n_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripGrid {
    pub half_length: f64,
    pub n_x: usize,
    pub n_t: usize,
}

impl StripGrid {
    pub fn new(half_length: f64, n_x: usize, n_t: usize) -> Result<Self> {
        let g = StripGrid { half_length, n_x, n_t };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x < 32 || self.n_t < 32 {
            return Err(invalid(format!(
                "strip grid too coarse: n_x = {}, n_t = {} (both must be >= 32)",
                self.n_x, self.n_t
            )));
        }
        if self.n_x.is_multiple_of(2) {
            return Err(invalid(format!("n_x must be odd, got {}", self.n_x)));
        }
        if !(self.half_length.is_finite() && self.half_length > 0.0) {
            return Err(invalid(format!(
                "half-length must be positive, got {}",
                self.half_length
            )));
        }
        Ok(())
    }

    pub fn hx(&self) -> f64 {
        2.0 * self.half_length / (self.n_x + 1) as f64
    }

    pub fn ht(&self) -> f64 {
        1.0 / self.n_t as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_length + (i + 1) as f64 * self.hx()
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 / self.n_t as f64
    }

    pub fn dim(&self) -> usize {
        self.n_x * self.n_t
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_t + j
    }

    /// Lumped mass per node, `hx * ht`.
    pub fn cell_area(&self) -> f64 {
        self.hx() * self.ht()
    }

    /// Elimination order giving half-bandwidth `n_t + 2`: x-major with the
    /// periodic `t` index interleaved from both ends.
    pub fn band_order(&self) -> Vec<usize> {
        let ring = ring_order(self.n_t);
        let mut o = Vec::with_capacity(self.dim());
        for i in 0..self.n_x {
            o.extend(ring.iter().map(|&j| self.index(i, j)));
        }
        o
    }

    /// Samples `f(x_i, t_j)` on the nodes.
    pub fn sample(&self, mut f: impl FnMut(f64, f64) -> f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        for i in 0..self.n_x {
            let x = self.x(i);
            for j in 0..self.n_t {
                v.push(f(x, self.t(j)));
            }
        }
        v
    }
}

const GAUSS: [(f64, [f64; 2]); 2] = [(GAUSS_LO, [GAUSS_HI, GAUSS_LO]), (GAUSS_HI, [GAUSS_LO, GAUSS_HI])];

/// Assembled form matrix `H = K / (hx ht)`, so that its eigenvalues approximate
/// those of the operator (the mass matrix is `hx ht I`).
pub fn assemble_form(cs: &CrossSection, profile: &ReferenceProfile, grid: &StripGrid) -> Result<SparseSymmetricMatrix> {
    grid.validate()?;
    profile.validate()?;
    let (nx, nt) = (grid.n_x, grid.n_t);
    let (hx, inv_hx, inv_ht) = (grid.hx(), 1.0 / grid.hx(), nt as f64);

    let tangents: Vec<[Tangent; 2]> = (0..nt)
        .map(|j| GAUSS.map(|(th, _)| cs.tangent_at((j as f64 + th) / nt as f64)))
        .collect();
    // cell c spans [x_{c-1}, x_c]; nodes -1 and n_x are the Dirichlet walls
    let slopes: Vec<[Slopes; 2]> = (0..=nx)
        .map(|c| {
            let left = -grid.half_length + c as f64 * hx;
            GAUSS.map(|(th, _)| profile.slopes(left + th * hx))
        })
        .collect();

    let mut vals = vec![[0.0f64; 9]; nx * nt];
    for (c, sl_cell) in slopes.iter().enumerate() {
        for j in 0..nt {
            let jn = (j + 1) % nt;
            // local nodes: (left, j), (right, j), (left, j+1), (right, j+1)
            let mut k = [[0.0f64; 4]; 4];
            for (gx, (_, xs)) in GAUSS.iter().enumerate() {
                for (gt, (_, ts)) in GAUSS.iter().enumerate() {
                    let co = local_coefficients(&sl_cell[gx], &tangents[j][gt]);
                    let a = co.dx_h2 / (4.0 * co.h2);
                    let cc = co.dt_h2 / (4.0 * co.h2);
                    let n = [xs[0] * ts[0], xs[1] * ts[0], xs[0] * ts[1], xs[1] * ts[1]];
                    let dx = [-ts[0] * inv_hx, ts[0] * inv_hx, -ts[1] * inv_hx, ts[1] * inv_hx];
                    let dt = [-xs[0] * inv_ht, -xs[1] * inv_ht, xs[0] * inv_ht, xs[1] * inv_ht];
                    let mut r1 = [0.0; 4];
                    let mut r2 = [0.0; 4];
                    for m in 0..4 {
                        r2[m] = dt[m] - cc * n[m];
                        r1[m] = dx[m] - a * n[m] - co.s * r2[m];
                    }
                    for p in 0..4 {
                        for q in 0..4 {
                            k[p][q] += 0.25 * (r1[p] * r1[q] / co.h2 + r2[p] * r2[q]);
                        }
                    }
                }
            }
            let nodes: [(isize, usize); 4] = [
                (c as isize - 1, j),
                (c as isize, j),
                (c as isize - 1, jn),
                (c as isize, jn),
            ];
            for p in 0..4 {
                let (ip, jp) = nodes[p];
                if ip < 0 || ip as usize >= nx {
                    continue;
                }
                for q in 0..4 {
                    let (iq, jq) = nodes[q];
                    if iq < 0 || iq as usize >= nx {
                        continue;
                    }
                    let di = (iq - ip + 1) as usize;
                    let dj = if jq == jp {
                        1
                    } else if jq == (jp + 1) % nt {
                        2
                    } else {
                        0
                    };
                    vals[grid.index(ip as usize, jp)][di * 3 + dj] += k[p][q];
                }
            }
        }
    }

    let rows = (0..nx)
        .flat_map(|i| (0..nt).map(move |j| (i, j)))
        .map(|(i, j)| {
            let v = &vals[grid.index(i, j)];
            let mut row = Vec::with_capacity(9);
            for di in 0..3 {
                let ii = i as isize + di as isize - 1;
                if ii < 0 || ii as usize >= nx {
                    continue;
                }
                for dj in 0..3 {
                    let jj = (j + nt + dj - 1) % nt;
                    row.push((grid.index(ii as usize, jj), v[di * 3 + dj]));
                }
            }
            row
        })
        .collect();
    let h = SparseSymmetricMatrix::from_rows(rows);
    debug_assert!(h.is_symmetric());
    Ok(h)
}

/// Shift-invert options with the first `sigma = -1e-3, -1e-2, ...` for which
/// `H - sigma I` admits a Cholesky factorization.
fn shift_invert_options(h: &SparseSymmetricMatrix, tol: f64, order: Option<Vec<usize>>) -> Result<LanczosOptions> {
    let mut sigma = -1e-3;
    for _ in 0..30 {
        match linalg::BandCholesky::factor(h, sigma, order.as_deref()) {
            Ok(_) => {
                return Ok(LanczosOptions {
                    tol,
                    transform: SpectralTransform::ShiftInvert { sigma, order },
                    ..LanczosOptions::default()
                })
            }
            Err(Error::NotPositiveDefinite { .. }) => sigma *= 10.0,
            Err(e) => return Err(e),
        }
    }
    Err(invalid("could not find a shift below the spectrum"))
}

/// Lowest `k` eigenpairs by shift-invert block Lanczos; converged when
/// `||H v - lambda v|| <= tol ||H||_inf`.
pub fn lowest_eigs(h: &SparseSymmetricMatrix, k: usize, tol: f64) -> Result<EigenPairs> {
    let opts = shift_invert_options(h, tol, None)?;
    linalg::lowest_eigs(h, k, &opts)
}

/// As [`lowest_eigs`] for a matrix assembled on `grid`, using the narrow-band
/// elimination order.
pub fn lowest_eigs_on_grid(h: &SparseSymmetricMatrix, grid: &StripGrid, k: usize, tol: f64) -> Result<EigenPairs> {
    let opts = shift_invert_options(h, tol, Some(grid.band_order()))?;
    linalg::lowest_eigs(h, k, &opts)
}

/// Default residual tolerance relative to `||H||_inf`.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSchedule {
    /// Strip half-lengths, ascending.
    pub l_list: Vec<f64>,
    /// `(n_x, n_t)` pairs, coarse to fine.
    pub grid_list: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub half_length: f64,
    pub n_x: usize,
    pub n_t: usize,
    /// Threshold of the same discretization on this `t`-grid.
    pub threshold: f64,
    pub eigenvalues: Vec<f64>,
    pub residual_norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    pub index: usize,
    pub lambda: f64,
    /// `E1 - lambda` with the threshold of the same `t`-grid.
    pub gap: f64,
    pub margin: f64,
    pub confirmed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    /// Eigenvalues at the largest `L` and finest grid.
    pub eigenvalues: Vec<f64>,
    pub residual_norms: Vec<f64>,
    pub below_threshold: Vec<BoundState>,
    pub convergence_record: Vec<ConvergenceRow>,
    /// Threshold passed in by the caller.
    pub e1: f64,
}

/// Solve on every `(L, grid)` of the schedule and report eigenvalues below the
/// threshold.
///
/// Gaps are measured against the transverse threshold of the same discretization
/// on each `t`-grid, which is what the 2D spectrum converges to as `L` grows.
/// An eigenvalue is reported when its gap exceeds the margin (the larger of its
/// change under grid refinement and under the last `L` step) and CONFIRMED when,
/// in addition, it is below threshold in both neighbouring runs and its gap does
/// not shrink below 0.9 of theirs.
pub fn find_bound_states(
    cs: &CrossSection,
    profile: &ReferenceProfile,
    e1: f64,
    search: &SearchSchedule,
    k: usize,
) -> Result<EigenResult> {
    if search.l_list.is_empty() || search.grid_list.is_empty() {
        return Err(invalid("search schedule needs at least one L and one grid"));
    }
    if search.l_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("L_list must be strictly ascending"));
    }
    let (b1, b2) = profile.limits();
    let mut thresholds: Vec<(usize, f64)> = Vec::new();
    for &(_, nt) in &search.grid_list {
        if thresholds.iter().all(|&(n, _)| n != nt) {
            let spec = TransverseOperatorSpec::new(cs, b1, b2, nt).with_scheme(TransverseScheme::Galerkin);
            thresholds.push((nt, transverse_eigs(&spec, 1)?.e1()));
        }
    }
    let threshold_for = |nt: usize| thresholds.iter().find(|t| t.0 == nt).map(|t| t.1).unwrap();

    let mut record = Vec::new();
    for &l in &search.l_list {
        for &(nx, nt) in &search.grid_list {
            let grid = StripGrid::new(l, nx, nt)?;
            let h = assemble_form(cs, profile, &grid)?;
            let kk = k.min(grid.dim());
            let pairs = lowest_eigs_on_grid(&h, &grid, kk, DEFAULT_TOL)?;
            record.push(ConvergenceRow {
                half_length: l,
                n_x: nx,
                n_t: nt,
                threshold: threshold_for(nt),
                eigenvalues: pairs.eigenvalues,
                residual_norms: pairs.residual_norms,
            });
        }
    }
    let ng = search.grid_list.len();
    let nl = search.l_list.len();
    let row = |li: usize, gi: usize| &record[li * ng + gi];
    let last = row(nl - 1, ng - 1);
    let gap = |r: &ConvergenceRow, i: usize| r.eigenvalues.get(i).map(|&v| r.threshold - v);

    let mut below = Vec::new();
    for (i, &lambda) in last.eigenvalues.iter().enumerate() {
        let g = last.threshold - lambda;
        if !(g > 0.0) {
            continue;
        }
        let by_grid = (ng > 1).then(|| gap(row(nl - 1, ng - 2), i));
        let by_l = (nl > 1).then(|| gap(row(nl - 2, ng - 1), i));
        let mut margin = 0.0f64;
        for other in [by_grid, by_l].into_iter().flatten().flatten() {
            margin = margin.max((g - other).abs());
        }
        if !(g > margin) {
            continue;
        }
        let persists = |o: Option<Option<f64>>| matches!(o, Some(Some(og)) if og > 0.0 && g >= 0.9 * og);
        below.push(BoundState {
            index: i,
            lambda,
            gap: g,
            margin,
            confirmed: persists(by_grid) && persists(by_l),
        });
    }
    Ok(EigenResult {
        eigenvalues: last.eigenvalues.clone(),
        residual_norms: last.residual_norms.clone(),
        below_threshold: below,
        convergence_record: record,
        e1,
    })
}
