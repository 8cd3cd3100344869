//! The periodic transverse operator
//! `T v = -(kappa v'/h^2)' + kappa [((h^2)'/4h^4)' + ((h^2)'/4h^3)^2] v`,
//! `kappa = 1 + beta1^2 + beta2^2`, its fibers `H(p)` and the threshold `E1(0)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Complex;

use crate::error::{invalid, Error, Result};
use crate::geometry::{local_coefficients, CrossSection, Slopes, Tangent};
use crate::linalg::{hermitian_eigenvalues, symmetric_eigenvalues, BandCholesky, SparseSymmetricMatrix};
use crate::math::sqrt;
use crate::spectral;

/// Two-point Gauss rule on `[0, 1]`, stored as the values of the left and right
/// linear shape functions at the first node: `(N_left, N_right) = (GAUSS_HI, GAUSS_LO)`
/// at the first point and swapped at the second. Sharing the two constants keeps
/// mirrored cells bitwise identical.
pub(crate) const GAUSS_LO: f64 = 0.5 - 0.288_675_134_594_812_9;
pub(crate) const GAUSS_HI: f64 = 0.5 + 0.288_675_134_594_812_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransverseScheme {
    /// Conservative second-order finite differences: midpoint coefficients
    /// `kappa / h^2` in divergence form plus the potential on the diagonal, whose
    /// inner derivative is taken spectrally.
    #[default]
    Divergence,
    /// Linear elements with two-point Gauss quadrature and lumped mass applied to
    /// the form `int kappa/h^2 |v' - (h^2)'/(4h^2) v|^2`. This is exactly the
    /// x-independent restriction of the 2D strip discretization, so it gives the
    /// threshold that 2D eigenvalues converge to on a fixed `t`-grid.
    Galerkin,
}

#[derive(Debug, Clone, Copy)]
pub struct TransverseOperatorSpec<'a> {
    pub cs: &'a CrossSection,
    pub beta1: f64,
    pub beta2: f64,
    pub n_grid: usize,
    pub scheme: TransverseScheme,
}

impl<'a> TransverseOperatorSpec<'a> {
    pub fn new(cs: &'a CrossSection, beta1: f64, beta2: f64, n_grid: usize) -> Self {
        TransverseOperatorSpec {
            cs,
            beta1,
            beta2,
            n_grid,
            scheme: TransverseScheme::default(),
        }
    }

    /// Transverse operator of the broken waveguide with slope `beta`:
    /// `h_beta^2 = 1 + beta^2 xi1'^2`, i.e. slopes `(0, beta)`.
    pub fn broken(cs: &'a CrossSection, beta: f64, n_grid: usize) -> Self {
        Self::new(cs, 0.0, beta, n_grid)
    }

    pub fn with_scheme(mut self, scheme: TransverseScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_grid(mut self, n_grid: usize) -> Self {
        self.n_grid = n_grid;
        self
    }

    pub fn kappa(&self) -> f64 {
        1.0 + self.beta1 * self.beta1 + self.beta2 * self.beta2
    }

    pub(crate) fn slopes(&self) -> Slopes {
        Slopes {
            fp: self.beta1,
            gp: self.beta2,
            fpp: 0.0,
            gpp: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid < 32 {
            return Err(invalid(format!(
                "transverse grid needs n_grid >= 32, got {}",
                self.n_grid
            )));
        }
        if !(self.beta1.is_finite() && self.beta2.is_finite()) {
            return Err(invalid("non-finite slope"));
        }
        Ok(())
    }
}

/// Periodic ordering `0, 1, N-1, 2, N-2, ...` that turns a cyclic tridiagonal
/// matrix into one of half-bandwidth 2.
pub fn ring_order(n: usize) -> Vec<usize> {
    let mut o = Vec::with_capacity(n);
    o.push(0);
    let (mut lo, mut hi) = (1, n - 1);
    while lo <= hi {
        o.push(lo);
        if hi != lo {
            o.push(hi);
        }
        lo += 1;
        hi -= 1;
    }
    o
}

fn tangent_at_offset(cs: &CrossSection, j: usize, theta: f64, n: usize) -> Tangent {
    cs.tangent_at((j as f64 + theta) / n as f64)
}

/// Diagonal potential `kappa [F' + ((h^2)'/4h^3)^2]`, `F = (h^2)'/4h^4`, at the nodes.
fn divergence_potential(spec: &TransverseOperatorSpec) -> Vec<f64> {
    let n = spec.n_grid;
    let sl = spec.slopes();
    let kappa = spec.kappa();
    let coeff: Vec<_> = spec
        .cs
        .tangents(n)
        .iter()
        .map(|tg| local_coefficients(&sl, tg))
        .collect();
    let f: Vec<f64> = coeff.iter().map(|c| c.dt_h2 / (4.0 * c.h2 * c.h2)).collect();
    let df = spectral::derivative(&f);
    coeff
        .iter()
        .zip(&df)
        .map(|(c, d)| {
            let q = c.dt_h2 / (4.0 * c.h2 * sqrt(c.h2));
            kappa * (d + q * q)
        })
        .collect()
}

/// Local `2 x 2` Gauss-Galerkin element contributions on the element
/// `[t_j, t_j+1]`, already divided by the lumped mass `ht`.
fn galerkin_element(spec: &TransverseOperatorSpec, j: usize) -> [[f64; 2]; 2] {
    let n = spec.n_grid;
    let inv_ht = n as f64;
    let sl = spec.slopes();
    let mut k = [[0.0; 2]; 2];
    for (theta, shape) in [(GAUSS_LO, [GAUSS_HI, GAUSS_LO]), (GAUSS_HI, [GAUSS_LO, GAUSS_HI])] {
        let c = local_coefficients(&sl, &tangent_at_offset(spec.cs, j, theta, n));
        let cc = c.dt_h2 / (4.0 * c.h2);
        let r2 = [-inv_ht - cc * shape[0], inv_ht - cc * shape[1]];
        let r1 = [-c.s * r2[0], -c.s * r2[1]];
        for a in 0..2 {
            for b in 0..2 {
                k[a][b] += 0.5 * (r1[a] * r1[b] / c.h2 + r2[a] * r2[b]);
            }
        }
    }
    k
}

/// Dense row-major `N x N` matrix of the transverse operator.
pub fn assemble_transverse(spec: &TransverseOperatorSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.n_grid;
    let mut m = vec![0.0; n * n];
    match spec.scheme {
        TransverseScheme::Divergence => {
            let sl = spec.slopes();
            let kappa = spec.kappa();
            let inv_h2 = (n * n) as f64;
            let w = divergence_potential(spec);
            for i in 0..n {
                let c = local_coefficients(&sl, &tangent_at_offset(spec.cs, i, 0.5, n));
                let a = kappa / c.h2 * inv_h2;
                let ip = (i + 1) % n;
                m[i * n + i] += a;
                m[ip * n + ip] += a;
                m[i * n + ip] -= a;
                m[ip * n + i] -= a;
            }
            for i in 0..n {
                m[i * n + i] += w[i];
            }
        }
        TransverseScheme::Galerkin => {
            for j in 0..n {
                let k = galerkin_element(spec, j);
                let idx = [j, (j + 1) % n];
                for a in 0..2 {
                    for b in 0..2 {
                        m[idx[a] * n + idx[b]] += k[a][b];
                    }
                }
            }
        }
    }
    Ok(m)
}

/// Dense row-major complex Hermitian fiber matrix
/// `H(p) = T + p^2 diag(1/h^2) + i p (A D + D A)`, `A = diag(s/h^2)`, `D` the
/// centered difference.
pub fn assemble_fiber(spec: &TransverseOperatorSpec, p: f64) -> Result<Vec<Complex<f64>>> {
    let t = assemble_transverse(spec)?;
    let n = spec.n_grid;
    let sl = spec.slopes();
    let coeff: Vec<_> = spec
        .cs
        .tangents(n)
        .iter()
        .map(|tg| local_coefficients(&sl, tg))
        .collect();
    let mut h: Vec<Complex<f64>> = t.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let half_inv_ht = 0.5 * n as f64;
    for i in 0..n {
        h[i * n + i].re += p * p / coeff[i].h2;
    }
    for i in 0..n {
        let ip = (i + 1) % n;
        let ai = coeff[i].s / coeff[i].h2;
        let aj = coeff[ip].s / coeff[ip].h2;
        // (A D + D A)[i][i+1] = (a_i + a_{i+1}) / 2ht, skew-symmetric
        let v = p * (ai + aj) * half_inv_ht;
        h[i * n + ip].im += v;
        h[ip * n + i].im -= v;
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransverseSpectrum {
    /// Lowest `k` eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Ground eigenfunction on `t_j = j / N`, trapezoid-normalized, positive mean.
    pub chi: Vec<f64>,
    pub grid_size: usize,
    pub spectral_gap: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub scheme: TransverseScheme,
}

impl TransverseSpectrum {
    pub fn e1(&self) -> f64 {
        self.eigenvalues[0]
    }
}

fn dense_to_sparse(m: &[f64], n: usize) -> SparseSymmetricMatrix {
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| m[i * n + j] != 0.0)
                .map(|j| (j, m[i * n + j]))
                .collect()
        })
        .collect();
    SparseSymmetricMatrix::from_rows(rows)
}

/// Ground state by shifted inverse iteration, returning the refined Rayleigh
/// quotient and the unit (Euclidean) vector.
fn ground_state(m: &[f64], n: usize, lambda1: f64, gap: f64) -> Result<(f64, Vec<f64>)> {
    let sparse = dense_to_sparse(m, n);
    let order = ring_order(n);
    let mut delta = 1e-2 * gap;
    let fac = loop {
        match BandCholesky::factor(&sparse, lambda1 - delta, Some(&order)) {
            Ok(f) => break f,
            Err(Error::NotPositiveDefinite { .. }) if delta < gap => delta *= 4.0,
            Err(e) => return Err(e),
        }
    };
    let mut x = vec![1.0 / sqrt(n as f64); n];
    for _ in 0..60 {
        let mut y = fac.solve(&x);
        let ny = sqrt(y.iter().map(|v| v * v).sum());
        let s: f64 = y.iter().sum();
        let sign = if s < 0.0 { -1.0 } else { 1.0 };
        for v in y.iter_mut() {
            *v *= sign / ny;
        }
        let diff = sqrt(y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum());
        x = y;
        if diff < 1e-15 {
            break;
        }
    }
    let mx = sparse.apply(&x);
    let rq = x.iter().zip(&mx).map(|(a, b)| a * b).sum::<f64>();
    Ok((rq, x))
}

/// Lowest `k` eigenpairs of the assembled transverse matrix.
pub fn transverse_eigs(spec: &TransverseOperatorSpec, k: usize) -> Result<TransverseSpectrum> {
    let n = spec.n_grid;
    if k == 0 || k > n / 2 {
        return Err(invalid(format!("k must be in 1..={}, got {k}", n / 2)));
    }
    let m = assemble_transverse(spec)?;
    let all = symmetric_eigenvalues(&m, n);
    let gap = all[1] - all[0];
    if !(gap >= 1e-12) {
        return Err(Error::DegenerateGroundState { gap });
    }
    let (rq, v) = ground_state(&m, n, all[0], gap)?;
    let scale = sqrt(n as f64);
    let chi: Vec<f64> = v.iter().map(|x| x * scale).collect();
    let mut eigenvalues: Vec<f64> = all[..k].to_vec();
    eigenvalues[0] = rq;
    Ok(TransverseSpectrum {
        spectral_gap: all[1] - rq,
        eigenvalues,
        chi,
        grid_size: n,
        beta1: spec.beta1,
        beta2: spec.beta2,
        scheme: spec.scheme,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberBand {
    pub p: f64,
    pub eigenvalues: Vec<f64>,
}

/// Lowest `k` eigenvalues of the fiber at momentum `p`.
pub fn fiber_band(spec: &TransverseOperatorSpec, p: f64, k: usize) -> Result<FiberBand> {
    let n = spec.n_grid;
    if k == 0 || k > n {
        return Err(invalid(format!("k must be in 1..={n}, got {k}")));
    }
    let h = assemble_fiber(spec, p)?;
    let ev = hermitian_eigenvalues(&h, n);
    Ok(FiberBand {
        p,
        eigenvalues: ev[..k].to_vec(),
    })
}

/// Fiber bands at every momentum in `ps`, returned sorted by `p`.
pub fn band_sweep(spec: &TransverseOperatorSpec, ps: &[f64], k: usize) -> Result<Vec<FiberBand>> {
    let mut ps = ps.to_vec();
    ps.sort_by(f64::total_cmp);
    ps.iter().map(|&p| fiber_band(spec, p, k)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    /// Richardson-extrapolated `E1(0)`.
    pub e1: f64,
    /// `|E1(N) - E1(N/2)| / 3`.
    pub error_estimate: f64,
    /// Unextrapolated values at `N` and `N/2`.
    pub e1_fine: f64,
    pub e1_coarse: f64,
    /// Ground state at the fine grid.
    pub spectrum: TransverseSpectrum,
}

impl Threshold {
    /// `chi` resampled on an `m`-point grid by trigonometric interpolation.
    pub fn chi_on(&self, m: usize) -> Vec<f64> {
        spectral::resample(&self.spectrum.chi, m)
    }
}

/// Essential-spectrum threshold from solves at `n_grid` and `n_grid / 2`.
pub fn essential_threshold(cs: &CrossSection, beta1: f64, beta2: f64, n_grid: usize) -> Result<Threshold> {
    essential_threshold_with(&TransverseOperatorSpec::new(cs, beta1, beta2, n_grid))
}

/// As [`essential_threshold`] with an explicit scheme.
pub fn essential_threshold_with(spec: &TransverseOperatorSpec) -> Result<Threshold> {
    if !spec.n_grid.is_multiple_of(2) || spec.n_grid < 64 {
        return Err(invalid(format!(
            "threshold needs an even n_grid >= 64 so that n_grid/2 is a valid grid, got {}",
            spec.n_grid
        )));
    }
    let fine = transverse_eigs(spec, 2)?;
    let coarse = transverse_eigs(&spec.with_grid(spec.n_grid / 2), 2)?;
    let (ef, ec) = (fine.e1(), coarse.e1());
    Ok(Threshold {
        e1: (4.0 * ef - ec) / 3.0,
        error_estimate: (ef - ec).abs() / 3.0,
        e1_fine: ef,
        e1_coarse: ec,
        spectrum: fine,
    })
}
