//! Variational certificates: trial functions `psi_n = w(x/n) chi(t)` and
//! `psi_{n,eps} = psi_n + eps eta(x) chi(t)` evaluated in the shifted form
//! `q(psi) = Q(psi) - E1 ||psi||^2` on the same discretization as the 2D solver.
//!
//! Each form value is computed twice, on the requested grid and on one with
//! doubled `hx` and halved `n_t`, and the error bar is one third of the
//! difference (second-order Richardson). The threshold `E1` used on each grid is
//! that of the same discretization, so the discrete form is nonnegative exactly
//! when the discrete spectrum has nothing below its own threshold.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::geometry::{CrossSection, ReferenceProfile};
use crate::linalg::{dot, SparseSymmetricMatrix};
use crate::math::exp;
use crate::potential::{compute_profile_with, BrokenConstants};
use crate::spectrum2d::{assemble_form, StripGrid};
use crate::transverse::{transverse_eigs, TransverseOperatorSpec, TransverseScheme, TransverseSpectrum};

/// Order-7 polynomial smoothstep `S(y) = 35y^4 - 84y^5 + 70y^6 - 20y^7` on `[0, 1]`.
pub fn smoothstep7(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else if y >= 1.0 {
        1.0
    } else {
        y * y * y * y * (35.0 + y * (-84.0 + y * (70.0 - 20.0 * y)))
    }
}

/// `S'(y) = 140 y^3 (1 - y)^3`.
pub fn smoothstep7_prime(y: f64) -> f64 {
    if y <= 0.0 || y >= 1.0 {
        0.0
    } else {
        let z = y * (1.0 - y);
        140.0 * z * z * z
    }
}

/// Cutoff: 1 on `[-1, 1]`, 0 outside `[-2, 2]`.
pub fn cutoff(x: f64) -> f64 {
    1.0 - smoothstep7(x.abs() - 1.0)
}

pub fn cutoff_prime(x: f64) -> f64 {
    let d = -smoothstep7_prime(x.abs() - 1.0);
    if x < 0.0 {
        -d
    } else {
        d
    }
}

/// `int |w'|^2 dx = 2 * 140^2 * B(7, 7) = 2 * 19600 * 6!^2 / 13!`.
pub const CUTOFF_ENERGY: f64 = 2.0 * 19600.0 * 518_400.0 / 6_227_020_800.0;

/// Bump `exp(1 - 1/(1 - x^2))` on `(-1, 1)`, with `eta(0) = 1`.
pub fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        exp(1.0 - 1.0 / (1.0 - x * x))
    }
}

pub fn bump_prime(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        let d = 1.0 - x * x;
        -2.0 * x / (d * d) * bump(x)
    }
}

/// The trial family at scale `n` with perturbation `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialFamily {
    pub n: f64,
    pub epsilon: f64,
}

impl TrialFamily {
    pub fn w_n(&self, x: f64) -> f64 {
        cutoff(x / self.n)
    }

    pub fn w_n_prime(&self, x: f64) -> f64 {
        cutoff_prime(x / self.n) / self.n
    }

    pub fn eta(&self, x: f64) -> f64 {
        bump(x)
    }

    /// `psi_{n,eps}(x, t)` given `chi(t)`.
    pub fn psi(&self, x: f64, chi_t: f64) -> f64 {
        (self.w_n(x) + self.epsilon * bump(x)) * chi_t
    }

    /// `int |w_n'|^2 = CUTOFF_ENERGY / n`.
    pub fn cutoff_energy(&self) -> f64 {
        CUTOFF_ENERGY / self.n
    }
}

/// A function sampled on the nodes of a strip grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedTrial {
    pub grid: StripGrid,
    pub values: Vec<f64>,
}

impl GriddedTrial {
    /// `u(x) chi(t)` with `chi` sampled on the grid's `t` nodes.
    pub fn separable(grid: StripGrid, u: impl Fn(f64) -> f64, chi: &[f64]) -> Result<Self> {
        if chi.len() != grid.n_t {
            return Err(invalid(format!(
                "chi has {} samples, grid has n_t = {}",
                chi.len(),
                grid.n_t
            )));
        }
        let mut values = Vec::with_capacity(grid.dim());
        for i in 0..grid.n_x {
            let ux = u(grid.x(i));
            values.extend(chi.iter().map(|c| ux * c));
        }
        Ok(GriddedTrial { grid, values })
    }

    /// `||psi||^2 = hx ht sum psi^2`.
    pub fn norm_sq(&self) -> f64 {
        self.grid.cell_area() * dot(&self.values, &self.values)
    }

    fn check_support(&self) -> Result<()> {
        let g = &self.grid;
        let nt = g.n_t;
        let edge = |i: usize| self.values[i * nt..(i + 1) * nt].iter().any(|v| *v != 0.0);
        if edge(0) || edge(g.n_x - 1) {
            let lo = self.first_nonzero_x().unwrap_or(-g.half_length);
            let hi = self.last_nonzero_x().unwrap_or(g.half_length);
            return Err(Error::TruncatedSupport {
                lo,
                hi,
                half_length: g.half_length,
            });
        }
        Ok(())
    }

    fn first_nonzero_x(&self) -> Option<f64> {
        let nt = self.grid.n_t;
        (0..self.grid.n_x)
            .find(|&i| self.values[i * nt..(i + 1) * nt].iter().any(|v| *v != 0.0))
            .map(|i| self.grid.x(i))
    }

    fn last_nonzero_x(&self) -> Option<f64> {
        let nt = self.grid.n_t;
        (0..self.grid.n_x)
            .rev()
            .find(|&i| self.values[i * nt..(i + 1) * nt].iter().any(|v| *v != 0.0))
            .map(|i| self.grid.x(i))
    }
}

/// `q(psi) = hx ht (psi^T H psi - E1 psi^T psi)` with `H` assembled on the
/// trial's grid.
pub fn evaluate_shifted_form(
    cs: &CrossSection,
    profile: &ReferenceProfile,
    psi: &GriddedTrial,
    e1: f64,
) -> Result<f64> {
    psi.check_support()?;
    let h = assemble_form(cs, profile, &psi.grid)?;
    Ok(shifted_bilinear(&h, psi, psi, e1))
}

/// `q(psi, phi)` for a matrix already assembled on the common grid.
pub fn shifted_bilinear(h: &SparseSymmetricMatrix, psi: &GriddedTrial, phi: &GriddedTrial, e1: f64) -> f64 {
    let area = psi.grid.cell_area();
    area * (h.bilinear(&psi.values, &phi.values) - e1 * dot(&psi.values, &phi.values))
}

/// Rayleigh quotient `psi^T H psi / psi^T psi` of `(w_n + eps eta) chi` on `grid`,
/// with `chi` the context's fine ground state. `grid.n_t` must match it.
pub fn rayleigh_quotient_on(ctx: &CertificateContext, grid: StripGrid, n: f64, epsilon: f64) -> Result<f64> {
    let fam = TrialFamily { n, epsilon };
    let psi = GriddedTrial::separable(grid, |x| fam.w_n(x) + epsilon * bump(x), &ctx.fine.chi)?;
    psi.check_support()?;
    let h = assemble_form(ctx.cs, ctx.profile, &grid)?;
    Ok(h.bilinear(&psi.values, &psi.values) / dot(&psi.values, &psi.values))
}

/// Everything a certificate needs: the geometry, the ground states of the
/// Galerkin transverse operator on the fine and coarse `t`-grids, and the target
/// `x` spacing.
#[derive(Debug, Clone)]
pub struct CertificateContext<'a> {
    pub cs: &'a CrossSection,
    pub profile: &'a ReferenceProfile,
    pub fine: TransverseSpectrum,
    pub coarse: TransverseSpectrum,
    /// Largest admissible `x` spacing on the fine grid.
    pub hx: f64,
    /// Free space between the trial support and the Dirichlet walls.
    pub pad: f64,
}

/// Multiplier on the error bar required for certification.
pub const CERT_SIGMA: f64 = 5.0;

impl<'a> CertificateContext<'a> {
    pub fn new(cs: &'a CrossSection, profile: &'a ReferenceProfile, n_t: usize, hx: f64) -> Result<Self> {
        if !n_t.is_multiple_of(2) || n_t < 64 {
            return Err(invalid(format!("certificate n_t must be even and >= 64, got {n_t}")));
        }
        if !(hx > 0.0 && hx.is_finite()) {
            return Err(invalid(format!("hx must be positive, got {hx}")));
        }
        let (b1, b2) = profile.limits();
        let spec = TransverseOperatorSpec::new(cs, b1, b2, n_t).with_scheme(TransverseScheme::Galerkin);
        Ok(CertificateContext {
            cs,
            profile,
            fine: transverse_eigs(&spec, 2)?,
            coarse: transverse_eigs(&spec.with_grid(n_t / 2), 2)?,
            hx,
            pad: 1.0,
        })
    }

    /// Fine and coarse grids on `[-half, half]`.
    fn grids(&self, support: f64) -> Result<(StripGrid, StripGrid)> {
        let l = support + self.pad;
        // fine n_x + 1 = 2 (coarse n_x + 1), both odd
        let mut m = libm::ceil(2.0 * l / (2.0 * self.hx)) as usize;
        m = m.max(34);
        if m % 2 == 1 {
            m += 1;
        }
        let coarse = StripGrid::new(l, m - 1, self.coarse.grid_size)?;
        let fine = StripGrid::new(l, 2 * m - 1, self.fine.grid_size)?;
        Ok((fine, coarse))
    }
}

/// Values of a separable trial's quadratic pieces on one grid.
struct Evaluation {
    q_psi: f64,
    cross: f64,
    q_phi: f64,
    psi_h_psi: f64,
    psi_psi: f64,
    phi_h_phi: f64,
    phi_phi: f64,
    psi_h_phi: f64,
    psi_phi: f64,
}

fn evaluate_pair(
    ctx: &CertificateContext,
    grid: StripGrid,
    chi: &TransverseSpectrum,
    n: f64,
    with_phi: bool,
) -> Result<Evaluation> {
    let fam = TrialFamily { n, epsilon: 0.0 };
    let h = assemble_form(ctx.cs, ctx.profile, &grid)?;
    let psi = GriddedTrial::separable(grid, |x| fam.w_n(x), &chi.chi)?;
    psi.check_support()?;
    let e1 = chi.e1();
    let area = grid.cell_area();
    let psi_h_psi = area * h.bilinear(&psi.values, &psi.values);
    let psi_psi = psi.norm_sq();
    let mut ev = Evaluation {
        q_psi: psi_h_psi - e1 * psi_psi,
        cross: 0.0,
        q_phi: 0.0,
        psi_h_psi,
        psi_psi,
        phi_h_phi: 0.0,
        phi_phi: 0.0,
        psi_h_phi: 0.0,
        psi_phi: 0.0,
    };
    if with_phi {
        let phi = GriddedTrial::separable(grid, bump, &chi.chi)?;
        ev.phi_h_phi = area * h.bilinear(&phi.values, &phi.values);
        ev.phi_phi = phi.norm_sq();
        ev.psi_h_phi = area * h.bilinear(&psi.values, &phi.values);
        ev.psi_phi = area * dot(&psi.values, &phi.values);
        ev.q_phi = ev.phi_h_phi - e1 * ev.phi_phi;
        ev.cross = ev.psi_h_phi - e1 * ev.psi_phi;
    }
    Ok(ev)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendPoint {
    pub n: f64,
    pub q_value: f64,
    pub error_bar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateResult {
    pub theorem: &'static str,
    pub n: f64,
    pub epsilon: f64,
    pub q_value: f64,
    pub error_bar: f64,
    /// `q_value < -CERT_SIGMA * error_bar`.
    pub certified: bool,
    /// `psi^T H psi / psi^T psi` of the reported trial on the fine grid.
    pub rayleigh_quotient: f64,
    /// Threshold of the fine-grid discretization that `q` is measured against.
    pub threshold: f64,
    /// Thm2: `q(psi_n)` for every `n` of the schedule.
    pub trend: Vec<TrendPoint>,
    /// Thm3/Thm5: `q(psi_n, phi)` and `q(phi)`.
    pub cross_term: Option<f64>,
    pub q_phi: Option<f64>,
    /// Closed-form limit of the cross term from the 1D quantities.
    pub cross_term_limit: Option<f64>,
    /// `(epsilon, q(psi_{n,epsilon}))` at `0.9 eps*`, `eps*`, `1.1 eps*` and any
    /// extra requested values.
    pub epsilon_scan: Vec<(f64, f64)>,
}

/// Sweep `psi_n = w_n chi` over `n_schedule`; certified at the first `n` with
/// `q < -5 err`. All `n` are evaluated so the trend towards `int V` is recorded.
pub fn certify_thm2(ctx: &CertificateContext, n_schedule: &[f64]) -> Result<CertificateResult> {
    if n_schedule.is_empty() {
        return Err(invalid("empty n schedule"));
    }
    let mut trend = Vec::with_capacity(n_schedule.len());
    let mut chosen: Option<(f64, f64, f64, f64)> = None;
    let mut last = (0.0, 0.0, 0.0, 0.0);
    for &n in n_schedule {
        let (gf, gc) = ctx.grids(2.0 * n)?;
        let f = evaluate_pair(ctx, gf, &ctx.fine, n, false)?;
        let c = evaluate_pair(ctx, gc, &ctx.coarse, n, false)?;
        let err = (f.q_psi - c.q_psi).abs() / 3.0;
        trend.push(TrendPoint {
            n,
            q_value: f.q_psi,
            error_bar: err,
        });
        let rq = f.psi_h_psi / f.psi_psi;
        last = (n, f.q_psi, err, rq);
        if chosen.is_none() && f.q_psi < -CERT_SIGMA * err {
            chosen = Some(last);
        }
    }
    let (n, q, err, rq) = chosen.unwrap_or(last);
    Ok(CertificateResult {
        theorem: "Thm2",
        n,
        epsilon: 0.0,
        q_value: q,
        error_bar: err,
        certified: chosen.is_some(),
        rayleigh_quotient: rq,
        threshold: ctx.fine.e1(),
        trend,
        cross_term: None,
        q_phi: None,
        cross_term_limit: None,
        epsilon_scan: Vec::new(),
    })
}

fn perturbed(
    ctx: &CertificateContext,
    theorem: &'static str,
    n: f64,
    eps_extra: &[f64],
    limit: Option<f64>,
) -> Result<CertificateResult> {
    if !(n >= 1.0) {
        return Err(invalid(format!("n must be >= 1, got {n}")));
    }
    let (gf, gc) = ctx.grids(2.0 * n)?;
    let f = evaluate_pair(ctx, gf, &ctx.fine, n, true)?;
    let c = evaluate_pair(ctx, gc, &ctx.coarse, n, true)?;
    if !(f.q_phi > 0.0) {
        return Err(Error::DegenerateQuadratic { q_phi: f.q_phi });
    }
    let q_of = |e: &Evaluation, eps: f64| e.q_psi + 2.0 * eps * e.cross + eps * eps * e.q_phi;
    let eps = -f.cross / f.q_phi;
    let q = q_of(&f, eps);
    let eps_c = if c.q_phi > 0.0 { -c.cross / c.q_phi } else { eps };
    let err = (q - q_of(&c, eps_c)).abs() / 3.0;
    let num = f.psi_h_psi + 2.0 * eps * f.psi_h_phi + eps * eps * f.phi_h_phi;
    let den = f.psi_psi + 2.0 * eps * f.psi_phi + eps * eps * f.phi_phi;
    let mut scan: Vec<(f64, f64)> = [0.9 * eps, eps, 1.1 * eps]
        .iter()
        .chain(eps_extra)
        .map(|&e| (e, q_of(&f, e)))
        .collect();
    scan.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(CertificateResult {
        theorem,
        n,
        epsilon: eps,
        q_value: q,
        error_bar: err,
        certified: q < -CERT_SIGMA * err,
        rayleigh_quotient: num / den,
        threshold: ctx.fine.e1(),
        trend: Vec::new(),
        cross_term: Some(f.cross),
        q_phi: Some(f.q_phi),
        cross_term_limit: limit,
        epsilon_scan: scan,
    })
}

/// `int (eta' B / 2 + eta V) dx` from the 1D profiles (the large-`n` limit of the
/// cross term), by Simpson on `[-1, 1]`.
fn thm3_limit(ctx: &CertificateContext) -> Result<f64> {
    let m = 400;
    let xs: Vec<f64> = (0..=m).map(|i| -1.0 + 2.0 * i as f64 / m as f64).collect();
    let epp = compute_profile_with(ctx.cs, ctx.profile, &xs, &ctx.fine)?;
    let h = 2.0 / m as f64;
    let mut s = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let wgt = if i == 0 || i == m {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        s += wgt * (0.5 * bump_prime(x) * epp.b[i] + bump(x) * epp.v[i]);
    }
    Ok(s * h / 3.0)
}

/// `psi_{n,eps} = w_n chi + eps eta chi` with the exact minimizing `eps`.
/// `eps_schedule` adds extra points to the reported scan.
pub fn certify_thm3(ctx: &CertificateContext, n: f64, eps_schedule: &[f64]) -> Result<CertificateResult> {
    if ctx.profile.is_broken() {
        return Err(Error::WrongProfileKind { expected: "smooth" });
    }
    let limit = thm3_limit(ctx)?;
    perturbed(ctx, "Thm3", n, eps_schedule, Some(limit))
}

/// Broken-waveguide certificate. Requires `|B| > 10 * quadrature_error`; the
/// cross term's closed-form limit is `-beta B eta(0)`.
pub fn certify_thm5_broken(ctx: &CertificateContext, n: f64, constants: &BrokenConstants) -> Result<CertificateResult> {
    let beta = match ctx.profile {
        ReferenceProfile::Broken { beta } => *beta,
        _ => return Err(Error::WrongProfileKind { expected: "broken" }),
    };
    if constants.beta != beta {
        return Err(invalid("broken constants were computed for a different beta"));
    }
    if !(constants.b_const.abs() > 10.0 * constants.quadrature_error) {
        return Err(Error::Precondition(format!(
            "|B| = {:.3e} does not exceed 10x its error {:.3e}; the certificate needs a nonzero B, which symmetric cross-sections rule out",
            constants.b_const.abs(),
            constants.quadrature_error
        )));
    }
    perturbed(ctx, "Thm5", n, &[], Some(-beta * constants.b_const * bump(0.0)))
}
