//! The effective potential `V(x) = C(x) + (1 + f'^2 + g'^2) D(x) - kappa E`, the
//! auxiliary profiles `A`, `B`, the broken-waveguide constants and the theorem
//! classifier.
//!
//! Outer `t`-derivatives `d/dt(F) chi^2` are integrated by parts against the
//! spectral derivative of `chi^2`; because the spectral differentiation matrix is
//! skew-symmetric this equals the trapezoid rule applied to the spectrally
//! differentiated `F` exactly, without ever differentiating `F`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::geometry::{local_coefficients, CrossSection, ReferenceProfile, Slopes, Tangent};
use crate::math::sqrt;
use crate::spectral;
use crate::transverse::{transverse_eigs, TransverseOperatorSpec, TransverseSpectrum};

/// `A, B, C, D` at one `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialTerms {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone)]
struct Level {
    tangents: Vec<Tangent>,
    chi2: Vec<f64>,
    dchi2: Vec<f64>,
    dchi_sq: Vec<f64>,
}

impl Level {
    fn new(cs: &CrossSection, chi: &[f64]) -> Self {
        let n = chi.len();
        let chi2: Vec<f64> = chi.iter().map(|v| v * v).collect();
        let dchi2 = spectral::derivative(&chi2);
        let dchi_sq = spectral::derivative(chi).iter().map(|v| v * v).collect();
        Level {
            tangents: cs.tangents(n),
            chi2,
            dchi2,
            dchi_sq,
        }
    }

    fn terms(&self, sl: &Slopes) -> PotentialTerms {
        let n = self.chi2.len() as f64;
        let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
        for (j, tg) in self.tangents.iter().enumerate() {
            let k = local_coefficients(sl, tg);
            let (h2, dt, dx, s) = (k.h2, k.dt_h2, k.dx_h2, k.s);
            let h4 = h2 * h2;
            let h3 = h2 * sqrt(h2);
            let (w, dw, wp) = (self.chi2[j], self.dchi2[j], self.dchi_sq[j]);
            a += w / h2;
            b += (s * dt - dx) / (2.0 * h4) * w - s / h2 * dw;
            let qx = dx / (4.0 * h3);
            c += qx * qx * w + s * dx / (4.0 * h4) * dw - s * dx * dt / (8.0 * h4 * h2) * w;
            let qt = dt / (4.0 * h3);
            d += wp / h2 - dt / (4.0 * h4) * dw + qt * qt * w;
        }
        PotentialTerms {
            a: a / n,
            b: b / n,
            c: c / n,
            d: d / n,
        }
    }
}

/// Per-`x` evaluator of `A..D` for a fixed cross-section and ground state.
#[derive(Debug, Clone)]
pub struct PotentialKernel {
    fine: Level,
    half: Option<Level>,
    pub beta1: f64,
    pub beta2: f64,
    /// `E`, the `D` functional at the limiting slopes.
    pub e_const: f64,
}

impl PotentialKernel {
    /// `chi` must be the ground state of the transverse operator at the limiting
    /// slopes, sampled on a uniform grid.
    pub fn new(cs: &CrossSection, chi: &[f64], beta1: f64, beta2: f64) -> Self {
        let fine = Level::new(cs, chi);
        let half = if chi.len().is_multiple_of(2) {
            let sub: Vec<f64> = chi.iter().step_by(2).copied().collect();
            Some(Level::new(cs, &sub))
        } else {
            None
        };
        let limit = Slopes {
            fp: beta1,
            gp: beta2,
            fpp: 0.0,
            gpp: 0.0,
        };
        let e_const = fine.terms(&limit).d;
        PotentialKernel {
            fine,
            half,
            beta1,
            beta2,
            e_const,
        }
    }

    pub fn kappa(&self) -> f64 {
        1.0 + self.beta1 * self.beta1 + self.beta2 * self.beta2
    }

    pub fn terms(&self, sl: &Slopes) -> PotentialTerms {
        self.fine.terms(sl)
    }

    /// `V` from the terms at `x`.
    pub fn v(&self, sl: &Slopes, t: &PotentialTerms) -> f64 {
        t.c + (1.0 + sl.fp * sl.fp + sl.gp * sl.gp) * t.d - self.kappa() * self.e_const
    }

    pub fn v_at(&self, profile: &ReferenceProfile, x: f64) -> f64 {
        let sl = profile.slopes(x);
        self.v(&sl, &self.terms(&sl))
    }

    /// Largest change of `(A, B, V)` at `x` when every other quadrature node is
    /// dropped.
    fn halving_difference(&self, sl: &Slopes, full: &PotentialTerms) -> f64 {
        match &self.half {
            None => 0.0,
            Some(h) => {
                let t = h.terms(sl);
                let e_half = h.terms(&Slopes {
                    fp: self.beta1,
                    gp: self.beta2,
                    fpp: 0.0,
                    gpp: 0.0,
                });
                let v_half = t.c + (1.0 + sl.fp * sl.fp + sl.gp * sl.gp) * t.d - self.kappa() * e_half.d;
                (t.a - full.a)
                    .abs()
                    .max((t.b - full.b).abs())
                    .max((v_half - self.v(sl, full)).abs())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectivePotentialProfile {
    pub x_grid: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub v: Vec<f64>,
    pub e_const: f64,
    /// Largest of the trapezoid-halving difference and one third of the change
    /// against the solve at `n_t / 2`, over all `x` and the `A`, `B`, `V` arrays.
    pub quadrature_error: f64,
    /// `V` recomputed from the ground state at `n_t / 2`; used to estimate the
    /// transverse-resolution error of integrals of `V`.
    pub v_coarse: Vec<f64>,
    pub beta1: f64,
    pub beta2: f64,
    /// `E1` of the transverse solve at `n_t` (unextrapolated).
    pub e1: f64,
    pub n_t: usize,
}

impl EffectivePotentialProfile {
    pub fn kappa(&self) -> f64 {
        1.0 + self.beta1 * self.beta1 + self.beta2 * self.beta2
    }

    /// `max B - min B`.
    pub fn b_variation(&self) -> f64 {
        let mx = self.b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mn = self.b.iter().copied().fold(f64::INFINITY, f64::min);
        mx - mn
    }
}

/// Uniform grid `lo, lo + step, ..., hi` (the count is rounded to the nearest
/// integer number of steps).
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && hi > lo && step.is_finite() && lo.is_finite() && hi.is_finite()) {
        return Err(invalid(format!("bad grid [{lo}, {hi}] step {step}")));
    }
    let n = libm::round((hi - lo) / step) as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

fn profile_on_grid(
    kernel: &PotentialKernel,
    coarse: &PotentialKernel,
    profile: &ReferenceProfile,
    x_grid: &[f64],
    e1: f64,
    n_t: usize,
) -> EffectivePotentialProfile {
    let m = x_grid.len();
    let mut out = EffectivePotentialProfile {
        x_grid: x_grid.to_vec(),
        a: Vec::with_capacity(m),
        b: Vec::with_capacity(m),
        c: Vec::with_capacity(m),
        d: Vec::with_capacity(m),
        v: Vec::with_capacity(m),
        e_const: kernel.e_const,
        quadrature_error: 0.0,
        v_coarse: Vec::with_capacity(m),
        beta1: kernel.beta1,
        beta2: kernel.beta2,
        e1,
        n_t,
    };
    let mut err = 0.0f64;
    for &x in x_grid {
        let sl = profile.slopes(x);
        let t = kernel.terms(&sl);
        let v = kernel.v(&sl, &t);
        let tc = coarse.terms(&sl);
        let vc = coarse.v(&sl, &tc);
        err = err
            .max(kernel.halving_difference(&sl, &t))
            .max((tc.b - t.b).abs() / 3.0)
            .max((vc - v).abs() / 3.0);
        out.a.push(t.a);
        out.b.push(t.b);
        out.c.push(t.c);
        out.d.push(t.d);
        out.v.push(v);
        out.v_coarse.push(vc);
    }
    out.quadrature_error = err;
    out
}

/// `A..D`, `E` and `V` on `x_grid`, with the ground state from the transverse
/// operator at the profile's limiting slopes on an `n_t`-point grid.
pub fn compute_profile(
    cs: &CrossSection,
    profile: &ReferenceProfile,
    x_grid: &[f64],
    n_t: usize,
) -> Result<EffectivePotentialProfile> {
    if profile.is_broken() {
        return Err(Error::WrongProfileKind { expected: "smooth" });
    }
    profile.validate()?;
    if !n_t.is_multiple_of(2) || n_t < 64 {
        return Err(invalid(format!("n_t must be even and >= 64, got {n_t}")));
    }
    if x_grid.is_empty() || x_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("x_grid must be non-empty and strictly ascending"));
    }
    let (b1, b2) = profile.limits();
    let spec = TransverseOperatorSpec::new(cs, b1, b2, n_t);
    let fine = transverse_eigs(&spec, 2)?;
    let coarse = transverse_eigs(&spec.with_grid(n_t / 2), 2)?;
    let kf = PotentialKernel::new(cs, &fine.chi, b1, b2);
    let kc = PotentialKernel::new(cs, &coarse.chi, b1, b2);
    Ok(profile_on_grid(&kf, &kc, profile, x_grid, fine.e1(), n_t))
}

/// As [`compute_profile`] with a caller-supplied transverse ground state (its
/// slopes must be the profile's limits).
pub fn compute_profile_with(
    cs: &CrossSection,
    profile: &ReferenceProfile,
    x_grid: &[f64],
    spectrum: &TransverseSpectrum,
) -> Result<EffectivePotentialProfile> {
    if profile.is_broken() {
        return Err(Error::WrongProfileKind { expected: "smooth" });
    }
    let (b1, b2) = profile.limits();
    if b1 != spectrum.beta1 || b2 != spectrum.beta2 {
        return Err(invalid("transverse spectrum slopes differ from the profile limits"));
    }
    let kf = PotentialKernel::new(cs, &spectrum.chi, b1, b2);
    let coarse_chi: Vec<f64> = if spectrum.grid_size.is_multiple_of(2) {
        spectrum.chi.iter().step_by(2).copied().collect()
    } else {
        spectrum.chi.clone()
    };
    let kc = PotentialKernel::new(cs, &coarse_chi, b1, b2);
    Ok(profile_on_grid(
        &kf,
        &kc,
        profile,
        x_grid,
        spectrum.e1(),
        spectrum.grid_size,
    ))
}

fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len() - 1;
    let mut s = y[0] + y[n];
    for (i, v) in y.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

fn trapezoid(y: &[f64], h: f64) -> f64 {
    let n = y.len() - 1;
    (y.iter().sum::<f64>() - 0.5 * (y[0] + y[n])) * h
}

/// `int V dx` by composite Simpson with a grid-halving error estimate.
///
/// When the interval count is a multiple of four the value is the extrapolated
/// `S_h + (S_h - S_2h) / 15` and the estimate is `|S_h - S_2h| / 15` (or the Simpson-trapezoid difference when
/// the interval count is not a multiple of four), plus one third of the change
/// against the `n_t / 2` transverse resolution, floored at rounding level.
pub fn integral_v(epp: &EffectivePotentialProfile) -> Result<(f64, f64)> {
    let x = &epp.x_grid;
    let v = &epp.v;
    let n = x.len();
    if n < 3 || !(n - 1).is_multiple_of(2) {
        return Err(invalid("Simpson needs an odd number of at least 3 grid points"));
    }
    let h = (x[n - 1] - x[0]) / (n - 1) as f64;
    if x.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(invalid("Simpson needs a uniform x_grid"));
    }
    let vmax = v.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    for (end, val) in [("left", v[0]), ("right", v[n - 1])] {
        if val.abs() > 1e-8 * vmax {
            return Err(Error::DomainTooSmall {
                end,
                value: val.abs(),
                max: vmax,
            });
        }
    }
    let mut s = simpson(v, h);
    let mut err = if (n - 1).is_multiple_of(4) {
        let half: Vec<f64> = v.iter().step_by(2).copied().collect();
        let d = s - simpson(&half, 2.0 * h);
        s += d / 15.0;
        d.abs() / 15.0
    } else {
        (s - trapezoid(v, h)).abs()
    };
    if epp.v_coarse.len() == n {
        err += (simpson(v, h) - simpson(&epp.v_coarse, h)).abs() / 3.0;
    }
    let abs_int = simpson(&v.iter().map(|y| y.abs()).collect::<Vec<_>>(), h);
    err = err.max(64.0 * f64::EPSILON * abs_int);
    Ok((s, err))
}

/// Constants of the broken waveguide with slope `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrokenConstants {
    /// `A = int chi1^2 / h_beta^2`.
    pub a_const: f64,
    /// `B`, Richardson-extrapolated from the solves at `n_t` and `n_t / 2`.
    pub b_const: f64,
    pub beta: f64,
    /// Trapezoid-halving difference plus `|B(n_t) - B(n_t/2)| / 3`.
    pub quadrature_error: f64,
    /// Unextrapolated `B` at `n_t` and `n_t / 2`.
    pub b_fine: f64,
    pub b_coarse: f64,
    /// Symmetry of the `B` integrand that forces `B = 0`, if any.
    pub symmetry: Option<&'static str>,
    pub e1: f64,
    pub n_t: usize,
}

/// `(A, B)` integrands and their quadrature from a ground state on a uniform grid.
fn broken_integrals(cs: &CrossSection, beta: f64, chi: &[f64]) -> (f64, f64, Vec<f64>, f64) {
    let n = chi.len();
    let chi2: Vec<f64> = chi.iter().map(|v| v * v).collect();
    let dchi2 = spectral::derivative(&chi2);
    let sl = Slopes {
        fp: 0.0,
        gp: beta,
        fpp: 0.0,
        gpp: 0.0,
    };
    let (mut a, mut b) = (0.0, 0.0);
    let mut integrand = Vec::with_capacity(n);
    let mut scale = 0.0f64;
    for (j, tg) in cs.tangents(n).iter().enumerate() {
        let k = local_coefficients(&sl, tg);
        let h4 = k.h2 * k.h2;
        a += chi2[j] / k.h2;
        // (xi2'/h^2)' chi^2 integrated by parts, plus xi2' (h^2)'/(2 h^4) chi^2
        let t1 = -tg.d2 / k.h2 * dchi2[j];
        let t2 = tg.d2 * k.dt_h2 / (2.0 * h4) * chi2[j];
        let val = t1 + t2;
        scale = scale.max(t1.abs() + t2.abs());
        b += val;
        integrand.push(val);
    }
    (a / n as f64, b / n as f64, integrand, scale)
}

/// The two terms of the `B` integrand nearly cancel pointwise, so symmetry is
/// judged relative to the size of the terms (`scale`), not of their sum.
fn detect_symmetry(integrand: &[f64], scale: f64) -> Option<&'static str> {
    let n = integrand.len();
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let odd_reflection = (0..n).all(|j| (integrand[(n - j) % n] + integrand[j]).abs() <= tol);
    if odd_reflection {
        return Some("the B integrand is odd under t -> -t");
    }
    if n.is_multiple_of(2) && (0..n).all(|j| (integrand[(j + n / 2) % n] + integrand[j]).abs() <= tol) {
        return Some("the B integrand changes sign under t -> t + 1/2");
    }
    None
}

pub fn compute_broken_constants(cs: &CrossSection, beta: f64, n_t: usize) -> Result<BrokenConstants> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid(format!("broken waveguide needs beta > 0, got {beta}")));
    }
    if !n_t.is_multiple_of(4) || n_t < 64 {
        return Err(invalid(format!("n_t must be a multiple of 4 and >= 64, got {n_t}")));
    }
    let spec = TransverseOperatorSpec::broken(cs, beta, n_t);
    let fine = transverse_eigs(&spec, 2)?;
    let coarse = transverse_eigs(&spec.with_grid(n_t / 2), 2)?;
    let (a, bf, integrand, scale) = broken_integrals(cs, beta, &fine.chi);
    let half: Vec<f64> = fine.chi.iter().step_by(2).copied().collect();
    let (a_half, bf_half, _, _) = broken_integrals(cs, beta, &half);
    let (_, bc, _, _) = broken_integrals(cs, beta, &coarse.chi);
    let quad = (bf - bf_half).abs().max((a - a_half).abs()) + (bf - bc).abs() / 3.0;
    Ok(BrokenConstants {
        a_const: a,
        b_const: (4.0 * bf - bc) / 3.0,
        beta,
        quadrature_error: quad.max(64.0 * f64::EPSILON),
        b_fine: bf,
        b_coarse: bc,
        symmetry: detect_symmetry(&integrand, scale),
        e1: fine.e1(),
        n_t,
    })
}

/// Which discrete-spectrum theorem's hypotheses are numerically established.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Thm2IntVNegative,
    Thm3IntVZeroBNonconstant,
    Thm5BrokenBNonzero,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Thm2IntVNegative => "Thm2_IntVNegative",
            Verdict::Thm3IntVZeroBNonconstant => "Thm3_IntVZero_BNonconstant",
            Verdict::Thm5BrokenBNonzero => "Thm5_Broken_BNonzero",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

/// Signal-to-error multipliers required before a hypothesis is accepted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// `int V < -thm2_sigma * err`.
    pub thm2_sigma: f64,
    /// `|int V| <= thm3_int_sigma * err`.
    pub thm3_int_sigma: f64,
    /// `B_variation > thm3_b_sigma * quadrature_error`.
    pub thm3_b_sigma: f64,
    /// `|B| > thm5_sigma * quadrature_error`.
    pub thm5_sigma: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            thm2_sigma: 3.0,
            thm3_int_sigma: 3.0,
            thm3_b_sigma: 10.0,
            thm5_sigma: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremClassification {
    pub verdict: Verdict,
    /// `int V` for smooth profiles.
    pub int_v: Option<f64>,
    pub int_v_error: Option<f64>,
    /// `max B - min B` for smooth profiles, `|B|` for the broken case.
    pub b_variation: f64,
    pub details: String,
}

pub enum ClassifierInput<'a> {
    Smooth(&'a EffectivePotentialProfile),
    Broken(&'a BrokenConstants),
}

pub fn classify(input: ClassifierInput<'_>, tol: &Tolerances) -> TheoremClassification {
    match input {
        ClassifierInput::Smooth(epp) => classify_smooth(epp, tol),
        ClassifierInput::Broken(bc) => classify_broken(bc, tol),
    }
}

fn classify_smooth(epp: &EffectivePotentialProfile, tol: &Tolerances) -> TheoremClassification {
    let b_var = epp.b_variation();
    let (int_v, err) = match integral_v(epp) {
        Ok(v) => v,
        Err(e) => {
            return TheoremClassification {
                verdict: Verdict::Inconclusive,
                int_v: None,
                int_v_error: None,
                b_variation: b_var,
                details: format!("int V unavailable: {e}"),
            }
        }
    };
    let vmax = epp.v.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let q = epp.quadrature_error;
    let (verdict, details) = if int_v < -tol.thm2_sigma * err {
        (
            Verdict::Thm2IntVNegative,
            format!("int V = {int_v:.6e} < -{}*{err:.3e}", tol.thm2_sigma),
        )
    } else if int_v.abs() <= tol.thm3_int_sigma * err && b_var > tol.thm3_b_sigma * q {
        (
            Verdict::Thm3IntVZeroBNonconstant,
            format!(
                "int V = {int_v:.3e} within {}*{err:.3e}; B varies by {b_var:.3e} > {}*{q:.3e}",
                tol.thm3_int_sigma, tol.thm3_b_sigma
            ),
        )
    } else if vmax <= 1e-12 && b_var <= tol.thm3_b_sigma * q {
        (Verdict::Inconclusive, String::from("V≡0 and B constant"))
    } else if int_v > tol.thm2_sigma * err {
        (
            Verdict::Inconclusive,
            format!("int V = {int_v:.6e} is positive beyond {}*{err:.3e}", tol.thm2_sigma),
        )
    } else {
        (
            Verdict::Inconclusive,
            format!(
                "int V = {int_v:.3e} within error {err:.3e} and B variation {b_var:.3e} not above {}*{q:.3e}",
                tol.thm3_b_sigma
            ),
        )
    };
    TheoremClassification {
        verdict,
        int_v: Some(int_v),
        int_v_error: Some(err),
        b_variation: b_var,
        details,
    }
}

fn classify_broken(bc: &BrokenConstants, tol: &Tolerances) -> TheoremClassification {
    let b = bc.b_const.abs();
    let q = bc.quadrature_error;
    let (verdict, details) = if b > tol.thm5_sigma * q {
        (
            Verdict::Thm5BrokenBNonzero,
            format!("|B| = {b:.6e} > {}*{q:.3e}", tol.thm5_sigma),
        )
    } else if let Some(sym) = bc.symmetry {
        (
            Verdict::Inconclusive,
            format!("B vanishes by cross-section symmetry ({sym}); |B| = {b:.3e}"),
        )
    } else {
        (
            Verdict::Inconclusive,
            format!("|B| = {b:.3e} is within quadrature error ({}*{q:.3e})", tol.thm5_sigma),
        )
    };
    TheoremClassification {
        verdict,
        int_v: None,
        int_v_error: None,
        b_variation: b,
        details,
    }
}
