//! Cross-section curves, reference profiles `f`, `g` and the induced metric.
//!
//! The surface is `P(x, t) = (x, f(x), g(x)) + xi1(t) e2 + xi2(t) e3` with `xi` a
//! unit-speed closed curve of length one. Everything downstream only needs the
//! tangent `xi'`, the curvature vector `xi''` and the slopes `f', g', f'', g''`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math::{cos, sech2, sin, sqrt, tanh, TWO_PI};
use crate::spectral;

/// Tangent and acceleration of the cross-section at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent {
    pub d1: f64,
    pub d2: f64,
    pub dd1: f64,
    pub dd2: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Circle,
    /// `phi(t) = 2 pi t + sum_k a_k sin 2 pi k t + b_k cos 2 pi k t`, `k = idx + 1`.
    TangentAngle {
        a: Vec<f64>,
        b: Vec<f64>,
    },
}

/// Uniformly sampled unit-speed closed curve with analytic derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    pub n_samples: usize,
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    pub dxi1: Vec<f64>,
    pub dxi2: Vec<f64>,
    pub ddxi1: Vec<f64>,
    pub ddxi2: Vec<f64>,
    pub description: String,
    /// `|xi(1) - xi(0)|` of the reconstructed curve.
    pub closure_gap: f64,
    shape: Shape,
}

/// Circle of circumference one, `xi(t) = (cos 2 pi t, sin 2 pi t) / 2 pi`.
pub fn make_circle_cross_section(n_samples: usize) -> Result<CrossSection> {
    if n_samples < 16 {
        return Err(invalid(format!("circle needs at least 16 samples, got {n_samples}")));
    }
    let shape = Shape::Circle;
    let mut cs = CrossSection::from_shape(shape, n_samples, String::from("circle"));
    cs.xi1 = (0..n_samples)
        .map(|i| cos(TWO_PI * i as f64 / n_samples as f64) / TWO_PI)
        .collect();
    cs.xi2 = (0..n_samples)
        .map(|i| sin(TWO_PI * i as f64 / n_samples as f64) / TWO_PI)
        .collect();
    cs.closure_gap = 0.0;
    Ok(cs)
}

const CLOSURE_MAX_ITER: usize = 50;
const CLOSURE_TOL: f64 = 1e-14;

/// Curve with tangent angle `phi(t) = 2 pi t + sum_k a_k sin 2 pi k t + b_k cos 2 pi k t`.
///
/// `coeffs[k - 1] = (a_k, b_k)`. The `k = 1` pair is treated as an initial guess
/// and corrected by damped Newton until `int cos phi = int sin phi = 0`.
pub fn make_tangent_angle_cross_section(coeffs: &[(f64, f64)], n_samples: usize) -> Result<CrossSection> {
    if n_samples < 16 {
        return Err(invalid(format!(
            "tangent-angle curve needs at least 16 samples, got {n_samples}"
        )));
    }
    if coeffs.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(invalid("non-finite tangent-angle coefficient"));
    }
    let mut a: Vec<f64> = coeffs.iter().map(|c| c.0).collect();
    let mut b: Vec<f64> = coeffs.iter().map(|c| c.1).collect();
    if a.is_empty() {
        a.push(0.0);
        b.push(0.0);
    }
    // quadrature for the closure integrals: resolve the highest mode comfortably
    let m = (8 * (a.len() + 4)).max(4 * n_samples).max(1024);
    let residual = |a: &[f64], b: &[f64]| -> (f64, f64) {
        let (mut c, mut s) = (0.0, 0.0);
        for j in 0..m {
            let p = phi(a, b, j as f64 / m as f64);
            c += cos(p);
            s += sin(p);
        }
        (c / m as f64, s / m as f64)
    };
    let mut r = residual(&a, &b);
    let mut rn = libm::hypot(r.0, r.1);
    let mut iter = 0;
    while rn > CLOSURE_TOL {
        if iter == CLOSURE_MAX_ITER {
            return Err(Error::NonClosable {
                residual: rn,
                iterations: iter,
            });
        }
        iter += 1;
        // Jacobian of (int cos phi, int sin phi) w.r.t. (a1, b1)
        let (mut j11, mut j12, mut j21, mut j22) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..m {
            let t = j as f64 / m as f64;
            let p = phi(&a, &b, t);
            let (sp, cp) = (sin(p), cos(p));
            let (s1, c1) = (sin(TWO_PI * t), cos(TWO_PI * t));
            j11 -= sp * s1;
            j12 -= sp * c1;
            j21 += cp * s1;
            j22 += cp * c1;
        }
        let mf = m as f64;
        let (j11, j12, j21, j22) = (j11 / mf, j12 / mf, j21 / mf, j22 / mf);
        let det = j11 * j22 - j12 * j21;
        if !(det.abs() > 1e-300) {
            return Err(Error::NonClosable {
                residual: rn,
                iterations: iter,
            });
        }
        let da = -(j22 * r.0 - j12 * r.1) / det;
        let db = -(-j21 * r.0 + j11 * r.1) / det;
        let mut step = 1.0;
        loop {
            let mut a_try = a.clone();
            let mut b_try = b.clone();
            a_try[0] += step * da;
            b_try[0] += step * db;
            let r_try = residual(&a_try, &b_try);
            let rn_try = libm::hypot(r_try.0, r_try.1);
            if rn_try < rn || step < 1e-4 {
                a = a_try;
                b = b_try;
                r = r_try;
                rn = rn_try;
                break;
            }
            step *= 0.5;
        }
    }
    let shape = Shape::TangentAngle { a, b };
    let description = format!("tangent-angle curve with {} Fourier modes", coeffs.len());
    let mut cs = CrossSection::from_shape(shape, n_samples, description);
    let (x1, m1) = spectral::antiderivative(&cs.dxi1);
    let (x2, m2) = spectral::antiderivative(&cs.dxi2);
    let c1 = spectral::periodic_mean(&x1);
    let c2 = spectral::periodic_mean(&x2);
    cs.xi1 = x1.iter().map(|v| v - c1).collect();
    cs.xi2 = x2.iter().map(|v| v - c2).collect();
    cs.closure_gap = libm::hypot(m1, m2);
    if cs.closure_gap > 1e-8 {
        return Err(Error::NonClosable {
            residual: cs.closure_gap,
            iterations: iter,
        });
    }
    Ok(cs)
}

fn phi(a: &[f64], b: &[f64], t: f64) -> f64 {
    let mut p = TWO_PI * t;
    for (k, (ak, bk)) in a.iter().zip(b).enumerate() {
        let w = TWO_PI * (k + 1) as f64 * t;
        p += ak * sin(w) + bk * cos(w);
    }
    p
}

fn phi_prime(a: &[f64], b: &[f64], t: f64) -> f64 {
    let mut p = TWO_PI;
    for (k, (ak, bk)) in a.iter().zip(b).enumerate() {
        let kk = TWO_PI * (k + 1) as f64;
        let w = kk * t;
        p += kk * (ak * cos(w) - bk * sin(w));
    }
    p
}

impl CrossSection {
    fn from_shape(shape: Shape, n: usize, description: String) -> Self {
        let mut cs = CrossSection {
            n_samples: n,
            xi1: Vec::new(),
            xi2: Vec::new(),
            dxi1: Vec::with_capacity(n),
            dxi2: Vec::with_capacity(n),
            ddxi1: Vec::with_capacity(n),
            ddxi2: Vec::with_capacity(n),
            description,
            closure_gap: 0.0,
            shape,
        };
        for i in 0..n {
            let tg = cs.tangent_at(i as f64 / n as f64);
            cs.dxi1.push(tg.d1);
            cs.dxi2.push(tg.d2);
            cs.ddxi1.push(tg.dd1);
            cs.ddxi2.push(tg.dd2);
        }
        cs
    }

    /// Tangent `xi'(t)` and acceleration `xi''(t)` at any `t` (taken mod 1),
    /// evaluated in closed form.
    pub fn tangent_at(&self, t: f64) -> Tangent {
        match &self.shape {
            Shape::Circle => {
                let (s, c) = (sin(TWO_PI * t), cos(TWO_PI * t));
                Tangent {
                    d1: -s,
                    d2: c,
                    dd1: -TWO_PI * c,
                    dd2: -TWO_PI * s,
                }
            }
            Shape::TangentAngle { a, b } => {
                let p = phi(a, b, t);
                let dp = phi_prime(a, b, t);
                let (s, c) = (sin(p), cos(p));
                Tangent {
                    d1: c,
                    d2: s,
                    dd1: -dp * s,
                    dd2: dp * c,
                }
            }
        }
    }

    /// Tangent data on the uniform grid `t_j = j / m`.
    pub fn tangents(&self, m: usize) -> Vec<Tangent> {
        (0..m).map(|j| self.tangent_at(j as f64 / m as f64)).collect()
    }

    /// Tangent-angle Fourier pairs `(a_k, b_k)` after closure, if this curve was
    /// built from a tangent angle.
    pub fn tangent_angle_coefficients(&self) -> Option<Vec<(f64, f64)>> {
        match &self.shape {
            Shape::Circle => None,
            Shape::TangentAngle { a, b } => Some(a.iter().copied().zip(b.iter().copied()).collect()),
        }
    }

    pub fn is_circle(&self) -> bool {
        matches!(self.shape, Shape::Circle)
    }

    /// Largest deviations from the unit-speed and `xi' . xi'' = 0` invariants on
    /// the sample grid.
    pub fn invariant_violations(&self) -> (f64, f64) {
        let mut speed = 0.0f64;
        let mut orth = 0.0f64;
        for i in 0..self.n_samples {
            speed = speed.max((self.dxi1[i] * self.dxi1[i] + self.dxi2[i] * self.dxi2[i] - 1.0).abs());
            orth = orth.max((self.dxi1[i] * self.ddxi1[i] + self.dxi2[i] * self.ddxi2[i]).abs());
        }
        (speed, orth)
    }

    /// Reflection `t -> -t` test for the tangent: `max |xi1'(-t) + xi1'(t)|` on the
    /// sample grid.
    pub fn reflection_violation(&self) -> f64 {
        let n = self.n_samples;
        (0..n)
            .map(|i| (self.dxi1[(n - i) % n] + self.dxi1[i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Values of `f', g', f'', g''` at one `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slopes {
    pub fp: f64,
    pub gp: f64,
    pub fpp: f64,
    pub gpp: f64,
}

/// Tabulated slopes, interpolated by cubic Hermite splines with `f''`, `g''` as
/// the node derivatives. Outside the table the end values are held constant.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeTable {
    pub x: Vec<f64>,
    pub fp: Vec<f64>,
    pub gp: Vec<f64>,
    pub fpp: Vec<f64>,
    pub gpp: Vec<f64>,
}

impl SlopeTable {
    pub fn new(x: Vec<f64>, fp: Vec<f64>, gp: Vec<f64>, fpp: Vec<f64>, gpp: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || [fp.len(), gp.len(), fpp.len(), gpp.len()].iter().any(|&l| l != n) {
            return Err(invalid("slope table needs at least two rows of equal length"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("slope table x values must be strictly increasing"));
        }
        if [&fp, &gp, &fpp, &gpp, &x]
            .iter()
            .any(|v| v.iter().any(|e| !e.is_finite()))
        {
            return Err(invalid("slope table contains non-finite values"));
        }
        Ok(SlopeTable { x, fp, gp, fpp, gpp })
    }

    fn eval(&self, x: f64) -> Slopes {
        let n = self.x.len();
        if x <= self.x[0] {
            return Slopes {
                fp: self.fp[0],
                gp: self.gp[0],
                fpp: 0.0,
                gpp: 0.0,
            };
        }
        if x >= self.x[n - 1] {
            return Slopes {
                fp: self.fp[n - 1],
                gp: self.gp[n - 1],
                fpp: 0.0,
                gpp: 0.0,
            };
        }
        let i = self.x.partition_point(|&v| v <= x) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (x - self.x[i]) / h;
        let herm = |y: &[f64], d: &[f64]| -> (f64, f64) {
            let (s2, s3) = (s * s, s * s * s);
            let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y[i]
                + (s3 - 2.0 * s2 + s) * h * d[i]
                + (-2.0 * s3 + 3.0 * s2) * y[i + 1]
                + (s3 - s2) * h * d[i + 1];
            let dv = ((6.0 * s2 - 6.0 * s) * y[i]
                + (3.0 * s2 - 4.0 * s + 1.0) * h * d[i]
                + (-6.0 * s2 + 6.0 * s) * y[i + 1]
                + (3.0 * s2 - 2.0 * s) * h * d[i + 1])
                / h;
            (v, dv)
        };
        let (fp, fpp) = herm(&self.fp, &self.fpp);
        let (gp, gpp) = herm(&self.gp, &self.gpp);
        Slopes { fp, gp, fpp, gpp }
    }
}

/// Smooth slope profiles with limits `(beta1, beta2)` as `x -> +inf`.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothProfile {
    /// `f' = g' = 0`.
    Flat,
    /// `f' = beta1`, `g' = beta2` everywhere.
    ConstantSlope {
        beta1: f64,
        beta2: f64,
    },
    /// `f' = beta1 tanh(x / width)`, `g' = beta2 tanh(x / width)`.
    Tanh {
        beta1: f64,
        beta2: f64,
        width: f64,
    },
    /// `f' = beta1 + amp1 m(x)`, `g' = beta2 + amp2 m(x)` with the zero-mean bump
    /// `m(x) = sech^2(x / w) - sech^2(x / 2w) / 2`.
    BalancedBumps {
        beta1: f64,
        beta2: f64,
        amp1: f64,
        amp2: f64,
        width: f64,
    },
    Table(SlopeTable),
}

/// Reference curve `r(x) = (x, f(x), g(x))`.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceProfile {
    Smooth(SmoothProfile),
    /// `f = 0`, `g = beta |x|`. At `x = 0` the slope takes the midpoint value 0.
    Broken {
        beta: f64,
    },
}

impl ReferenceProfile {
    pub fn flat() -> Self {
        ReferenceProfile::Smooth(SmoothProfile::Flat)
    }

    pub fn constant_slope(beta1: f64, beta2: f64) -> Self {
        ReferenceProfile::Smooth(SmoothProfile::ConstantSlope { beta1, beta2 })
    }

    pub fn tanh(beta1: f64, beta2: f64, width: f64) -> Self {
        ReferenceProfile::Smooth(SmoothProfile::Tanh { beta1, beta2, width })
    }

    pub fn broken(beta: f64) -> Self {
        ReferenceProfile::Broken { beta }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            ReferenceProfile::Broken { beta } => {
                if !(beta.is_finite() && *beta > 0.0) {
                    return Err(invalid(format!("broken profile needs beta > 0, got {beta}")));
                }
            }
            ReferenceProfile::Smooth(SmoothProfile::Flat) | ReferenceProfile::Smooth(SmoothProfile::Table(_)) => {}
            ReferenceProfile::Smooth(SmoothProfile::ConstantSlope { beta1, beta2 }) => {
                if !finite(&[*beta1, *beta2]) {
                    return Err(invalid("non-finite slope"));
                }
            }
            ReferenceProfile::Smooth(SmoothProfile::Tanh { beta1, beta2, width }) => {
                if !finite(&[*beta1, *beta2]) || !(width.is_finite() && *width > 0.0) {
                    return Err(invalid("tanh profile needs finite slopes and width > 0"));
                }
            }
            ReferenceProfile::Smooth(SmoothProfile::BalancedBumps {
                beta1,
                beta2,
                amp1,
                amp2,
                width,
            }) => {
                if !finite(&[*beta1, *beta2, *amp1, *amp2]) || !(width.is_finite() && *width > 0.0) {
                    return Err(invalid("bump profile needs finite parameters and width > 0"));
                }
            }
        }
        Ok(())
    }

    pub fn is_broken(&self) -> bool {
        matches!(self, ReferenceProfile::Broken { .. })
    }

    /// Asymptotic slopes `(beta1, beta2)` as `x -> +inf`. For the broken profile
    /// these are `(0, beta)`.
    pub fn limits(&self) -> (f64, f64) {
        match self {
            ReferenceProfile::Broken { beta } => (0.0, *beta),
            ReferenceProfile::Smooth(p) => match p {
                SmoothProfile::Flat => (0.0, 0.0),
                SmoothProfile::ConstantSlope { beta1, beta2 }
                | SmoothProfile::Tanh { beta1, beta2, .. }
                | SmoothProfile::BalancedBumps { beta1, beta2, .. } => (*beta1, *beta2),
                SmoothProfile::Table(t) => {
                    let n = t.x.len();
                    (t.fp[n - 1], t.gp[n - 1])
                }
            },
        }
    }

    /// `f', g', f'', g''` at `x`.
    pub fn slopes(&self, x: f64) -> Slopes {
        match self {
            ReferenceProfile::Broken { beta } => Slopes {
                fp: 0.0,
                gp: if x > 0.0 {
                    *beta
                } else if x < 0.0 {
                    -*beta
                } else {
                    0.0
                },
                fpp: 0.0,
                gpp: 0.0,
            },
            ReferenceProfile::Smooth(p) => match p {
                SmoothProfile::Flat => Slopes {
                    fp: 0.0,
                    gp: 0.0,
                    fpp: 0.0,
                    gpp: 0.0,
                },
                SmoothProfile::ConstantSlope { beta1, beta2 } => Slopes {
                    fp: *beta1,
                    gp: *beta2,
                    fpp: 0.0,
                    gpp: 0.0,
                },
                SmoothProfile::Tanh { beta1, beta2, width } => {
                    let y = x / width;
                    let (th, d) = (tanh(y), sech2(y) / width);
                    Slopes {
                        fp: beta1 * th,
                        gp: beta2 * th,
                        fpp: beta1 * d,
                        gpp: beta2 * d,
                    }
                }
                SmoothProfile::BalancedBumps {
                    beta1,
                    beta2,
                    amp1,
                    amp2,
                    width,
                } => {
                    let (y1, y2) = (x / width, x / (2.0 * width));
                    let m = sech2(y1) - 0.5 * sech2(y2);
                    let dm = -2.0 / width * sech2(y1) * tanh(y1) + 0.5 / width * sech2(y2) * tanh(y2);
                    Slopes {
                        fp: beta1 + amp1 * m,
                        gp: beta2 + amp2 * m,
                        fpp: amp1 * dm,
                        gpp: amp2 * dm,
                    }
                }
                SmoothProfile::Table(t) => t.eval(x),
            },
        }
    }
}

/// Entries of the metric `G` and `h = sqrt(det G)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub det: f64,
    pub h: f64,
}

/// Pointwise coefficients shared by every discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCoefficients {
    /// `u = f' xi2' - g' xi1'`.
    pub u: f64,
    /// `h^2 = 1 + u^2`.
    pub h2: f64,
    pub dt_h2: f64,
    pub dx_h2: f64,
    /// `s = f' xi1' + g' xi2'`, the off-diagonal metric entry.
    pub s: f64,
}

#[inline]
pub fn local_coefficients(sl: &Slopes, tg: &Tangent) -> LocalCoefficients {
    let u = sl.fp * tg.d2 - sl.gp * tg.d1;
    LocalCoefficients {
        u,
        h2: 1.0 + u * u,
        dt_h2: 2.0 * u * (sl.fp * tg.dd2 - sl.gp * tg.dd1),
        dx_h2: 2.0 * u * (sl.fpp * tg.d2 - sl.gpp * tg.d1),
        s: sl.fp * tg.d1 + sl.gp * tg.d2,
    }
}

pub fn metric_at(cs: &CrossSection, profile: &ReferenceProfile, x: f64, t: f64) -> MetricSample {
    let sl = profile.slopes(x);
    let tg = cs.tangent_at(t);
    let c = local_coefficients(&sl, &tg);
    MetricSample {
        g11: 1.0 + sl.fp * sl.fp + sl.gp * sl.gp,
        g12: c.s,
        g22: 1.0,
        det: c.h2,
        h: sqrt(c.h2),
    }
}

/// `(h^2, d/dt h^2, d/dx h^2)` at `(x, t)`.
pub fn h_squared_derivatives(cs: &CrossSection, profile: &ReferenceProfile, x: f64, t: f64) -> (f64, f64, f64) {
    let c = local_coefficients(&profile.slopes(x), &cs.tangent_at(t));
    (c.h2, c.dt_h2, c.dx_h2)
}
