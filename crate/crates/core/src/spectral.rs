//! Periodic (period 1) spectral tools: discrete Fourier series, differentiation,
//! integration and trigonometric interpolation on the uniform grid `t_j = j / N`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{cos, sin, PI, TWO_PI};

/// Real trigonometric series
/// `p(t) = a0 + sum_k (a_k cos 2 pi k t + b_k sin 2 pi k t) + nyq cos(pi N t)`.
///
/// `a[k-1]`, `b[k-1]` hold mode `k`. The Nyquist term is only present for even
/// `N`; it takes part in interpolation but is dropped by every derivative, so that
/// the differentiation matrix on the grid is exactly skew-symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    pub n: usize,
    pub a0: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub nyq: f64,
}

struct Twiddle {
    c: Vec<f64>,
    s: Vec<f64>,
}

impl Twiddle {
    fn new(n: usize) -> Self {
        let mut c = Vec::with_capacity(n);
        let mut s = Vec::with_capacity(n);
        for m in 0..n {
            let th = TWO_PI * m as f64 / n as f64;
            c.push(cos(th));
            s.push(sin(th));
        }
        Twiddle { c, s }
    }
}

impl TrigSeries {
    /// Interpolating series of the samples `x_j = p(j / N)`.
    pub fn from_samples(x: &[f64]) -> Self {
        let n = x.len();
        assert!(n > 0, "empty sample array");
        let tw = Twiddle::new(n);
        let half = (n - 1) / 2;
        let nf = n as f64;
        let a0 = x.iter().sum::<f64>() / nf;
        let mut a = vec![0.0; half];
        let mut b = vec![0.0; half];
        for k in 1..=half {
            let (mut sc, mut ss) = (0.0, 0.0);
            for (j, &xj) in x.iter().enumerate() {
                let m = (j * k) % n;
                sc += xj * tw.c[m];
                ss += xj * tw.s[m];
            }
            a[k - 1] = 2.0 * sc / nf;
            b[k - 1] = 2.0 * ss / nf;
        }
        let nyq = if n.is_multiple_of(2) {
            x.iter()
                .enumerate()
                .map(|(j, &v)| if j % 2 == 0 { v } else { -v })
                .sum::<f64>()
                / nf
        } else {
            0.0
        };
        TrigSeries { n, a0, a, b, nyq }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (c1, s1) = (cos(TWO_PI * t), sin(TWO_PI * t));
        let (mut ck, mut sk) = (1.0, 0.0);
        let mut v = self.a0;
        for (ak, bk) in self.a.iter().zip(&self.b) {
            let c = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = c;
            v += ak * ck + bk * sk;
        }
        if self.nyq != 0.0 {
            v += self.nyq * cos(PI * self.n as f64 * t);
        }
        v
    }

    /// `order`-th derivative at `t` (Nyquist mode dropped).
    pub fn eval_derivative(&self, t: f64, order: u32) -> f64 {
        if order == 0 {
            return self.eval(t);
        }
        let (c1, s1) = (cos(TWO_PI * t), sin(TWO_PI * t));
        let (mut ck, mut sk) = (1.0, 0.0);
        let mut v = 0.0;
        for (i, (ak, bk)) in self.a.iter().zip(&self.b).enumerate() {
            let c = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = c;
            let w = TWO_PI * (i + 1) as f64;
            let wp = libm::pow(w, order as f64);
            // d^m/dt^m of (a cos + b sin) cycles through (-a sin + b cos), (-a cos - b sin), ...
            let term = match order % 4 {
                1 => -ak * sk + bk * ck,
                2 => -ak * ck - bk * sk,
                3 => ak * sk - bk * ck,
                _ => ak * ck + bk * sk,
            };
            v += wp * term;
        }
        v
    }

    /// Samples of the series on an `m`-point uniform grid.
    pub fn sample(&self, m: usize) -> Vec<f64> {
        (0..m).map(|j| self.eval(j as f64 / m as f64)).collect()
    }

    pub fn sample_derivative(&self, m: usize, order: u32) -> Vec<f64> {
        (0..m)
            .map(|j| self.eval_derivative(j as f64 / m as f64, order))
            .collect()
    }

    /// Largest coefficient magnitude among the top quarter of modes; a cheap
    /// resolution indicator.
    pub fn tail_magnitude(&self) -> f64 {
        let h = self.a.len();
        let start = h - h / 4;
        (start..h)
            .map(|k| libm::hypot(self.a[k], self.b[k]))
            .fold(self.nyq.abs(), f64::max)
    }
}

/// Spectral derivative of periodic samples, evaluated back on the same grid.
///
/// As a matrix this operator is real and exactly skew-symmetric in exact
/// arithmetic, which is what makes summation by parts against it exact.
pub fn derivative(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let s = TrigSeries::from_samples(x);
    let tw = Twiddle::new(n);
    let mut out = vec![0.0; n];
    for (j, o) in out.iter_mut().enumerate() {
        let mut v = 0.0;
        for k in 1..=s.a.len() {
            let m = (j * k) % n;
            v += TWO_PI * k as f64 * (-s.a[k - 1] * tw.s[m] + s.b[k - 1] * tw.c[m]);
        }
        *o = v;
    }
    out
}

/// Periodic antiderivative of the zero-mean part of `x`, normalized to vanish at
/// `t = 0`. The mean of `x` is returned alongside.
pub fn antiderivative(x: &[f64]) -> (Vec<f64>, f64) {
    let n = x.len();
    let s = TrigSeries::from_samples(x);
    let tw = Twiddle::new(n);
    let mut out = vec![0.0; n];
    for (j, o) in out.iter_mut().enumerate() {
        let mut v = 0.0;
        for k in 1..=s.a.len() {
            let m = (j * k) % n;
            let w = TWO_PI * k as f64;
            // integral of a cos + b sin, shifted so the value at t = 0 is zero
            v += (s.a[k - 1] * tw.s[m] + s.b[k - 1] * (1.0 - tw.c[m])) / w;
        }
        *o = v;
    }
    (out, s.a0)
}

/// Periodic trapezoid rule over one period: the sample mean.
pub fn periodic_mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Resample periodic data to a finer or coarser uniform grid by trigonometric
/// interpolation. Equal sizes return a copy.
pub fn resample(x: &[f64], m: usize) -> Vec<f64> {
    if m == x.len() {
        return x.to_vec();
    }
    if m < x.len() && x.len().is_multiple_of(m) {
        let step = x.len() / m;
        return (0..m).map(|j| x[j * step]).collect();
    }
    TrigSeries::from_samples(x).sample(m)
}
