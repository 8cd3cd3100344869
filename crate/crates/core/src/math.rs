pub(crate) use core::f64::consts::PI;
pub(crate) use libm::{cos, exp, sin, sqrt, tanh};

pub(crate) const TWO_PI: f64 = 2.0 * PI;

#[inline]
pub(crate) fn sech2(x: f64) -> f64 {
    let c = libm::cosh(x);
    if c.is_finite() {
        1.0 / (c * c)
    } else {
        0.0
    }
}
