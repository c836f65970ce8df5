//! `f64` transcendental functions that work without `std`.

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn sin_cos(x: f64) -> (f64, f64) {
    libm::sincos(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Reduces an angle into `[0, 2π)`.
pub(crate) fn wrap_phase(phi: f64) -> f64 {
    let tau = core::f64::consts::TAU;
    let mut r = libm::fmod(phi, tau);
    if r < 0.0 {
        r += tau;
    }
    if r >= tau {
        r -= tau;
    }
    r
}
