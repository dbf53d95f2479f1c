//! Two-band Bloch dispersion `omega = +-sqrt(sigma^2 + 4 kappa^2 cos^2(qa))`
//! of the binary superlattice, and its expansion for small gain/loss.

use serde::Serialize;

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochPoint {
    /// Wavenumber in units of `1/a`.
    pub q: f64,
    pub sigma: C64,
    pub omega_plus: C64,
    pub omega_minus: C64,
}

impl BlochPoint {
    pub fn exact(kappa: f64, sigma: C64, q: f64) -> Self {
        let (omega_plus, omega_minus) = dispersion_exact(kappa, sigma, q);
        Self { q, sigma, omega_plus, omega_minus }
    }
}

fn order(w: C64) -> (C64, C64) {
    if w.re > 0.0 || (w.re == 0.0 && w.im >= 0.0) {
        (w, -w)
    } else {
        (-w, w)
    }
}

/// Both branches, plus branch (positive real part, ties by imaginary part)
/// first.
pub fn dispersion_exact(kappa: f64, sigma: C64, q: f64) -> (C64, C64) {
    let c = 2.0 * kappa * q.cos();
    order((sigma * sigma + c * c).sqrt())
}

/// First-order expansion in `sigma_i` around the real radicand
/// `sigma_r^2 - sigma_i^2 + 4 kappa^2 cos^2(qa)`.
pub fn dispersion_small_imag(kappa: f64, sigma_r: f64, sigma_i: f64, q: f64) -> Result<(C64, C64)> {
    let c = 2.0 * kappa * q.cos();
    let radicand = sigma_r * sigma_r - sigma_i * sigma_i + c * c;
    if !(radicand > 0.0) {
        return Err(Error::ExpansionInvalid { radicand });
    }
    let w = C64::new(1.0, sigma_r * sigma_i / radicand) * radicand.sqrt();
    Ok(order(w))
}

/// Tabulates both relations on `n` wavenumbers across `[-pi/a, pi/a]`.
pub fn band_table(kappa: f64, sigma_r: f64, sigma_i: f64, n: usize) -> Vec<(f64, C64, C64, Option<C64>)> {
    let sigma = C64::new(sigma_r, sigma_i);
    (0..n)
        .map(|j| {
            let q = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / (n - 1).max(1) as f64;
            let (wp, wm) = dispersion_exact(kappa, sigma, q);
            let approx = dispersion_small_imag(kappa, sigma_r, sigma_i, q).ok().map(|p| p.0);
            (q, wp, wm, approx)
        })
        .collect()
}
