//! Binary waveguide lattice with alternating, modulated gain and loss.
//!
//! Guide `n` obeys
//! `da_n/dz = i kappa (a_{n+1} + a_{n-1}) - i (-1)^n sigma(z) a_n`
//! with `sigma(z) = sigma_r + i r sigma_r sin(omega z)` and open boundaries.
//! Even guides (A sublattice) carry `+sigma`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Lattice geometry and coupling parameters.
///
/// Rates (`kappa`, `sigma_r`, `omega`, `omega0`) share one unit; `z` is
/// measured in its inverse. Lengths (`spacing_a`, `wavelength`,
/// `spot_size`) are in micrometres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub n_guides: usize,
    pub spacing_a: f64,
    pub kappa: f64,
    /// Physical coupling in 1/mm, used only to report z in millimetres.
    pub kappa_physical: f64,
    pub sigma_r: f64,
    pub gain_ratio_r: f64,
    pub omega: f64,
    pub omega0: f64,
    pub wavelength: f64,
    pub n_substrate: f64,
    /// 1/e-intensity half width of the input beam.
    pub spot_size: f64,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            n_guides: 200,
            spacing_a: 16.0,
            kappa: 1.0,
            kappa_physical: 0.14,
            sigma_r: 2.1,
            gain_ratio_r: 0.0,
            omega: 0.0,
            omega0: 1.0,
            wavelength: 0.633,
            n_substrate: 1.5,
            spot_size: 105.0,
        }
    }
}

impl LatticeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_guides < 4 || !self.n_guides.is_multiple_of(2) {
            return bad(format!("n_guides must be even and >= 4, got {}", self.n_guides));
        }
        let finite = [
            ("spacing_a", self.spacing_a),
            ("kappa", self.kappa),
            ("kappa_physical", self.kappa_physical),
            ("sigma_r", self.sigma_r),
            ("gain_ratio_r", self.gain_ratio_r),
            ("omega", self.omega),
            ("omega0", self.omega0),
            ("wavelength", self.wavelength),
            ("n_substrate", self.n_substrate),
            ("spot_size", self.spot_size),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        for (name, v) in [
            ("spacing_a", self.spacing_a),
            ("kappa", self.kappa),
            ("kappa_physical", self.kappa_physical),
            ("omega0", self.omega0),
            ("wavelength", self.wavelength),
            ("n_substrate", self.n_substrate),
            ("spot_size", self.spot_size),
        ] {
            if v <= 0.0 {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("sigma_r", self.sigma_r),
            ("gain_ratio_r", self.gain_ratio_r),
            ("omega", self.omega),
        ] {
            if v < 0.0 {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if self.spot_size <= self.spacing_a {
            return bad(format!(
                "spot_size ({}) must exceed spacing_a ({})",
                self.spot_size, self.spacing_a
            ));
        }
        Ok(())
    }

    /// Gain/loss amplitude at propagation distance `z`.
    pub fn sigma_at(&self, z: f64) -> C64 {
        sigma_at(self.sigma_r, self.gain_ratio_r, self.omega, z)
    }

    /// Envelope width in units of the lattice spacing.
    pub fn envelope_width(&self) -> f64 {
        self.spot_size / self.spacing_a
    }

    /// Bragg tilt angle `lambda / (4 n_s a)`.
    pub fn bragg_angle(&self) -> f64 {
        self.wavelength / (4.0 * self.n_substrate * self.spacing_a)
    }

    /// Transverse phase gradient per lattice spacing of the tilted input.
    pub fn tilt_phase_per_site(&self) -> f64 {
        2.0 * PI * self.n_substrate * self.bragg_angle() * self.spacing_a / self.wavelength
    }

    pub fn sigma_ratio(&self) -> f64 {
        self.sigma_r / self.kappa
    }

    pub fn omega_ratio(&self) -> f64 {
        self.omega / self.omega0
    }

    /// Converts a propagation distance to millimetres.
    pub fn z_to_mm(&self, z: f64) -> f64 {
        z * self.kappa / self.kappa_physical
    }

    /// Guide positions `x_n = n - N/2` in units of `a`.
    pub fn positions(&self) -> Vec<f64> {
        positions(self.n_guides)
    }
}

pub fn positions(n: usize) -> Vec<f64> {
    let half = (n / 2) as f64;
    (0..n).map(|i| i as f64 - half).collect()
}

pub fn sigma_at(sigma_r: f64, r: f64, omega: f64, z: f64) -> C64 {
    C64::new(sigma_r, r * sigma_r * (omega * z).sin())
}

/// Sublattice sign: `+1` on A guides (even), `-1` on B guides.
#[inline]
pub fn sublattice_sign(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Writes `da/dz` for a chain with uniform coupling and on-site `+-sigma`.
#[inline]
pub fn chain_rhs(kappa: f64, sigma: C64, a: &[C64], out: &mut [C64]) {
    let n = a.len();
    assert_eq!(out.len(), n);
    if n == 0 {
        return;
    }
    let zero = C64::new(0.0, 0.0);
    // i (kappa hop - s sigma a) = (-Im, Re) of the bracket
    let rot = |v: C64| C64::new(-v.im, v.re);
    for k in 0..n {
        let left = if k > 0 { a[k - 1] } else { zero };
        let right = if k + 1 < n { a[k + 1] } else { zero };
        let s = if k % 2 == 0 { sigma } else { -sigma };
        out[k] = rot((left + right) * kappa - s * a[k]);
    }
}

/// Right-hand side of the coupled-mode equations at distance `z`.
pub fn coupled_mode_rhs(config: &LatticeConfig, z: f64, state: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); state.len()];
    chain_rhs(config.kappa, config.sigma_at(z), state, &mut out);
    out
}

/// Complex guide amplitudes at a propagation distance.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub z: f64,
    pub amplitudes: Vec<C64>,
}

impl FieldState {
    pub fn new(z: f64, amplitudes: Vec<C64>) -> Self {
        Self { z, amplitudes }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn total_intensity(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }
}

/// Tail of the envelope on the outermost guides relative to its peak.
pub fn edge_tail(config: &LatticeConfig) -> f64 {
    let w = config.envelope_width();
    let x = config.positions();
    let g = |x: f64| (-x * x / (2.0 * w * w)).exp();
    g(x[0]).max(g(x[x.len() - 1]))
}

/// Tilted Gaussian beam exciting the lattice at the Bragg angle.
///
/// Centred on guide `N/2` (an A guide), peak amplitude 1.
pub fn initial_gaussian_field(config: &LatticeConfig) -> Result<FieldState> {
    config.validate()?;
    let tail = edge_tail(config);
    if tail > 1e-6 {
        return Err(Error::EdgeContamination { tail });
    }
    let w = config.envelope_width();
    let phase = config.tilt_phase_per_site();
    let amplitudes = config
        .positions()
        .into_iter()
        .map(|x| C64::from_polar((-x * x / (2.0 * w * w)).exp(), phase * x))
        .collect();
    Ok(FieldState::new(0.0, amplitudes))
}
