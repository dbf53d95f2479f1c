//! Continuum Dirac model of the lattice near the zone edge.
//!
//! Under the substitution `psi1(n) = (-1)^n a_{2n}`,
//! `psi2(n) = i (-1)^n a_{2n-1}` the coupled-mode equations reduce to a
//! 1D Dirac equation with "speed of light" `kappa` and complex mass
//! `sigma(z)`. Neglecting time ordering, each plane-wave component evolves as
//! `exp(i A (A_hat . alpha))` and the position expectation follows from
//! k-space integrals over the Gaussian beam spectrum.
//!
//! Positions `xi` are in unit cells (two guides); lattice `x = 2 xi`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::exec::{map_indexed, Execution};
use crate::lattice::{FieldState, LatticeConfig};
use crate::quadrature::gauss_legendre;
use crate::{Error, Result, C64};

pub const DEFAULT_NODES: usize = 257;
/// Spectrum truncation: `G(k_max) / G(0)`.
pub const SPECTRUM_TAIL: f64 = 1e-8;
const SMALL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiracParams {
    pub kappa: f64,
    pub sigma_r: f64,
    pub sigma_i_amp: f64,
    pub omega: f64,
}

impl DiracParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.kappa > 0.0
            && self.sigma_r >= 0.0
            && self.sigma_i_amp >= 0.0
            && self.omega >= 0.0
            && [self.kappa, self.sigma_r, self.sigma_i_amp, self.omega].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid Dirac parameters {self:?}")))
        }
    }

    /// `(cos(omega t) - 1) / omega`, with its small-argument series.
    pub fn c_of_t(&self, t: f64) -> f64 {
        if self.omega == 0.0 {
            return 0.0;
        }
        let x = self.omega * t;
        if x.abs() < SMALL {
            -self.omega * t * t / 2.0
        } else {
            let s = (x / 2.0).sin();
            -2.0 * s * s / self.omega
        }
    }

    /// `B = -sigma_r t + i sigma_i (cos(omega t) - 1) / omega`.
    pub fn b_of_t(&self, t: f64) -> C64 {
        C64::new(-self.sigma_r * t, self.sigma_i_amp * self.c_of_t(t))
    }

    /// `A^2 = kappa^2 k^2 t^2 + B^2`.
    pub fn a_squared(&self, k: f64, t: f64) -> C64 {
        let b = self.b_of_t(t);
        let kt = self.kappa * k * t;
        b * b + kt * kt
    }

    /// `A^2 / t^2`, finite as `t -> 0`.
    fn reduced_radicand(&self, k: f64, t: f64) -> C64 {
        let m = if t == 0.0 {
            C64::new(self.sigma_r, 0.0)
        } else {
            C64::new(self.sigma_r, -self.sigma_i_amp * self.c_of_t(t) / t)
        };
        let kk = self.kappa * k;
        m * m + kk * kk
    }
}

pub fn map_lattice_to_dirac(config: &LatticeConfig) -> DiracParams {
    DiracParams {
        kappa: config.kappa,
        sigma_r: config.sigma_r,
        sigma_i_amp: config.gain_ratio_r * config.sigma_r,
        omega: config.omega,
    }
}

/// Two-component field on unit cells. Cell `n` pairs guides `2n` and
/// `2n - 1`; a missing guide at either edge contributes zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Spinor {
    pub psi1: Vec<C64>,
    pub psi2: Vec<C64>,
}

impl Spinor {
    /// Total weight on the two components, `(sum |psi1|^2, sum |psi2|^2)`.
    pub fn component_weights(&self) -> (f64, f64) {
        (
            self.psi1.iter().map(|c| c.norm_sqr()).sum(),
            self.psi2.iter().map(|c| c.norm_sqr()).sum(),
        )
    }
}

pub fn spinor_from_field(state: &FieldState) -> Spinor {
    let a = &state.amplitudes;
    let cells = a.len() / 2 + 1;
    let zero = C64::new(0.0, 0.0);
    let mut psi1 = vec![zero; cells];
    let mut psi2 = vec![zero; cells];
    for n in 0..cells {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        if let Some(&x) = a.get(2 * n) {
            psi1[n] = x * sign;
        }
        if n > 0 {
            if let Some(&x) = a.get(2 * n - 1) {
                psi2[n] = C64::i() * x * sign;
            }
        }
    }
    Spinor { psi1, psi2 }
}

/// Gauss-Legendre grid over the Gaussian beam spectrum
/// `G(k) = C exp(-k^2 s^2 / 2)` normalised so `4 pi int G^2 dk = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    pub k_nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub g_values: Vec<f64>,
    pub g_derivs: Vec<f64>,
    /// Envelope width in unit cells.
    pub width: f64,
}

impl SpectralGrid {
    pub fn gaussian(width: f64, n_nodes: usize) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) || n_nodes < 2 {
            return Err(Error::InvalidConfig(format!(
                "spectral grid needs width > 0 and >= 2 nodes, got {width}, {n_nodes}"
            )));
        }
        let k_max = (2.0 * (1.0 / SPECTRUM_TAIL).ln()).sqrt() / width;
        let (x, w) = gauss_legendre(n_nodes);
        let norm = (width / (4.0 * PI * PI.sqrt())).sqrt();
        let k_nodes: Vec<f64> = x.iter().map(|x| x * k_max).collect();
        let weights = w.iter().map(|w| w * k_max).collect();
        let g_values: Vec<f64> = k_nodes.iter().map(|k| norm * (-k * k * width * width / 2.0).exp()).collect();
        let g_derivs = k_nodes.iter().zip(&g_values).map(|(k, g)| -k * width * width * g).collect();
        Ok(Self { k_nodes, weights, g_values, g_derivs, width })
    }

    pub fn for_config(config: &LatticeConfig, n_nodes: usize) -> Result<Self> {
        Self::gaussian(config.envelope_width() / 2.0, n_nodes)
    }

    pub fn len(&self) -> usize {
        self.k_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_nodes.is_empty()
    }

    /// `4 pi sum w G^2`; unity when the grid resolves the spectrum.
    pub fn initial_norm(&self) -> f64 {
        4.0 * PI * self.weights.iter().zip(&self.g_values).map(|(w, g)| w * g * g).sum::<f64>()
    }
}

/// Follows `A(t) = t sqrt(A^2/t^2)` along increasing `t`, unwrapping the
/// argument of the radicand so that `A` stays continuous.
#[derive(Debug, Clone)]
pub struct ATracker {
    params: DiracParams,
    k: f64,
    t: f64,
    arg: f64,
}

impl ATracker {
    pub fn new(params: DiracParams, k: f64) -> Self {
        let arg = params.reduced_radicand(k, 0.0).arg();
        Self { params, k, t: 0.0, arg }
    }

    fn max_rate(&self) -> f64 {
        let p = &self.params;
        p.omega + p.sigma_r + p.sigma_i_amp + p.kappa * self.k.abs()
    }

    /// Advances to `t >= current` and returns `A(t)`.
    pub fn advance(&mut self, t: f64) -> C64 {
        assert!(t >= self.t, "A(t) is tracked along increasing t");
        let span = t - self.t;
        let steps = ((span * self.max_rate() * 8.0).ceil() as usize).max(1);
        let mut r = self.params.reduced_radicand(self.k, t);
        for j in 1..=steps {
            let tau = self.t + span * j as f64 / steps as f64;
            r = self.params.reduced_radicand(self.k, tau);
            let a = r.arg();
            let mut d = a - self.arg.rem_euclid(2.0 * PI);
            d -= 2.0 * PI * (d / (2.0 * PI)).round();
            self.arg += d;
        }
        self.t = t;
        C64::from_polar(r.norm().sqrt() * t, self.arg / 2.0)
    }
}

/// `A(t)` on the continuous branch, tracked from `t = 0`.
pub fn a_of_t(params: &DiracParams, k: f64, t: f64) -> C64 {
    ATracker::new(*params, k).advance(t)
}

/// `sin(A)/A`, even in `A`, evaluated from `A^2`.
fn sinc_of(r: C64, a: C64) -> C64 {
    if a.norm() < SMALL {
        C64::new(1.0, 0.0) - r / 6.0
    } else {
        a.sin() / a
    }
}

/// Per-node `psi_k(t)` in the commuting-Hamiltonian approximation.
pub fn spinor_evolution(params: &DiracParams, grid: &SpectralGrid, t: f64) -> Vec<[C64; 2]> {
    let b = params.b_of_t(t);
    grid.k_nodes
        .iter()
        .zip(&grid.g_values)
        .map(|(&k, &g)| {
            let r = params.a_squared(k, t);
            let a = r.sqrt();
            let cos = a.cos();
            let sinc = sinc_of(r, a);
            let kt = C64::new(-params.kappa * k * t, 0.0);
            let i = C64::i();
            [(cos + i * sinc * (kt + b)) * g, (cos + i * sinc * (kt - b)) * g]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiracPrediction {
    pub t: Vec<f64>,
    pub xi_drift: Vec<C64>,
    pub xi_zb: Vec<C64>,
    pub xi_im: Vec<C64>,
    pub psi_norm_sq: Vec<f64>,
    pub xi_expectation: Vec<f64>,
    /// `sin(A) cos*(A)` at `k = 0` on the tracked branch.
    pub kernel_k0: Vec<C64>,
}

struct Sample {
    drift: C64,
    zb: C64,
    im: C64,
    norm: f64,
}

fn sample(params: &DiracParams, grid: &SpectralGrid, t: f64) -> Sample {
    let kappa = params.kappa;
    let b = params.b_of_t(t);
    let b2 = b * b;
    let c = params.c_of_t(t);
    let mut drift = C64::new(0.0, 0.0);
    let mut zb = C64::new(0.0, 0.0);
    let mut im = 0.0;
    let mut norm = 0.0;
    for j in 0..grid.len() {
        let k = grid.k_nodes[j];
        let w = grid.weights[j];
        let g = grid.g_values[j];
        let r = params.a_squared(k, t);
        let a = r.sqrt();
        let cos = a.cos();
        let sinc = sinc_of(r, a);
        let cos2 = cos.norm_sqr();
        let sinc2 = sinc.norm_sqr();
        let kern = sinc * cos.conj();
        let g2w = g * g * w;
        if t != 0.0 {
            drift += (C64::new(cos2, 0.0) / r + sinc2) * (g2w * kappa.powi(3) * k * k);
            zb += kern * b2 / r * (g2w * kappa);
        }
        im += w * g * grid.g_derivs[j] * kappa * k * kern.im;
        let kt = kappa * k * t;
        let sr = params.sigma_r * t;
        let si = c * params.sigma_i_amp;
        norm += g2w * (cos2 + sinc2 * (kt * kt + sr * sr + si * si));
    }
    let t3 = t * t * t;
    Sample {
        drift: drift * (4.0 * PI * t3),
        zb: zb * (4.0 * PI * t),
        im: C64::new(0.0, 8.0 * PI * im * t),
        norm: 4.0 * PI * norm,
    }
}

/// Evaluates the prediction without the quadrature self-check.
pub fn evaluate(params: &DiracParams, grid: &SpectralGrid, times: &[f64], exec: Execution) -> DiracPrediction {
    let samples = map_indexed(times.len(), exec, |i| sample(params, grid, times[i]));
    let mut tracker = ATracker::new(*params, 0.0);
    let kernel_k0 = times
        .iter()
        .map(|&t| {
            let a = tracker.advance(t);
            a.sin() * a.cos().conj()
        })
        .collect();
    let xi_expectation = samples.iter().map(|s| ((s.drift + s.zb + s.im) / s.norm).re).collect();
    DiracPrediction {
        t: times.to_vec(),
        xi_drift: samples.iter().map(|s| s.drift).collect(),
        xi_zb: samples.iter().map(|s| s.zb).collect(),
        xi_im: samples.iter().map(|s| s.im).collect(),
        psi_norm_sq: samples.iter().map(|s| s.norm).collect(),
        xi_expectation,
        kernel_k0,
    }
}

fn series_change(a: &[C64], b: &[C64]) -> f64 {
    let scale = b.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    if diff == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn real_change(a: &[f64], b: &[f64]) -> f64 {
    let c = |v: &[f64]| v.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>();
    series_change(&c(a), &c(b))
}

/// Largest relative change of any output series between two predictions.
pub fn quadrature_change(a: &DiracPrediction, b: &DiracPrediction) -> (&'static str, f64) {
    [
        ("xi_drift", series_change(&a.xi_drift, &b.xi_drift)),
        ("xi_zb", series_change(&a.xi_zb, &b.xi_zb)),
        ("xi_im", series_change(&a.xi_im, &b.xi_im)),
        ("psi_norm_sq", real_change(&a.psi_norm_sq, &b.psi_norm_sq)),
        ("xi_expectation", real_change(&a.xi_expectation, &b.xi_expectation)),
    ]
    .into_iter()
    .fold(("none", 0.0), |acc, x| if x.1 > acc.1 { x } else { acc })
}

/// Evaluates the position expectation and its components at `times`
/// (ascending), checking that doubling the node count changes no output by
/// more than `1e-6` relative.
pub fn prediction(params: &DiracParams, grid: &SpectralGrid, times: &[f64]) -> Result<DiracPrediction> {
    prediction_with(params, grid, times, Execution::default())
}

pub fn prediction_with(
    params: &DiracParams,
    grid: &SpectralGrid,
    times: &[f64],
    exec: Execution,
) -> Result<DiracPrediction> {
    params.validate()?;
    if times.windows(2).any(|w| !(w[1] >= w[0])) || times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidConfig("prediction times must be finite, non-negative and ascending".into()));
    }
    let coarse = evaluate(params, grid, times, exec);
    let fine_grid = SpectralGrid::gaussian(grid.width, 2 * grid.len())?;
    let fine = evaluate(params, &fine_grid, times, exec);
    let (quantity, change) = quadrature_change(&coarse, &fine);
    if !(change <= 1e-6) {
        return Err(Error::QuadratureUnresolved { quantity, change });
    }
    Ok(coarse)
}
