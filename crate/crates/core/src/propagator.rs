//! Fixed-step RK4 integration of the coupled-mode equations, and an exact
//! propagator for z-independent gain/loss used as an oracle.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::lattice::{chain_rhs, sublattice_sign, FieldState, LatticeConfig};
use crate::{Error, Result, C64};

pub const DEFAULT_Z_MAX: f64 = 120.0;
pub const DEFAULT_CUTOFF: f64 = 1e9;
pub const MAX_STEP: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationPlan {
    pub z_max: f64,
    pub step: f64,
    pub sample_every: usize,
    pub divergence_cutoff: f64,
}

impl Default for PropagationPlan {
    fn default() -> Self {
        Self {
            z_max: DEFAULT_Z_MAX,
            step: MAX_STEP,
            sample_every: 4,
            divergence_cutoff: DEFAULT_CUTOFF,
        }
    }
}

/// `min(MAX_STEP, period / 40)`.
pub fn default_step(omega: f64) -> f64 {
    if omega > 0.0 {
        MAX_STEP.min(2.0 * PI / omega / 40.0)
    } else {
        MAX_STEP
    }
}

impl PropagationPlan {
    pub fn for_config(config: &LatticeConfig, z_max: f64) -> Self {
        Self { z_max, step: default_step(config.omega), ..Default::default() }
    }

    pub fn validate(&self, omega: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.z_max.is_finite() && self.z_max > 0.0) {
            return bad(format!("z_max must be positive, got {}", self.z_max));
        }
        if !(self.step.is_finite() && self.step > 0.0 && self.step <= self.z_max) {
            return bad(format!("step must satisfy 0 < step <= z_max, got {}", self.step));
        }
        if self.sample_every == 0 {
            return bad("sample_every must be >= 1".into());
        }
        if !(self.divergence_cutoff.is_finite() && self.divergence_cutoff > 1.0) {
            return bad(format!("divergence_cutoff must exceed 1, got {}", self.divergence_cutoff));
        }
        if omega > 0.0 && self.step > 2.0 * PI / omega / 20.0 {
            return bad(format!(
                "step {} does not resolve the modulation period {}",
                self.step,
                2.0 * PI / omega
            ));
        }
        Ok(())
    }

    /// Number of RK4 steps; the step is shrunk slightly to land on `z_max`.
    pub fn n_steps(&self) -> usize {
        ((self.z_max / self.step) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn effective_step(&self) -> f64 {
        self.z_max / self.n_steps() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Termination {
    Completed,
    Diverged,
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub state: FieldState,
    pub termination: Termination,
    /// Largest `sum |a|^2 / E0` seen at any step.
    pub max_intensity: f64,
    pub steps: usize,
}

/// A linear system `da/dz = f(z, a)`.
pub trait Dynamics {
    fn dim(&self) -> usize;
    fn rhs(&self, z: f64, a: &[C64], out: &mut [C64]);
}

impl Dynamics for LatticeConfig {
    fn dim(&self) -> usize {
        self.n_guides
    }

    fn rhs(&self, z: f64, a: &[C64], out: &mut [C64]) {
        chain_rhs(self.kappa, self.sigma_at(z), a, out);
    }
}

/// Chain with z-independent on-site `+-sigma` and coupling `kappa >= 0`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantChain {
    pub n: usize,
    pub kappa: f64,
    pub sigma: C64,
}

impl Dynamics for ConstantChain {
    fn dim(&self) -> usize {
        self.n
    }

    fn rhs(&self, _z: f64, a: &[C64], out: &mut [C64]) {
        chain_rhs(self.kappa, self.sigma, a, out);
    }
}

struct Rk4Buffers {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4Buffers {
    fn new(n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }
}

fn rk4_step<D: Dynamics>(dynamics: &D, z: f64, h: f64, a: &mut [C64], b: &mut Rk4Buffers) {
    let n = a.len();
    dynamics.rhs(z, a, &mut b.k1);
    for i in 0..n {
        b.tmp[i] = a[i] + b.k1[i] * (0.5 * h);
    }
    dynamics.rhs(z + 0.5 * h, &b.tmp, &mut b.k2);
    for i in 0..n {
        b.tmp[i] = a[i] + b.k2[i] * (0.5 * h);
    }
    dynamics.rhs(z + 0.5 * h, &b.tmp, &mut b.k3);
    for i in 0..n {
        b.tmp[i] = a[i] + b.k3[i] * h;
    }
    dynamics.rhs(z + h, &b.tmp, &mut b.k4);
    let h6 = h / 6.0;
    for i in 0..n {
        a[i] += (b.k1[i] + (b.k2[i] + b.k3[i]) * 2.0 + b.k4[i]) * h6;
    }
}

/// Integrates any [`Dynamics`] from `initial` with fixed-step RK4.
///
/// `reference` is the intensity the divergence ratio is measured against.
/// The observer sees the state at `z = 0`, every `sample_every` steps, and
/// the final state of a diverged run.
pub fn propagate_dynamics<D, F>(
    dynamics: &D,
    plan: &PropagationPlan,
    initial: &FieldState,
    reference: f64,
    mut observer: F,
) -> Result<Propagation>
where
    D: Dynamics,
    F: FnMut(&FieldState),
{
    if initial.len() != dynamics.dim() {
        return Err(Error::InvalidConfig(format!(
            "state has {} amplitudes, system has {}",
            initial.len(),
            dynamics.dim()
        )));
    }
    if !(reference > 0.0 && reference.is_finite()) {
        return Err(Error::ZeroField);
    }
    let n_steps = plan.n_steps();
    let h = plan.z_max / n_steps as f64;
    let z0 = initial.z;
    let mut state = initial.clone();
    let mut buf = Rk4Buffers::new(state.len());
    let mut max_intensity = state.total_intensity() / reference;
    observer(&state);

    for step in 1..=n_steps {
        rk4_step(dynamics, state.z, h, &mut state.amplitudes, &mut buf);
        state.z = z0 + step as f64 * h;
        let ratio = state.total_intensity() / reference;
        if !ratio.is_finite() {
            return Err(Error::NonFinite { z: state.z });
        }
        max_intensity = max_intensity.max(ratio);
        if ratio > plan.divergence_cutoff {
            observer(&state);
            return Ok(Propagation { state, termination: Termination::Diverged, max_intensity, steps: step });
        }
        if step % plan.sample_every == 0 {
            observer(&state);
        }
    }
    Ok(Propagation { state, termination: Termination::Completed, max_intensity, steps: n_steps })
}

/// Propagates the lattice defined by `config`, measuring divergence against
/// the initial total intensity.
pub fn propagate<F>(
    config: &LatticeConfig,
    plan: &PropagationPlan,
    initial: &FieldState,
    observer: F,
) -> Result<Propagation>
where
    F: FnMut(&FieldState),
{
    config.validate()?;
    plan.validate(config.omega)?;
    if !initial.is_finite() {
        return Err(Error::NonFinite { z: initial.z });
    }
    let e0 = initial.total_intensity();
    propagate_dynamics(config, plan, initial, e0, observer)
}

/// Exact `exp(-i H z)` for a chain with constant on-site `+-sigma`.
///
/// With `H = T + sigma P` (`T` hopping, `P` the sublattice sign) the chiral
/// relation `T P = -P T` gives `H^2 = T^2 + sigma^2`. Diagonalising the real
/// symmetric `T = V diag(lambda) V^T` then yields
/// `exp(-iHz) = V C V^T - i H V S V^T`, with `C = cos(z mu)`,
/// `S = sin(z mu)/mu`, `mu^2 = lambda^2 + sigma^2`. Both are even in `mu`,
/// so no branch choice enters.
pub struct ExactChain {
    chain: ConstantChain,
    vectors: DMatrix<f64>,
    mu_sq: Vec<C64>,
}

impl ExactChain {
    pub fn new(chain: ConstantChain) -> Result<Self> {
        let n = chain.n;
        let mut t = DMatrix::<f64>::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            t[(i, i + 1)] = -chain.kappa;
            t[(i + 1, i)] = -chain.kappa;
        }
        let eig = t.try_symmetric_eigen(1e-15, 100_000).ok_or(Error::Singular)?;
        let s2 = chain.sigma * chain.sigma;
        let mu_sq = eig.eigenvalues.iter().map(|&l| C64::new(l * l, 0.0) + s2).collect();
        Ok(Self { chain, vectors: eig.eigenvectors, mu_sq })
    }

    pub fn apply(&self, z: f64, a: &[C64]) -> Vec<C64> {
        let n = self.chain.n;
        let v = &self.vectors;
        let mut coeff = vec![C64::new(0.0, 0.0); n];
        for (j, c) in coeff.iter_mut().enumerate() {
            for i in 0..n {
                *c += a[i] * v[(i, j)];
            }
        }
        let mut ca = vec![C64::new(0.0, 0.0); n];
        let mut sa = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            let (c, s) = cos_sinc(self.mu_sq[j], z);
            let cj = coeff[j] * c;
            let sj = coeff[j] * s;
            for i in 0..n {
                ca[i] += cj * v[(i, j)];
                sa[i] += sj * v[(i, j)];
            }
        }
        let mut out = ca;
        let minus_i = C64::new(0.0, -1.0);
        for i in 0..n {
            let mut hx = self.chain.sigma * sublattice_sign(i) * sa[i];
            if i > 0 {
                hx -= sa[i - 1] * self.chain.kappa;
            }
            if i + 1 < n {
                hx -= sa[i + 1] * self.chain.kappa;
            }
            out[i] += minus_i * hx;
        }
        out
    }
}

/// `(cos(z mu), sin(z mu)/mu)` as functions of `mu^2`.
fn cos_sinc(mu_sq: C64, z: f64) -> (C64, C64) {
    let mu = mu_sq.sqrt();
    let x = mu * z;
    if x.norm() < 1e-4 {
        let x2 = x * x;
        let c = C64::new(1.0, 0.0) - x2 / 2.0 + x2 * x2 / 24.0;
        let s = (C64::new(1.0, 0.0) - x2 / 6.0 + x2 * x2 / 120.0) * z;
        (c, s)
    } else {
        (x.cos(), x.sin() / mu)
    }
}

/// Exact solution for z-independent `sigma_const`.
pub fn exact_propagator_const(
    config: &LatticeConfig,
    sigma_const: C64,
    z: f64,
    initial: &FieldState,
) -> Result<FieldState> {
    let n = initial.len();
    if n > 512 {
        return Err(Error::InvalidConfig(format!("dense oracle limited to 512 guides, got {n}")));
    }
    let chain = ConstantChain { n, kappa: config.kappa, sigma: sigma_const };
    let exact = ExactChain::new(chain)?;
    Ok(FieldState::new(initial.z + z, exact.apply(z, &initial.amplitudes)))
}

/// `max_n |a_n - b_n| / max_n |b_n|`.
pub fn relative_error(a: &[C64], b: &[C64]) -> f64 {
    let scale = b.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    diff / scale
}
