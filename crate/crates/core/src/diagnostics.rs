//! Observables of simulated trajectories: centre of mass, width,
//! divergence classification, ZB frequency and localization.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::lattice::{initial_gaussian_field, positions, FieldState, LatticeConfig};
use crate::propagator::{propagate, PropagationPlan, Termination};
use crate::{Error, Result, C64};

/// Default localization threshold as a fraction of the free-spread rate.
pub const LOCALIZATION_THRESHOLD: f64 = 0.35;

pub fn center_of_mass(state: &FieldState) -> Result<f64> {
    let x = positions(state.len());
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, x) in state.amplitudes.iter().zip(&x) {
        let p = a.norm_sqr();
        num += p * x;
        den += p;
    }
    if !(den > f64::MIN_POSITIVE) {
        return Err(Error::ZeroField);
    }
    Ok(num / den)
}

/// Intensity-weighted RMS distance from the centre of mass.
pub fn rms_width(state: &FieldState) -> Result<f64> {
    let c = center_of_mass(state)?;
    let x = positions(state.len());
    let (mut num, mut den) = (0.0, 0.0);
    for (a, x) in state.amplitudes.iter().zip(&x) {
        let p = a.norm_sqr();
        num += p * (x - c) * (x - c);
        den += p;
    }
    Ok((num / den).sqrt())
}

/// `(sum p)^2 / sum p^2`.
pub fn participation_ratio(state: &FieldState) -> f64 {
    let (s1, s2) = state.amplitudes.iter().fold((0.0, 0.0), |(a, b), x| {
        let p = x.norm_sqr();
        (a + p, b + p * p)
    });
    if s2 > 0.0 {
        s1 * s1 / s2
    } else {
        0.0
    }
}

/// Sampled observables of one propagation.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trajectory {
    pub z_samples: Vec<f64>,
    pub center_of_mass: Vec<f64>,
    /// Ratio to the initial total intensity.
    pub total_intensity: Vec<f64>,
    pub width: Vec<f64>,
    pub participation: Vec<f64>,
    /// Sum of `|a_n|^2` over A guides and B guides, same ratio scale.
    pub sublattice_a: Vec<f64>,
    pub sublattice_b: Vec<f64>,
    pub termination: Option<Termination>,
    /// Largest intensity ratio over every integrator step.
    pub max_intensity: f64,
}

/// Observer that accumulates a [`Trajectory`] and, optionally, the
/// intensity map `|a_n(z)|^2`.
#[derive(Debug)]
pub struct Recorder {
    reference: f64,
    pub trajectory: Trajectory,
    pub intensity_map: Option<Vec<Vec<f64>>>,
    error: Option<Error>,
}

impl Recorder {
    pub fn new(reference: f64, keep_map: bool) -> Self {
        Self {
            reference,
            trajectory: Trajectory::default(),
            intensity_map: keep_map.then(Vec::new),
            error: None,
        }
    }

    pub fn observe(&mut self, state: &FieldState) {
        if self.error.is_some() {
            return;
        }
        let com = match center_of_mass(state) {
            Ok(c) => c,
            Err(e) => {
                self.error = Some(e);
                return;
            }
        };
        let t = &mut self.trajectory;
        t.z_samples.push(state.z);
        t.center_of_mass.push(com);
        t.total_intensity.push(state.total_intensity() / self.reference);
        t.width.push(rms_width(state).unwrap_or(f64::NAN));
        t.participation.push(participation_ratio(state));
        let (mut sa, mut sb) = (0.0, 0.0);
        for (n, a) in state.amplitudes.iter().enumerate() {
            if n % 2 == 0 {
                sa += a.norm_sqr();
            } else {
                sb += a.norm_sqr();
            }
        }
        t.sublattice_a.push(sa / self.reference);
        t.sublattice_b.push(sb / self.reference);
        if let Some(map) = &mut self.intensity_map {
            map.push(state.intensities());
        }
    }

    pub fn finish(mut self, termination: Termination, max_intensity: f64) -> Result<(Trajectory, Option<Vec<Vec<f64>>>)> {
        if let Some(e) = self.error {
            return Err(e);
        }
        self.trajectory.termination = Some(termination);
        self.trajectory.max_intensity = max_intensity;
        Ok((self.trajectory, self.intensity_map))
    }
}

/// Propagates the Gaussian input of `config` and records its trajectory.
pub fn simulate(
    config: &LatticeConfig,
    plan: &PropagationPlan,
    keep_map: bool,
) -> Result<(Trajectory, Option<Vec<Vec<f64>>>)> {
    let initial = initial_gaussian_field(config)?;
    let mut rec = Recorder::new(initial.total_intensity(), keep_map);
    let out = propagate(config, plan, &initial, |s| rec.observe(s))?;
    rec.finish(out.termination, out.max_intensity)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    PseudoPt,
    PtBreaking,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification {
    pub phase: Phase,
    pub log10_max_intensity: f64,
}

pub fn classify_max(max_intensity: f64, cutoff: f64) -> Classification {
    let phase = if max_intensity > cutoff || !max_intensity.is_finite() {
        Phase::PtBreaking
    } else {
        Phase::PseudoPt
    };
    Classification { phase, log10_max_intensity: max_intensity.log10() }
}

/// PT breaking iff the maximum intensity ratio exceeds `cutoff`.
pub fn classify(trajectory: &Trajectory, cutoff: f64) -> Classification {
    let sampled = trajectory.total_intensity.iter().copied().fold(0.0, f64::max);
    classify_max(sampled.max(trajectory.max_intensity), cutoff)
}

/// Least-squares line `(intercept, slope)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

pub fn detrend(t: &[f64], y: &[f64]) -> Vec<f64> {
    let (c, s) = linear_fit(t, y);
    t.iter().zip(y).map(|(t, y)| y - c - s * t).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZbEstimate {
    /// Dominant angular frequency.
    pub frequency: f64,
    /// Angular-frequency spacing of the DFT bins.
    pub bin_width: f64,
    pub peak: f64,
    pub floor: f64,
    /// Magnitude of the analytic signal of the detrended series.
    pub envelope: Vec<f64>,
}

fn uniform_step(t: &[f64]) -> Result<f64> {
    if t.len() < 16 {
        return Err(Error::InvalidConfig(format!("need at least 16 samples, got {}", t.len())));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(dt > 0.0) || t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
        return Err(Error::InvalidConfig("series must be uniformly sampled".into()));
    }
    Ok(dt)
}

/// Dominant angular frequency of the linearly detrended, Hann-windowed
/// series, and its analytic-signal envelope.
pub fn zb_frequency(t: &[f64], y: &[f64]) -> Result<ZbEstimate> {
    let dt = uniform_step(t)?;
    let n = t.len();
    let d = detrend(t, y);
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);

    let mut buf: Vec<C64> = d
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let w = 0.5 - 0.5 * (2.0 * PI * j as f64 / (n - 1) as f64).cos();
            C64::new(v * w, 0.0)
        })
        .collect();
    fft.process(&mut buf);
    let half = n / 2;
    let mags: Vec<f64> = buf[1..=half].iter().map(|c| c.norm()).collect();
    let (ipk, &peak) = mags
        .iter()
        .enumerate()
        .fold((0, &0.0), |acc, (i, m)| if *m > *acc.1 { (i, m) } else { acc });
    let mut sorted = mags.clone();
    sorted.sort_by(f64::total_cmp);
    let floor = sorted[sorted.len() / 2];
    if !(peak >= 3.0 * floor) || peak == 0.0 {
        return Err(Error::NoPeak { peak, floor });
    }
    let bin_width = 2.0 * PI / (n as f64 * dt);
    let frequency = (ipk + 1) as f64 * bin_width;
    let span = dt * (n - 1) as f64;
    let periods = frequency * span / (2.0 * PI);
    if periods < 8.0 {
        return Err(Error::TooShort { periods });
    }
    Ok(ZbEstimate { frequency, bin_width, peak, floor, envelope: analytic_envelope(&d) })
}

/// `|x + i H[x]|` via the one-sided spectrum.
pub fn analytic_envelope(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (j, c) in buf.iter_mut().enumerate() {
        let factor = if j == 0 || (n.is_multiple_of(2) && j == n / 2) {
            1.0
        } else if j < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *c *= factor;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.norm() / n as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Spread {
    Localized,
    Spreading,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Localization {
    pub verdict: Spread,
    pub growth_rate: f64,
    pub reference_rate: f64,
    pub threshold: f64,
}

/// Slope of the width over the final half of the run.
pub fn width_growth_rate(trajectory: &Trajectory) -> f64 {
    let n = trajectory.z_samples.len();
    let start = n / 2;
    let (_, slope) = linear_fit(&trajectory.z_samples[start..], &trajectory.width[start..]);
    slope
}

/// LOCALIZED when the width grows slower than `threshold` times the
/// free-spread rate `reference_rate` of the unmodulated lattice.
pub fn localization_metric(trajectory: &Trajectory, reference_rate: f64, threshold: f64) -> Result<Localization> {
    if trajectory.termination != Some(Termination::Completed) {
        return Err(Error::InvalidConfig("localization needs a completed, non-divergent run".into()));
    }
    if trajectory.z_samples.len() < 4 {
        return Err(Error::InvalidConfig("trajectory too short for a width fit".into()));
    }
    let growth_rate = width_growth_rate(trajectory);
    let verdict = if growth_rate < threshold * reference_rate {
        Spread::Localized
    } else {
        Spread::Spreading
    };
    Ok(Localization { verdict, growth_rate, reference_rate, threshold })
}
