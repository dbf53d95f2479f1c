//! Two-parameter sweeps of the lattice, pseudo-PT boundary extraction and
//! resonance-valley detection.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{classify_max, Phase};
use crate::exec::{map_indexed, Execution};
use crate::lattice::{initial_gaussian_field, FieldState, LatticeConfig};
use crate::propagator::{propagate_dynamics, PropagationPlan};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Gain/loss ratio `r`.
    GainRatio,
    /// `omega / omega0`.
    OmegaRatio,
    /// `sigma_r / kappa`.
    SigmaRatio,
    /// `omega0 / omega`.
    InverseOmega,
}

impl SweepParam {
    pub fn is_frequency(self) -> bool {
        matches!(self, SweepParam::OmegaRatio | SweepParam::InverseOmega)
    }

    pub fn label(self) -> &'static str {
        match self {
            SweepParam::GainRatio => "r",
            SweepParam::OmegaRatio => "omega/omega0",
            SweepParam::SigmaRatio => "sigma_r/kappa",
            SweepParam::InverseOmega => "omega0/omega",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.min + step * i as f64).collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.n < 8 {
            return Err(Error::InvalidConfig(format!("{name}: grid size must be >= 8, got {}", self.n)));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::InvalidConfig(format!("{name}: range must be finite and ordered")));
        }
        let positive = matches!(self.param, SweepParam::InverseOmega | SweepParam::SigmaRatio);
        if self.min < 0.0 || (positive && self.min <= 0.0) {
            return Err(Error::InvalidConfig(format!("{name}: range outside the parameter domain")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub axis_x: Axis,
    pub axis_y: Axis,
    pub base_config: LatticeConfig,
    pub plan: PropagationPlan,
    /// Holds `sigma_i / kappa` fixed instead of `r`.
    pub fixed_sigma_i: Option<f64>,
    /// Columns below this `omega / omega0` are left out of valley statistics.
    pub low_omega_floor: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            axis_x: Axis { param: SweepParam::OmegaRatio, min: 0.3, max: 6.0, n: 96 },
            axis_y: Axis { param: SweepParam::GainRatio, min: 0.0, max: 1.0, n: 96 },
            base_config: LatticeConfig { sigma_r: 2.1, ..Default::default() },
            plan: PropagationPlan { step: 0.02, ..Default::default() },
            fixed_sigma_i: None,
            low_omega_floor: 0.3,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.axis_x.validate("axis_x")?;
        self.axis_y.validate("axis_y")?;
        if self.axis_x.param == self.axis_y.param {
            return Err(Error::InvalidConfig("sweep axes must be distinct".into()));
        }
        if self.axis_x.param.is_frequency() && self.axis_y.param.is_frequency() {
            return Err(Error::InvalidConfig("only one axis may set the modulation frequency".into()));
        }
        if let Some(si) = self.fixed_sigma_i {
            if !(si.is_finite() && si >= 0.0) {
                return Err(Error::InvalidConfig("fixed_sigma_i must be finite and >= 0".into()));
            }
            if [self.axis_x.param, self.axis_y.param].contains(&SweepParam::GainRatio) {
                return Err(Error::InvalidConfig("fixed_sigma_i conflicts with an r axis".into()));
            }
        }
        if !(self.low_omega_floor.is_finite() && self.low_omega_floor >= 0.0) {
            return Err(Error::InvalidConfig("low_omega_floor must be >= 0".into()));
        }
        self.base_config.validate()?;
        self.plan.validate(0.0)?;
        Ok(())
    }

    /// Configuration of the cell at column `ix`, row `iy`.
    pub fn cell_config(&self, x: f64, y: f64) -> Result<LatticeConfig> {
        let mut c = self.base_config.clone();
        for (param, v) in [(self.axis_x.param, x), (self.axis_y.param, y)] {
            match param {
                SweepParam::GainRatio => c.gain_ratio_r = v,
                SweepParam::OmegaRatio => c.omega = v * c.omega0,
                SweepParam::SigmaRatio => c.sigma_r = v * c.kappa,
                SweepParam::InverseOmega => c.omega = c.omega0 / v,
            }
        }
        if let Some(si) = self.fixed_sigma_i {
            if c.sigma_r <= 0.0 {
                return Err(Error::InvalidConfig("fixed_sigma_i needs sigma_r > 0".into()));
            }
            c.gain_ratio_r = si * c.kappa / c.sigma_r;
        }
        c.validate()?;
        Ok(c)
    }

    /// Plan step tightened so each cell resolves its modulation period.
    pub fn cell_plan(&self, config: &LatticeConfig) -> PropagationPlan {
        let mut plan = self.plan.clone();
        if config.omega > 0.0 {
            plan.step = plan.step.min(2.0 * PI / config.omega / 40.0);
        }
        plan.sample_every = usize::MAX;
        plan
    }

    /// `omega / omega0` of column `x`, for frequency axes.
    pub fn omega_ratio_of(&self, x: f64) -> Option<f64> {
        match self.axis_x.param {
            SweepParam::OmegaRatio => Some(x),
            SweepParam::InverseOmega => Some(1.0 / x),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub log10_max_intensity: f64,
    pub phase: Phase,
    pub non_finite: bool,
}

fn evaluate_cell(spec: &SweepSpec, initial: &FieldState, e0: f64, x: f64, y: f64) -> Result<Cell> {
    let config = spec.cell_config(x, y)?;
    let plan = spec.cell_plan(&config);
    match propagate_dynamics(&config, &plan, initial, e0, |_| {}) {
        Ok(out) => {
            let c = classify_max(out.max_intensity, plan.divergence_cutoff);
            Ok(Cell { log10_max_intensity: c.log10_max_intensity, phase: c.phase, non_finite: false })
        }
        Err(Error::NonFinite { .. }) => {
            Ok(Cell { log10_max_intensity: f64::INFINITY, phase: Phase::PtBreaking, non_finite: true })
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagram {
    pub spec: SweepSpec,
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    /// Row-major: `cells[iy * nx + ix]`.
    pub cells: Vec<Cell>,
}

impl PhaseDiagram {
    pub fn nx(&self) -> usize {
        self.x_values.len()
    }

    pub fn ny(&self) -> usize {
        self.y_values.len()
    }

    pub fn cell(&self, ix: usize, iy: usize) -> &Cell {
        &self.cells[iy * self.nx() + ix]
    }

    /// Lowest row classified PT breaking in each column.
    pub fn boundary_rows(&self) -> Vec<Option<usize>> {
        (0..self.nx())
            .map(|ix| (0..self.ny()).find(|&iy| self.cell(ix, iy).phase == Phase::PtBreaking))
            .collect()
    }

    /// `(x, y*)` pairs of the per-column boundary.
    pub fn boundary(&self) -> Vec<(f64, Option<f64>)> {
        self.boundary_rows()
            .into_iter()
            .zip(&self.x_values)
            .map(|(b, &x)| (x, b.map(|iy| self.y_values[iy])))
            .collect()
    }

    /// Breaking cells with at least one pseudo-PT 4-neighbour.
    pub fn boundary_cells(&self) -> Vec<(usize, usize)> {
        let (nx, ny) = (self.nx(), self.ny());
        let mut out = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                if self.cell(ix, iy).phase != Phase::PtBreaking {
                    continue;
                }
                let nb = [
                    (ix.wrapping_sub(1), iy),
                    (ix + 1, iy),
                    (ix, iy.wrapping_sub(1)),
                    (ix, iy + 1),
                ];
                if nb.iter().any(|&(x, y)| x < nx && y < ny && self.cell(x, y).phase == Phase::PseudoPt) {
                    out.push((ix, iy));
                }
            }
        }
        out
    }

    pub fn count_non_finite(&self) -> usize {
        self.cells.iter().filter(|c| c.non_finite).count()
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<PhaseDiagram> {
    run_sweep_with(spec, Execution::default())
}

/// Evaluates every cell independently; results are merged by index so the
/// grid does not depend on execution order.
pub fn run_sweep_with(spec: &SweepSpec, exec: Execution) -> Result<PhaseDiagram> {
    spec.validate()?;
    let initial = initial_gaussian_field(&spec.base_config)?;
    let e0 = initial.total_intensity();
    let x_values = spec.axis_x.values();
    let y_values = spec.axis_y.values();
    let nx = x_values.len();
    let cells = map_indexed(nx * y_values.len(), exec, |i| {
        evaluate_cell(spec, &initial, e0, x_values[i % nx], y_values[i / nx])
    });
    let cells = cells.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(PhaseDiagram { spec: spec.clone(), x_values, y_values, cells })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Valley {
    pub omega_ratio: f64,
    pub columns: (usize, usize),
    pub boundary_row: usize,
    pub boundary_value: f64,
    pub prominence_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValleyReport {
    /// Sorted by descending frequency.
    pub valleys: Vec<Valley>,
    /// `omega_1 / omega_i` for each valley.
    pub ratios: Vec<f64>,
    pub base_frequency: Option<f64>,
    pub coverage: f64,
}

pub const VALLEY_WINDOW: usize = 2;

/// Local minima of the per-column boundary, by `+-2` column comparison with
/// at least one row of prominence. Flat bottoms collapse to their centre.
pub fn detect_valleys(diagram: &PhaseDiagram) -> Result<ValleyReport> {
    let spec = &diagram.spec;
    if !spec.axis_x.param.is_frequency() || spec.axis_y.param.is_frequency() {
        return Err(Error::InvalidConfig("valley detection needs frequency columns".into()));
    }
    if diagram.nx() < 64 {
        return Err(Error::TooCoarse { coverage: 0.0 });
    }
    let rows = diagram.boundary_rows();
    let defined = rows.iter().filter(|b| b.is_some()).count();
    let coverage = defined as f64 / rows.len() as f64;
    if coverage < 0.5 {
        return Err(Error::TooCoarse { coverage: 100.0 * coverage });
    }

    let mut cols: Vec<(f64, usize, usize)> = (0..diagram.nx())
        .filter_map(|ix| {
            let w = spec.omega_ratio_of(diagram.x_values[ix])?;
            (w >= spec.low_omega_floor).then(|| (w, ix, rows[ix].unwrap_or(diagram.ny())))
        })
        .collect();
    cols.sort_by(|a, b| a.0.total_cmp(&b.0));
    let h: Vec<usize> = cols.iter().map(|c| c.2).collect();
    let n = h.len();

    let mut valleys = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && h[j + 1] == h[i] {
            j += 1;
        }
        let lo = i.saturating_sub(VALLEY_WINDOW);
        let hi = (j + VALLEY_WINDOW).min(n - 1);
        let is_min = h[lo..=hi].iter().all(|&v| v >= h[i]) && h[i] < diagram.ny();
        if is_min {
            let left = barrier(h[..i].iter().rev(), h[i]);
            let right = barrier(h[j + 1..].iter(), h[i]);
            let prominence = left.min(right) - h[i];
            if prominence >= 1 {
                let w = 0.5 * (cols[i].0 + cols[j].0);
                valleys.push(Valley {
                    omega_ratio: w,
                    columns: (cols[i].1.min(cols[j].1), cols[i].1.max(cols[j].1)),
                    boundary_row: h[i],
                    boundary_value: diagram.y_values[h[i]],
                    prominence_rows: prominence,
                });
            }
        }
        i = j + 1;
    }
    valleys.sort_by(|a, b| b.omega_ratio.total_cmp(&a.omega_ratio));
    let base_frequency = valleys.first().map(|v| v.omega_ratio);
    let ratios = valleys.iter().map(|v| base_frequency.unwrap_or(f64::NAN) / v.omega_ratio).collect();
    Ok(ValleyReport { valleys, ratios, base_frequency, coverage })
}

/// Highest boundary value before the first strictly lower one.
fn barrier<'a>(side: impl Iterator<Item = &'a usize>, level: usize) -> usize {
    let mut top = level;
    for &v in side {
        if v < level {
            return top;
        }
        top = top.max(v);
    }
    top
}

/// Least-squares slope of `y = s x`.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> f64 {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    sxy / sxx
}
