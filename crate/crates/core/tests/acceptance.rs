//! Acceptance criteria, one PASS/FAIL line each. Runs with its own main so
//! the report is printed regardless of output capture. Exits non-zero on a
//! failed criterion only when `ZBSIM_ACCEPTANCE_STRICT` is set.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zbsim::compare::{compare, CompareOptions};
use zbsim::diagnostics::{localization_metric, simulate, width_growth_rate, zb_frequency, Spread, LOCALIZATION_THRESHOLD};
use zbsim::dirac::{map_lattice_to_dirac, prediction, SpectralGrid, DEFAULT_NODES};
use zbsim::dispersion::{dispersion_exact, dispersion_small_imag};
use zbsim::exec::Execution;
use zbsim::lattice::{initial_gaussian_field, FieldState, LatticeConfig};
use zbsim::propagator::{
    exact_propagator_const, propagate, propagate_dynamics, relative_error, ConstantChain, ExactChain, PropagationPlan,
};
use zbsim::sweep::{detect_valleys, fit_through_origin, run_sweep, run_sweep_with, Axis, SweepParam, SweepSpec};
use zbsim::C64;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn lattice(r: f64, omega: f64) -> LatticeConfig {
    LatticeConfig { sigma_r: 2.1, gain_ratio_r: r, omega, ..Default::default() }
}

fn plan(cfg: &LatticeConfig, z_max: f64, sample_every: usize) -> PropagationPlan {
    PropagationPlan { sample_every, ..PropagationPlan::for_config(cfg, z_max) }
}

fn zb_of(cfg: &LatticeConfig) -> (f64, f64) {
    let (t, _) = simulate(cfg, &plan(cfg, 120.0, 4), false).unwrap();
    let est = zb_frequency(&t.z_samples, &t.center_of_mass).unwrap();
    (est.frequency, est.bin_width)
}

fn c1_hermitian_zb() -> Verdict {
    let (f, bin) = zb_of(&lattice(0.0, 0.0));
    let periods = 120.0 * 4.2 / (2.0 * PI);
    Verdict {
        pass: (f - 4.2).abs() <= bin && periods >= 20.0,
        detail: format!("dominant {f:.4} vs 2 sigma_r = 4.2, bin {bin:.4}, {periods:.0} periods"),
    }
}

fn comparison(r: f64, omega: f64) -> zbsim::compare::Comparison {
    let cfg = lattice(r, omega);
    let p = plan(&cfg, 16.0, 1);
    compare(&cfg, &p, &CompareOptions::default()).unwrap().0
}

fn c2_weak_agreement() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for omega in [0.2, 1.0, 3.0] {
        let c = comparison(0.2, omega);
        pass &= c.rms_ratio < 0.05;
        parts.push(format!("omega {omega}: {:.2}%", 100.0 * c.rms_ratio));
    }
    Verdict { pass, detail: format!("RMS / ZB amplitude over 10 periods (limit 5%): {}", parts.join(", ")) }
}

fn c3_documented_failure() -> Verdict {
    let c = comparison(0.5, 1.0);
    let amp_deviates = c.rms_ratio > 0.05;
    let phase_ok = c.phase.agrees(0.10);
    Verdict {
        pass: amp_deviates && phase_ok,
        detail: format!(
            "RMS {:.1}% of amplitude (must exceed 5%); crossings {} vs {}, mean offset {:.3} T, max {:.3} T (mean must be < 0.1 T)",
            100.0 * c.rms_ratio,
            c.phase.crossings_simulated,
            c.phase.crossings_analytic,
            c.phase.mean_offset,
            c.phase.max_offset
        ),
    }
}

fn c4_frequency_insensitivity() -> Verdict {
    let (f_lo, _) = zb_of(&lattice(0.2, 0.2));
    let (f_hi, _) = zb_of(&lattice(0.2, 3.0));
    let rel = (f_lo - f_hi).abs() / f_hi;
    Verdict {
        pass: rel < 0.05,
        detail: format!("omega 0.2: {f_lo:.4}, omega 3.0: {f_hi:.4}, difference {:.2}%", 100.0 * rel),
    }
}

const TARGET_VALLEYS: [f64; 4] = [4.2, 1.5, 0.9, 0.6];
const ODD: [f64; 4] = [1.0, 3.0, 5.0, 7.0];

fn c5_valleys() -> Verdict {
    let spec = SweepSpec::default();
    let d = run_sweep(&spec).unwrap();
    let report = detect_valleys(&d).unwrap();
    let found: Vec<f64> = report.valleys.iter().map(|v| v.omega_ratio).collect();
    let base = report.base_frequency.unwrap_or(f64::NAN);
    let mut pass = true;
    let mut parts = Vec::new();
    for (target, odd) in TARGET_VALLEYS.iter().zip(ODD) {
        let near = found.iter().copied().min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()));
        match near {
            Some(w) => {
                let pos_ok = (w - target).abs() / target <= 0.10;
                let ratio = base / w;
                let ratio_ok = (ratio - odd).abs() / odd <= 0.10;
                pass &= pos_ok && ratio_ok;
                parts.push(format!(
                    "{target} -> {w:.3} ({}), ratio {ratio:.2} vs {odd} ({})",
                    if pos_ok { "ok" } else { "off" },
                    if ratio_ok { "ok" } else { "off" }
                ));
            }
            None => {
                pass = false;
                parts.push(format!("{target} -> none"));
            }
        }
    }
    Verdict {
        pass,
        detail: format!(
            "96x96, base {base:.3}, valleys [{}]; {}",
            found.iter().map(|w| format!("{w:.3}")).collect::<Vec<_>>().join(", "),
            parts.join("; ")
        ),
    }
}

fn c6_base_scaling() -> Verdict {
    let sigmas = [1.1, 1.5, 2.1, 2.5, 3.1];
    let mut bases = Vec::new();
    for &s in &sigmas {
        let spec = SweepSpec {
            axis_x: Axis { param: SweepParam::OmegaRatio, min: 0.3, max: 3.0 * s, n: 96 },
            axis_y: Axis { param: SweepParam::GainRatio, min: 0.0, max: 1.0, n: 48 },
            base_config: LatticeConfig { sigma_r: s, ..Default::default() },
            ..Default::default()
        };
        let d = run_sweep(&spec).unwrap();
        bases.push(detect_valleys(&d).ok().and_then(|r| r.base_frequency).unwrap_or(f64::NAN));
    }
    let slope = fit_through_origin(&sigmas, &bases);
    Verdict {
        pass: (slope - 2.0).abs() <= 0.2,
        detail: format!(
            "omega_1 at sigma_r {:?}: [{}], fitted s = {slope:.3} (2 +- 0.2)",
            sigmas,
            bases.iter().map(|w| format!("{w:.3}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn c7_localization() -> Verdict {
    let run = |r: f64, omega: f64| {
        let cfg = lattice(r, omega);
        simulate(&cfg, &plan(&cfg, 120.0, 20), false).unwrap().0
    };
    let free = width_growth_rate(&run(0.0, 0.0));
    let a = localization_metric(&run(0.5, 4.0), free, LOCALIZATION_THRESHOLD).unwrap();
    let b = localization_metric(&run(0.5, 3.5), free, LOCALIZATION_THRESHOLD).unwrap();
    Verdict {
        pass: a.verdict == Spread::Localized && b.verdict == Spread::Spreading,
        detail: format!(
            "free rate {free:.4}; omega 4.0: {:?} ({:.0}% of free), omega 3.5: {:?} ({:.0}%), threshold {:.0}%",
            a.verdict,
            100.0 * a.growth_rate / free,
            b.verdict,
            100.0 * b.growth_rate / free,
            100.0 * LOCALIZATION_THRESHOLD
        ),
    }
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> FieldState {
    FieldState::new(0.0, (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
}

fn c8_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut parts = Vec::new();

    // RK4 against the exact propagator
    let mut worst: f64 = 0.0;
    for n in [4, 16, 64] {
        for (r, omega) in [(0.0, 2.0), (0.4, 0.0)] {
            let cfg = LatticeConfig { n_guides: n, spot_size: 17.0, sigma_r: 2.1, gain_ratio_r: r, omega, ..Default::default() };
            let s = random_state(&mut rng, n);
            let p = PropagationPlan { z_max: 10.0, step: 0.005, sample_every: 1, divergence_cutoff: 1e9 };
            let out = propagate(&cfg, &p, &s, |_| {}).unwrap();
            let exact = exact_propagator_const(&cfg, C64::new(2.1, 0.0), 10.0, &s).unwrap();
            worst = worst.max(relative_error(&out.state.amplitudes, &exact.amplitudes));
        }
        let chain = ConstantChain { n, kappa: 1.0, sigma: C64::new(2.1, 0.3) };
        let s = random_state(&mut rng, n);
        let p = PropagationPlan { z_max: 10.0, step: 0.005, sample_every: 1, divergence_cutoff: 1e30 };
        let out = propagate_dynamics(&chain, &p, &s, s.total_intensity(), |_| {}).unwrap();
        let exact = ExactChain::new(chain).unwrap().apply(10.0, &s.amplitudes);
        worst = worst.max(relative_error(&out.state.amplitudes, &exact));
    }
    let equiv_ok = worst < 1e-6;
    parts.push(format!("RK4 vs exact {worst:.2e} (< 1e-6)"));

    // convergence order over three halvings
    let chain = ConstantChain { n: 16, kappa: 1.0, sigma: C64::new(2.1, 0.4) };
    let s = random_state(&mut rng, 16);
    let exact = ExactChain::new(chain).unwrap().apply(10.0, &s.amplitudes);
    let errs: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|&h| {
            let p = PropagationPlan { z_max: 10.0, step: h, sample_every: 1, divergence_cutoff: 1e30 };
            let out = propagate_dynamics(&chain, &p, &s, s.total_intensity(), |_| {}).unwrap();
            relative_error(&out.state.amplitudes, &exact)
        })
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    let order_ok = orders.iter().all(|o| (o - 4.0).abs() <= 0.2);
    parts.push(format!("orders {}", orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join("/")));

    // norm conservation
    let cfg = lattice(0.0, 0.0);
    let init = initial_gaussian_field(&cfg).unwrap();
    let out = propagate(&cfg, &PropagationPlan::for_config(&cfg, 100.0), &init, |_| {}).unwrap();
    let drift = (out.state.total_intensity() - init.total_intensity()).abs() / init.total_intensity();
    let norm_ok = drift < 1e-8;
    parts.push(format!("norm drift {drift:.2e} (< 1e-8)"));

    // dispersion against bounded complex Schur on a rotated 3x3 embedding
    let mut disp_worst: f64 = 0.0;
    let mut schur_failed = 0;
    for _ in 0..1000 {
        let kappa = rng.random_range(0.1..3.0);
        let sigma = C64::new(rng.random_range(0.0..4.0), rng.random_range(-3.0..3.0));
        let q = rng.random_range(-PI..PI);
        let c = C64::new(2.0 * kappa * q.cos(), 0.0);
        let z = C64::new(0.0, 0.0);
        let far = C64::new(40.0, 7.0);
        let block = Matrix3::new(sigma, c, z, c, -sigma, z, z, z, far);
        let raw = Matrix3::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let u = raw.qr().q();
        let m = u * block * u.adjoint();
        let Some(schur) = m.try_schur(1e-15, 10_000) else {
            schur_failed += 1;
            continue;
        };
        let ev = schur.eigenvalues().unwrap();
        let (wp, wm) = dispersion_exact(kappa, sigma, q);
        let dist = |w: C64| ev.iter().map(|e| (e - w).norm()).fold(f64::INFINITY, f64::min);
        disp_worst = disp_worst.max(dist(wp).max(dist(wm)) / wp.norm().max(1.0));
    }
    let disp_ok = disp_worst < 1e-12 && schur_failed == 0;
    parts.push(format!("dispersion vs Schur eigenvalues {disp_worst:.1e} (< 1e-12), {schur_failed} unconverged"));

    // expansion error scaling
    let eps: Vec<f64> = (0..8).map(|j| 0.01 * 30f64.powf(j as f64 / 7.0)).collect();
    let errs: Vec<f64> = eps
        .iter()
        .map(|e| {
            (0..64)
                .map(|j| {
                    let q = -PI + 2.0 * PI * j as f64 / 63.0;
                    let exact = dispersion_exact(1.0, C64::new(2.1, 2.1 * e), q).0;
                    let approx = dispersion_small_imag(1.0, 2.1, 2.1 * e, q).unwrap().0;
                    (exact - approx).norm() / exact.norm()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let lx: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (_, slope) = zbsim::diagnostics::linear_fit(&lx, &ly);
    let expansion_ok = (slope - 2.0).abs() < 0.2;
    parts.push(format!("expansion error slope {slope:.3} (quadratic)"));

    Verdict { pass: equiv_ok && order_ok && norm_ok && disp_ok && expansion_ok, detail: parts.join("; ") }
}

fn c9_analytic_identities() -> Verdict {
    let mut parts = Vec::new();
    let times: Vec<f64> = (0..=3000).map(|i| i as f64 * 0.04).collect();

    let cfg = lattice(0.0, 3.0);
    let grid = SpectralGrid::for_config(&cfg, DEFAULT_NODES).unwrap();
    let p = prediction(&map_lattice_to_dirac(&cfg), &grid, &times).unwrap();
    let im_max = p.xi_im.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let drift: Vec<f64> = p.xi_drift.iter().zip(&p.psi_norm_sq).map(|(d, n)| d.re / n).collect();
    let (c0, s) = zbsim::diagnostics::linear_fit(&times, &drift);
    let resid = times.iter().zip(&drift).map(|(t, d)| (d - c0 - s * t).abs()).fold(0.0, f64::max);
    let scale = drift.iter().map(|d| d.abs()).fold(0.0, f64::max).max(1e-300);
    let drift_im = p.xi_drift.iter().map(|d| d.im.abs()).fold(0.0, f64::max);
    let herm_ok = im_max == 0.0 && resid <= 1e-9 * scale.max(1.0) && drift_im == 0.0;
    parts.push(format!("sigma_i = 0: max |xi_Im| {im_max:.1e}, drift linear residual {resid:.1e}"));

    let mut min_norm = f64::INFINITY;
    let mut resolved = true;
    for r in [0.2, 0.5, 1.0] {
        for omega in [0.2, 1.0, 3.0, 4.2] {
            let cfg = lattice(r, omega);
            match prediction(&map_lattice_to_dirac(&cfg), &grid, &times) {
                Ok(p) => min_norm = p.psi_norm_sq.iter().copied().fold(min_norm, f64::min),
                Err(e) => {
                    resolved = false;
                    parts.push(format!("r {r} omega {omega}: {e}"));
                }
            }
        }
    }
    parts.push(format!("min |psi|^2 {min_norm:.12} (>= 1 - 1e-9)"));
    parts.push(format!("node doubling stable on 12 configs: {resolved}"));
    Verdict { pass: herm_ok && min_norm >= 1.0 - 1e-9 && resolved, detail: parts.join("; ") }
}

fn files_except_manifest(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn c10_determinism() -> Verdict {
    let spec = SweepSpec {
        axis_x: Axis { param: SweepParam::OmegaRatio, min: 0.5, max: 6.0, n: 8 },
        axis_y: Axis { param: SweepParam::GainRatio, min: 0.0, max: 1.0, n: 8 },
        plan: PropagationPlan { z_max: 30.0, step: 0.02, ..Default::default() },
        ..Default::default()
    };
    let a = run_sweep_with(&spec, Execution::Serial).unwrap();
    let b = run_sweep_with(&spec, Execution::Parallel).unwrap();
    let bits = |d: &zbsim::sweep::PhaseDiagram| {
        d.cells.iter().map(|c| (c.log10_max_intensity.to_bits(), c.phase, c.non_finite)).collect::<Vec<_>>()
    };
    let grid_ok = bits(&a) == bits(&b);

    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    let exe = env!("CARGO_BIN_EXE_zbsim");
    let s1 = Command::new(exe)
        .args(["simulate", "--out"])
        .arg(&first)
        .args(["--set", "lattice.gain_ratio_r=0.3", "--set", "lattice.omega=2.5", "--set", "plan.z_max=10"])
        .status()
        .unwrap();
    let s2 = Command::new(exe)
        .args(["simulate", "--config"])
        .arg(first.join("manifest.json"))
        .arg("--out")
        .arg(&second)
        .status()
        .unwrap();
    let files_ok = s1.success() && s2.success() && {
        let (fa, fb) = (files_except_manifest(&first), files_except_manifest(&second));
        !fa.is_empty() && fa == fb
    };
    Verdict {
        pass: grid_ok && files_ok,
        detail: format!("serial == parallel bitwise: {grid_ok}; manifest re-run byte-identical: {files_ok}"),
    }
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [Criterion; 10] = [
        ("1 hermitian ZB frequency", c1_hermitian_zb),
        ("2 analytic agreement at r = 0.2", c2_weak_agreement),
        ("3 documented analytic deviation at r = 0.5", c3_documented_failure),
        ("4 ZB frequency insensitive to omega", c4_frequency_insensitivity),
        ("5 resonance valleys", c5_valleys),
        ("6 base-frequency scaling", c6_base_scaling),
        ("7 localization dichotomy", c7_localization),
        ("8 oracle suite", c8_oracles),
        ("9 analytic identities", c9_analytic_identities),
        ("10 determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = f();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {name}: {} ({:.1}s)", v.detail, start.elapsed().as_secs_f64());
        if !v.pass {
            failed += 1;
        }
    }
    println!("{failed} acceptance criteria failed");
    // the report is the result; strict mode turns red criteria into a failing exit
    if failed > 0 && std::env::var_os("ZBSIM_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
