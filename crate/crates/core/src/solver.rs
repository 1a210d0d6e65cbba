//! Explicit stabilized ETD normalized gradient flow.
//!
//! One step maps a unit-mass `phi^n` to
//!
//! ```text
//! phi~ = phi^n + (1/tau + A)^{-1} [ 1/2 G_h Delta_h phi^n - V phi^n - beta |phi^n|^2 phi^n + lambda^n phi^n ]
//! phi^{n+1} = phi~ / ||phi~||_2
//! ```
//!
//! which costs one forward and one inverse DFT: the forward spectrum of
//! `phi^{n+1}` is kept and reused by the following step for `G_h Delta_h`,
//! `lambda^{n+1}` and the modified energy.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{grad_norm_sq, l2_norm, GridFunction};
use crate::model::{energy_standard, gpe_residual, stabilizer_auto, stabilizer_lower_bound, GpeProblem};
use crate::spectral::{EtdMultipliers, Multiplier};

/// Relative slack allowed before a step counts as an energy increase.
pub const ENERGY_TOL: f64 = 1e-10;

/// Tolerance on `| ||phi||_2 - 1 |` required of step inputs.
pub const UNIT_MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stabilizer {
    /// Recomputed from the current iterate every step.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub tau: f64,
    #[serde(default = "default_stabilizer")]
    pub stabilizer: Stabilizer,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_true")]
    pub record_history: bool,
    /// Stop (unconverged) once the increment has not improved for this many steps.
    #[serde(default = "default_stagnation_window")]
    pub stagnation_window: usize,
}

fn default_stabilizer() -> Stabilizer {
    Stabilizer::Auto
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_steps() -> usize {
    1_000_000
}

fn default_true() -> bool {
    true
}

fn default_stagnation_window() -> usize {
    10_000
}

impl SolverConfig {
    pub fn new(tau: f64) -> Self {
        SolverConfig {
            tau,
            stabilizer: Stabilizer::Auto,
            tol: default_tol(),
            max_steps: default_max_steps(),
            record_history: true,
            stagnation_window: default_stagnation_window(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::Config(format!("solver.tau must be finite and > 0 (got {})", self.tau)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Config(format!("solver.tol must be finite and > 0 (got {})", self.tol)));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("solver.max_steps must be >= 1".into()));
        }
        if self.stagnation_window == 0 {
            return Err(Error::Config("solver.stagnation_window must be >= 1".into()));
        }
        if let Stabilizer::Fixed(a) = self.stabilizer {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::Config(format!("solver.stabilizer.fixed must be >= 0 (got {a})")));
            }
        }
        Ok(())
    }
}

/// Initial data, L2-normalized on the grid before the first step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialGuess {
    /// `exp(-|x|^2/2) / pi^{d/4}`.
    Gaussian,
    /// `exp(-V)`.
    ExpMinusV,
    Constant,
    File {
        path: std::path::PathBuf,
    },
}

impl InitialGuess {
    pub fn build(&self, p: &GpeProblem) -> Result<GridFunction> {
        let spec = *p.spec();
        let raw = match self {
            InitialGuess::Gaussian => {
                let c = std::f64::consts::PI.powf(-(spec.dim() as f64) / 4.0);
                GridFunction::from_real_fn(spec, |x| {
                    c * (-0.5 * x.iter().map(|xi| xi * xi).sum::<f64>()).exp()
                })
            }
            InitialGuess::ExpMinusV => p.potential().map(|v| Complex64::new((-v.re).exp(), 0.0)),
            InitialGuess::Constant => GridFunction::constant(spec, Complex64::new(1.0, 0.0)),
            InitialGuess::File { path } => {
                let f = crate::io::read_grid_function(path)?;
                f.same_shape(p.potential())?;
                f
            }
        };
        normalize(&raw)
    }
}

/// `f / ||f||_2`.
pub fn normalize(f: &GridFunction) -> Result<GridFunction> {
    let n = l2_norm(f);
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::Domain(format!("cannot normalize a function with l2 norm {n}")));
    }
    Ok(f.scaled(Complex64::new(1.0 / n, 0.0)))
}

/// Stabilizer value used for a step from `phi_n`.
pub fn resolve_stabilizer(cfg: &SolverConfig, p: &GpeProblem, phi_n: &GridFunction) -> f64 {
    match cfg.stabilizer {
        Stabilizer::Auto => stabilizer_auto(p, phi_n),
        Stabilizer::Fixed(a) => a,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub phi: GridFunction,
    pub step: usize,
    pub converged: bool,
}

/// Everything measured while taking step `n -> n+1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepDiagnostics {
    /// Index of the produced iterate (`n + 1`).
    pub step: usize,
    pub energy_before: f64,
    pub energy_after: f64,
    /// Unfiltered discrete energy of `phi^{n+1}`.
    pub energy_standard: f64,
    pub lambda: f64,
    pub stabilizer: f64,
    /// `||phi~||_2 - 1`
    pub norm_drift: f64,
    /// `|<phi~ - phi^n, phi^n>|`
    pub ortho_defect: f64,
    /// `||phi~ - phi^n||_2`
    pub update_norm: f64,
    /// `| ||phi~||^2 - 1 - ||phi~ - phi^n||^2 |`
    pub pythagoras_defect: f64,
    /// `|| (phi~ - phi^{n+1}) - (||phi~|| - 1) phi^{n+1} ||_2`
    pub triangle_defect: f64,
    /// `| ||phi^{n+1}||_2 - 1 |`
    pub mass_defect: f64,
    /// `(1/tau)||d||^2 - 1/2 <G Delta phi, d> - 1/4 (||G^{1/2} grad phi~||^2 - ||G^{1/2} grad phi||^2)`, `d = phi~ - phi^n`.
    pub dissipation_margin: f64,
    /// Scale for `dissipation_margin`: the largest term entering it.
    pub dissipation_scale: f64,
    /// `||phi^{n+1} - phi^n||_inf / tau`
    pub increment: f64,
    pub phi_inf: f64,
    pub phi_tilde_inf: f64,
    /// Whether `A` met the sufficient bound for energy decay at this step.
    pub condition_a: bool,
}

impl StepDiagnostics {
    pub fn energy_rise(&self) -> f64 {
        (self.energy_after - self.energy_before) / (1.0 + self.energy_before.abs())
    }

    pub fn energy_increased(&self) -> bool {
        self.energy_rise() > ENERGY_TOL
    }
}

/// Running extremes over a sequence of steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepStats {
    pub steps: usize,
    pub energy_increases: usize,
    pub max_energy_rise: f64,
    /// Relative to `1 + ||phi~ - phi^n||_2`.
    pub max_ortho_defect: f64,
    pub min_tilde_norm: f64,
    /// Relative to `||phi~||_2^2`.
    pub max_pythagoras_defect: f64,
    pub max_triangle_defect: f64,
    pub max_mass_defect: f64,
    pub min_dissipation_margin: f64,
    pub condition_a_violations: usize,
}

impl Default for StepStats {
    fn default() -> Self {
        StepStats {
            steps: 0,
            energy_increases: 0,
            max_energy_rise: f64::NEG_INFINITY,
            max_ortho_defect: 0.0,
            min_tilde_norm: f64::INFINITY,
            max_pythagoras_defect: 0.0,
            max_triangle_defect: 0.0,
            max_mass_defect: 0.0,
            min_dissipation_margin: f64::INFINITY,
            condition_a_violations: 0,
        }
    }
}

impl StepStats {
    pub fn record(&mut self, d: &StepDiagnostics) {
        self.steps += 1;
        if d.energy_increased() {
            self.energy_increases += 1;
        }
        self.max_energy_rise = self.max_energy_rise.max(d.energy_rise());
        self.max_ortho_defect = self.max_ortho_defect.max(d.ortho_defect / (1.0 + d.update_norm));
        self.min_tilde_norm = self.min_tilde_norm.min(1.0 + d.norm_drift);
        let tilde_sq = (1.0 + d.norm_drift).powi(2);
        self.max_pythagoras_defect = self.max_pythagoras_defect.max(d.pythagoras_defect / tilde_sq);
        self.max_triangle_defect = self.max_triangle_defect.max(d.triangle_defect);
        self.max_mass_defect = self.max_mass_defect.max(d.mass_defect);
        self.min_dissipation_margin =
            self.min_dissipation_margin.min(d.dissipation_margin / (1.0 + d.dissipation_scale));
        if !d.condition_a {
            self.condition_a_violations += 1;
        }
    }
}

/// An iterate together with its forward spectrum and filtered gradient energy.
#[derive(Debug, Clone)]
pub(crate) struct Iterate {
    pub phi: GridFunction,
    spectrum: Vec<Complex64>,
    grad_sq: f64,
}

impl Iterate {
    pub fn new(mult: &EtdMultipliers, phi: GridFunction) -> Self {
        let spectrum = mult.dft().forward(&phi);
        let grad_sq = mult.gsqrt_grad_sq_from_spectrum(&spectrum);
        Iterate { phi, spectrum, grad_sq }
    }

    pub fn energy(&self, p: &GpeProblem) -> f64 {
        let (pot, quartic) = p.local_terms(&self.phi);
        0.5 * self.grad_sq + pot + 0.5 * p.beta() * quartic
    }
}

fn check_compatible(p: &GpeProblem, mult: &EtdMultipliers, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    if mult.spec() != p.spec() {
        return Err(Error::ShapeMismatch("multipliers and problem live on different grids".into()));
    }
    if mult.tau() != cfg.tau {
        return Err(Error::Config(format!(
            "multipliers built for tau = {}, config has tau = {}",
            mult.tau(),
            cfg.tau
        )));
    }
    Ok(())
}

pub(crate) fn advance(
    p: &GpeProblem,
    mult: &EtdMultipliers,
    cfg: &SolverConfig,
    it: &Iterate,
    step: usize,
) -> Result<(Iterate, StepDiagnostics)> {
    let phi = &it.phi;
    let spec = *phi.spec();
    let w = spec.cell_volume();
    let tau = cfg.tau;
    let beta = p.beta();
    let a = resolve_stabilizer(cfg, p, phi);

    let (pot, quartic) = p.local_terms(phi);
    let energy_before = 0.5 * it.grad_sq + pot + 0.5 * beta * quartic;
    let lambda = 0.5 * it.grad_sq + pot + beta * quartic;

    let mut gdelta = it.spectrum.clone();
    mult.apply_to_spectrum(Multiplier::GDelta, &mut gdelta);

    let coef = 1.0 / (1.0 / tau + a);
    let mut tilde = Vec::with_capacity(spec.len());
    let (mut dot_d_phi, mut d_sq, mut gd_dot_d) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    let (mut tilde_sq, mut tilde_inf, mut phi_inf) = (0.0, 0.0_f64, 0.0_f64);
    for ((z, gd), v) in phi.values().iter().zip(&gdelta).zip(p.potential().values()) {
        let rho = z.norm_sqr();
        let d = coef * (0.5 * gd - (v.re + beta * rho - lambda) * z);
        let t = z + d;
        dot_d_phi += d.conj() * z;
        d_sq += d.norm_sqr();
        gd_dot_d += (gd.conj() * d).re;
        let t_sq = t.norm_sqr();
        tilde_sq += t_sq;
        tilde_inf = tilde_inf.max(t_sq);
        phi_inf = phi_inf.max(rho);
        tilde.push(t);
    }
    let (dot_d_phi, d_sq, gd_dot_d, tilde_sq) = (dot_d_phi * w, d_sq * w, gd_dot_d * w, tilde_sq * w);
    let (tilde_inf, phi_inf) = (tilde_inf.sqrt(), phi_inf.sqrt());
    let tilde_norm = tilde_sq.sqrt();
    if !tilde_norm.is_finite() {
        return Err(Error::Divergence { step, what: "intermediate profile" });
    }
    if tilde_norm == 0.0 {
        return Err(Error::Domain(format!("intermediate profile vanished at step {step}")));
    }

    let inv = 1.0 / tilde_norm;
    let drift = tilde_norm - 1.0;
    let (mut next_sq, mut triangle_sq, mut increment) = (0.0, 0.0, 0.0_f64);
    let next_values: Vec<Complex64> = tilde
        .iter()
        .zip(phi.values())
        .map(|(t, z)| {
            let nz = t * inv;
            next_sq += nz.norm_sqr();
            triangle_sq += ((t - nz) - drift * nz).norm_sqr();
            increment = increment.max((nz - z).norm());
            nz
        })
        .collect();
    let next_phi = GridFunction::from_values(spec, next_values)?;
    let next = Iterate::new(mult, next_phi);

    let energy_after = next.energy(p);
    if !energy_after.is_finite() {
        return Err(Error::Divergence { step, what: "modified energy" });
    }
    let (pot_next, quartic_next) = p.local_terms(&next.phi);
    let energy_std = 0.5 * grad_norm_sq(&next.phi) + pot_next + 0.5 * beta * quartic_next;

    // ||G^{1/2} grad phi~||^2 = ||phi~||^2 ||G^{1/2} grad phi^{n+1}||^2
    let tilde_grad_sq = tilde_sq * next.grad_sq;
    let lhs = d_sq / tau - 0.5 * gd_dot_d;
    let rhs = 0.25 * (tilde_grad_sq - it.grad_sq);
    let dissipation_scale = (d_sq / tau).max(0.5 * gd_dot_d.abs()).max(0.25 * tilde_grad_sq.max(it.grad_sq));

    let diag = StepDiagnostics {
        step,
        energy_before,
        energy_after,
        energy_standard: energy_std,
        lambda,
        stabilizer: a,
        norm_drift: drift,
        ortho_defect: dot_d_phi.norm(),
        update_norm: d_sq.sqrt(),
        pythagoras_defect: (tilde_sq - 1.0 - d_sq).abs(),
        triangle_defect: (triangle_sq * w).sqrt(),
        mass_defect: ((next_sq * w).sqrt() - 1.0).abs(),
        dissipation_margin: lhs - rhs,
        dissipation_scale,
        increment: increment / tau,
        phi_inf,
        phi_tilde_inf: tilde_inf,
        condition_a: a >= stabilizer_lower_bound(p, phi_inf, tilde_inf),
    };
    Ok((next, diag))
}

/// One step of the scheme from a unit-mass `phi_n`.
pub fn step(
    p: &GpeProblem,
    mult: &EtdMultipliers,
    cfg: &SolverConfig,
    phi_n: &GridFunction,
) -> Result<(GridFunction, StepDiagnostics)> {
    check_compatible(p, mult, cfg)?;
    p.potential().same_shape(phi_n)?;
    let mass = l2_norm(phi_n);
    if (mass - 1.0).abs() > UNIT_MASS_TOL {
        return Err(Error::Domain(format!("step input must have unit l2 norm (got {mass})")));
    }
    let (next, diag) = advance(p, mult, cfg, &Iterate::new(mult, phi_n.clone()), 1)?;
    Ok((next.phi, diag))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxSteps,
    Stagnated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub converged: bool,
    pub stop_reason: StopReason,
    pub steps: usize,
    pub tau: f64,
    pub energy_modified: f64,
    pub energy_standard: f64,
    pub chemical_potential: f64,
    pub residual: f64,
    pub final_increment: f64,
    pub final_stabilizer: f64,
    pub stats: StepStats,
    /// Not serialized: keeps summaries byte-identical across runs.
    #[serde(skip)]
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: SolverState,
    pub history: Vec<StepDiagnostics>,
    pub summary: RunSummary,
}

/// Iterates from `phi0` (normalized first) until
/// `||phi^{n+1} - phi^n||_inf / tau <= tol`, `max_steps`, or stagnation.
pub fn run(p: &GpeProblem, cfg: &SolverConfig, phi0: &GridFunction) -> Result<RunOutput> {
    let mult = EtdMultipliers::build(*p.spec(), cfg.tau)?;
    run_with(p, &mult, cfg, phi0, |_| {})
}

/// [`run`] with prebuilt multipliers and a per-step observer.
pub fn run_with(
    p: &GpeProblem,
    mult: &EtdMultipliers,
    cfg: &SolverConfig,
    phi0: &GridFunction,
    mut observe: impl FnMut(&StepDiagnostics),
) -> Result<RunOutput> {
    check_compatible(p, mult, cfg)?;
    p.potential().same_shape(phi0)?;
    let start = Instant::now();
    let mut it = Iterate::new(mult, normalize(phi0)?);
    let mut history = Vec::new();
    let mut stats = StepStats::default();
    let mut best_increment = f64::INFINITY;
    let mut since_best = 0;
    let mut last: Option<StepDiagnostics> = None;
    let mut reason = StopReason::MaxSteps;

    for n in 1..=cfg.max_steps {
        let (next, diag) = advance(p, mult, cfg, &it, n)?;
        it = next;
        stats.record(&diag);
        observe(&diag);
        if cfg.record_history {
            history.push(diag);
        }
        last = Some(diag);
        if n % 10_000 == 0 {
            log::debug!("step {n}: E_h = {:.12e}, increment = {:.3e}", diag.energy_after, diag.increment);
        }
        if diag.increment <= cfg.tol {
            reason = StopReason::Converged;
            break;
        }
        if diag.increment < best_increment {
            best_increment = diag.increment;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.stagnation_window {
                reason = StopReason::Stagnated;
                break;
            }
        }
    }

    let last = last.expect("max_steps >= 1");
    let mu = last_lambda(p, &it);
    let summary = RunSummary {
        converged: reason == StopReason::Converged,
        stop_reason: reason,
        steps: last.step,
        tau: cfg.tau,
        energy_modified: it.energy(p),
        energy_standard: energy_standard(p, &it.phi)?,
        chemical_potential: mu,
        residual: gpe_residual(p, &it.phi, mu)?,
        final_increment: last.increment,
        final_stabilizer: last.stabilizer,
        stats,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    log::info!(
        "{:?} after {} steps in {:.2}s: E_h = {:.12}, mu = {:.12}",
        reason,
        summary.steps,
        summary.wall_time_s,
        summary.energy_modified,
        summary.chemical_potential
    );
    Ok(RunOutput {
        state: SolverState { phi: it.phi, step: summary.steps, converged: summary.converged },
        history,
        summary,
    })
}

fn last_lambda(p: &GpeProblem, it: &Iterate) -> f64 {
    let (pot, quartic) = p.local_terms(&it.phi);
    0.5 * it.grad_sq + pot + p.beta() * quartic
}
