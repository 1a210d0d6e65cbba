//! Runtime verification of the per-step identities and the static operator
//! identities on a concrete problem.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::grid::GridFunction;
use crate::model::GpeProblem;
use crate::solver::{run_with, SolverConfig, StepStats};
use crate::spectral::EtdMultipliers;
use crate::verify::identities::{
    etd_operator_defects, filter_contraction_margin, random_grid_function, random_staggered_field,
    smoothing_margins, summation_by_parts_defects, violated,
};

pub const IDENTITY_TOL: f64 = 1e-12;
pub const MASS_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteOptions {
    pub seed: u64,
    pub random_functions: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 0, random_functions: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    /// Worst observed defect (identities) or violation count / depth (inequalities).
    pub worst: f64,
    pub threshold: f64,
    pub passed: bool,
    /// Informational checks never fail the suite.
    pub gating: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub steps_run: usize,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.gating && !c.passed)
    }
}

fn at_most(name: &'static str, worst: f64, threshold: f64) -> CheckResult {
    CheckResult { name, worst, threshold, passed: worst <= threshold, gating: true }
}

fn dynamic_checks(stats: &StepStats) -> Vec<CheckResult> {
    vec![
        at_most("mass_conservation", stats.max_mass_defect, MASS_TOL),
        at_most("orthogonality", stats.max_ortho_defect, IDENTITY_TOL),
        at_most("intermediate_norm_ge_one", (1.0 - stats.min_tilde_norm).max(0.0), IDENTITY_TOL),
        at_most("pythagoras", stats.max_pythagoras_defect, IDENTITY_TOL),
        at_most("renormalization_triangle", stats.max_triangle_defect, IDENTITY_TOL),
        at_most("dissipation_inequality", (-stats.min_dissipation_margin).max(0.0), IDENTITY_TOL),
        at_most("energy_monotone", stats.energy_increases as f64, 0.0),
        CheckResult {
            name: "condition_a_violations",
            worst: stats.condition_a_violations as f64,
            threshold: 0.0,
            passed: stats.condition_a_violations == 0,
            gating: false,
        },
    ]
}

/// Worst defects of the operator identities over `count` random inputs.
pub fn static_checks(mult: &EtdMultipliers, count: usize, seed: u64) -> Vec<CheckResult> {
    let spec = *mult.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sbp = [0.0_f64; 3];
    let mut etd = [0.0_f64; 2];
    let mut smoothing_violations = [0usize; 2];
    let mut contraction_violations = 0usize;
    for _ in 0..count {
        let psi = random_grid_function(spec, &mut rng);
        let phi = random_grid_function(spec, &mut rng);
        let field = random_staggered_field(spec, &mut rng);
        for (w, d) in sbp.iter_mut().zip(summation_by_parts_defects(&psi, &phi, &field)) {
            *w = w.max(d);
        }
        for (w, d) in etd.iter_mut().zip(etd_operator_defects(mult, &psi, &phi)) {
            *w = w.max(d);
        }
        for (v, m) in smoothing_violations.iter_mut().zip(smoothing_margins(mult, &psi)) {
            *v += usize::from(violated(m));
        }
        contraction_violations += usize::from(violated(filter_contraction_margin(mult, &psi)));
    }
    vec![
        at_most("sbp_divergence", sbp[0], IDENTITY_TOL),
        at_most("sbp_laplacian", sbp[1], IDENTITY_TOL),
        at_most("sbp_bilaplacian", sbp[2], IDENTITY_TOL),
        at_most("etd_self_adjoint", etd[0], IDENTITY_TOL),
        at_most("etd_sqrt_squared", etd[1], IDENTITY_TOL),
        at_most("smoothing_l2", smoothing_violations[0] as f64, 0.0),
        at_most("smoothing_laplacian", smoothing_violations[1] as f64, 0.0),
        at_most("filter_contraction", contraction_violations as f64, 0.0),
    ]
}

/// Runs up to `n_steps` steps (stopping early on convergence) and evaluates
/// every per-step and static check.
pub fn invariant_suite(
    p: &GpeProblem,
    cfg: &SolverConfig,
    phi0: &GridFunction,
    n_steps: usize,
    opts: SuiteOptions,
) -> Result<SuiteReport> {
    let mut cfg = cfg.clone();
    cfg.max_steps = n_steps.max(1);
    cfg.record_history = false;
    let mult = EtdMultipliers::build(*p.spec(), cfg.tau)?;
    let out = run_with(p, &mult, &cfg, phi0, |_| {})?;
    let mut checks = dynamic_checks(&out.summary.stats);
    checks.extend(static_checks(&mult, opts.random_functions, opts.seed));
    let passed = checks.iter().all(|c| c.passed || !c.gating);
    Ok(SuiteReport { steps_run: out.summary.steps, checks, passed })
}
