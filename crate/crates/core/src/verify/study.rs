//! Refinement studies: run the solver to convergence at a ladder of time
//! steps or mesh sizes, difference each level against the next finer one,
//! and estimate the observed order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{inner_product, l2_norm, laplacian, GridFunction, GridSpec};
use crate::scenario::Scenario;
use crate::solver::{run, SolverConfig};

/// Order windows are `expected +- ORDER_WINDOW`.
pub const ORDER_WINDOW: f64 = 0.2;

/// Errors at or below this are treated as exact.
pub const EXACT_ERROR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyMode {
    /// Levels are time steps; grid fixed.
    Temporal,
    /// Levels are mesh sizes `h`; time step fixed.
    Spatial,
}

impl StudyMode {
    pub fn expected_order(self) -> f64 {
        match self {
            StudyMode::Temporal => 1.0,
            StudyMode::Spatial => 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyPlan {
    pub mode: StudyMode,
    pub scenario: Scenario,
    pub solver: SolverConfig,
    /// Each entry half the previous; at least three.
    pub levels: Vec<f64>,
}

impl StudyPlan {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.solver.validate()?;
        if self.levels.len() < 3 {
            return Err(Error::Config(format!(
                "study.levels needs at least 3 entries (got {})",
                self.levels.len()
            )));
        }
        if let Some(v) = self.levels.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Config(format!("study.levels must be positive (got {v})")));
        }
        for w in self.levels.windows(2) {
            if (w[1] * 2.0 - w[0]).abs() > 1e-12 * w[0] {
                return Err(Error::Config(format!(
                    "study.levels must halve at every step ({} -> {})",
                    w[0], w[1]
                )));
            }
        }
        if self.mode == StudyMode::Spatial {
            for &h in &self.levels {
                self.points_for(h)?;
            }
        }
        Ok(())
    }

    /// Points per axis giving spacing `h` on the scenario box.
    fn points_for(&self, h: f64) -> Result<usize> {
        let spec = self.scenario.spec()?;
        let mut n = None;
        for a in 0..spec.dim() {
            let exact = (spec.hi()[a] - spec.lo()[a]) / h;
            let k = exact.round();
            if (exact - k).abs() > 1e-9 * exact || k < 4.0 {
                return Err(Error::Config(format!(
                    "study level h = {h} does not divide axis {a} of length {} into >= 4 cells",
                    spec.hi()[a] - spec.lo()[a]
                )));
            }
            match n {
                None => n = Some(k as usize),
                Some(m) if m == k as usize => {}
                Some(m) => {
                    return Err(Error::Config(format!(
                        "study level h = {h} gives {m} and {k} points on different axes"
                    )))
                }
            }
        }
        Ok(n.expect("dim >= 1"))
    }

    fn level_inputs(&self, value: f64) -> Result<(Scenario, SolverConfig)> {
        let mut cfg = self.solver.clone();
        cfg.record_history = false;
        Ok(match self.mode {
            StudyMode::Temporal => {
                cfg.tau = value;
                (self.scenario.clone(), cfg)
            }
            StudyMode::Spatial => (self.scenario.with_points(self.points_for(value)?), cfg),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResult {
    pub value: f64,
    pub n: Vec<usize>,
    pub tau: f64,
    pub steps: usize,
    pub energy_modified: f64,
    pub chemical_potential: f64,
}

/// Difference between level `level` and level `level + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub level: usize,
    pub value: f64,
    pub l2: f64,
    pub linf: f64,
    /// `||Lap_h (difference)||_2` on the coarser grid.
    pub laplacian_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub mode: StudyMode,
    pub expected_order: f64,
    pub window: [f64; 2],
    pub levels: Vec<LevelResult>,
    pub errors: Vec<ErrorRow>,
    pub orders_l2: Vec<f64>,
    pub orders_linf: Vec<f64>,
    pub mean_order_l2: Option<f64>,
    pub mean_order_linf: Option<f64>,
    /// Every error was exactly representable as zero: no order to estimate.
    pub degenerate_exact: bool,
    pub passed: bool,
}

/// Multiply `b` by the unit phase that minimizes `||a - e^{i theta} b||_2`.
pub fn phase_align(a: &GridFunction, b: &GridFunction) -> Result<GridFunction> {
    let z = inner_product(b, a)?;
    let m = z.norm();
    Ok(if m > 0.0 { b.scaled(z / m) } else { b.clone() })
}

/// Sample a function on a grid refined 2x (same `lo`) at the coarse nodes.
pub fn restrict_to_coarse(fine: &GridFunction, coarse: &GridSpec) -> Result<GridFunction> {
    let fs = fine.spec();
    let compatible = fs.dim() == coarse.dim()
        && (0..fs.dim()).all(|a| {
            fs.n()[a] == 2 * coarse.n()[a] && fs.lo()[a] == coarse.lo()[a] && fs.hi()[a] == coarse.hi()[a]
        });
    if !compatible {
        return Err(Error::ShapeMismatch(format!(
            "cannot restrict {:?} points onto {:?}",
            fs.n(),
            coarse.n()
        )));
    }
    let values = (0..coarse.len())
        .map(|idx| {
            let m = coarse.unravel(idx);
            let fine_m: Vec<usize> = (0..coarse.dim()).map(|a| 2 * m[a]).collect();
            fine.values()[fs.ravel(&fine_m)]
        })
        .collect();
    GridFunction::from_values(*coarse, values)
}

/// `log2(e_l / e_{l+1})` for consecutive errors.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn difference_norms(coarse: &GridFunction, fine_on_coarse: &GridFunction) -> Result<(f64, f64, f64)> {
    let aligned = phase_align(coarse, fine_on_coarse)?;
    let diff = coarse.sub(&aligned)?;
    Ok((l2_norm(&diff), diff.max_abs(), l2_norm(&laplacian(&diff))))
}

/// Runs every level (in parallel on the current rayon pool) and assembles the report.
pub fn run_study(plan: &StudyPlan) -> Result<StudyReport> {
    plan.validate()?;
    let runs: Vec<Result<(LevelResult, GridFunction)>> = plan
        .levels
        .par_iter()
        .enumerate()
        .map(|(level, &value)| {
            let (scenario, cfg) = plan.level_inputs(value)?;
            let (p, phi0) = scenario.build()?;
            log::info!("study level {level}: value {value}, n = {:?}, tau = {}", p.spec().n(), cfg.tau);
            let out = run(&p, &cfg, &phi0)?;
            if !out.summary.converged {
                return Err(Error::Study { level, value, steps: out.summary.steps });
            }
            Ok((
                LevelResult {
                    value,
                    n: p.spec().n().to_vec(),
                    tau: cfg.tau,
                    steps: out.summary.steps,
                    energy_modified: out.summary.energy_modified,
                    chemical_potential: out.summary.chemical_potential,
                },
                out.state.phi,
            ))
        })
        .collect();
    let mut levels = Vec::with_capacity(runs.len());
    let mut states = Vec::with_capacity(runs.len());
    for r in runs {
        let (l, s) = r?;
        levels.push(l);
        states.push(s);
    }

    let mut errors = Vec::with_capacity(states.len() - 1);
    for (level, pair) in states.windows(2).enumerate() {
        let fine = match plan.mode {
            StudyMode::Temporal => pair[1].clone(),
            StudyMode::Spatial => restrict_to_coarse(&pair[1], pair[0].spec())?,
        };
        let (l2, linf, laplacian_l2) = difference_norms(&pair[0], &fine)?;
        errors.push(ErrorRow { level, value: plan.levels[level], l2, linf, laplacian_l2 });
    }
    Ok(assemble(plan.mode, levels, errors))
}

fn assemble(mode: StudyMode, levels: Vec<LevelResult>, errors: Vec<ErrorRow>) -> StudyReport {
    let expected = mode.expected_order();
    let window = [expected - ORDER_WINDOW, expected + ORDER_WINDOW];
    let degenerate = errors.iter().any(|e| e.l2 <= EXACT_ERROR || e.linf <= EXACT_ERROR);
    let (orders_l2, orders_linf) = if degenerate {
        (Vec::new(), Vec::new())
    } else {
        let l2: Vec<f64> = errors.iter().map(|e| e.l2).collect();
        let linf: Vec<f64> = errors.iter().map(|e| e.linf).collect();
        (observed_orders(&l2), observed_orders(&linf))
    };
    let mean_order_l2 = mean(&orders_l2);
    let mean_order_linf = mean(&orders_linf);
    let within = |m: Option<f64>| m.is_some_and(|m| m >= window[0] && m <= window[1]);
    let passed = if degenerate {
        errors.iter().all(|e| e.l2 <= EXACT_ERROR && e.linf <= EXACT_ERROR)
    } else {
        within(mean_order_l2) && within(mean_order_linf)
    };
    StudyReport {
        mode,
        expected_order: expected,
        window,
        levels,
        errors,
        orders_l2,
        orders_linf,
        mean_order_l2,
        mean_order_linf,
        degenerate_exact: degenerate,
        passed,
    }
}

/// Plot-ready rows `level,value,l2,linf,laplacian_l2,order_l2,order_linf`.
pub fn write_study_csv(mut w: impl std::io::Write, report: &StudyReport) -> Result<()> {
    writeln!(w, "level,value,error_l2,error_linf,error_laplacian_l2,order_l2,order_linf")?;
    for (i, e) in report.errors.iter().enumerate() {
        let o2 = report.orders_l2.get(i).map(|o| format!("{o:e}")).unwrap_or_default();
        let oi = report.orders_linf.get(i).map(|o| format!("{o:e}")).unwrap_or_default();
        writeln!(w, "{},{:e},{:e},{:e},{:e},{},{}", e.level, e.value, e.l2, e.linf, e.laplacian_l2, o2, oi)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PotentialPreset;
    use crate::scenario::PerAxis;
    use crate::solver::InitialGuess;
    use num_complex::Complex64;

    fn row(level: usize, e: f64) -> ErrorRow {
        ErrorRow { level, value: 1.0, l2: e, linf: 2.0 * e, laplacian_l2: e }
    }

    #[test]
    fn order_recovery_from_synthetic_sequences() {
        for p in [1.0, 2.0] {
            let errors: Vec<f64> = (0..5).map(|l| 3.7 * 2f64.powf(-p * l as f64)).collect();
            let orders = observed_orders(&errors);
            assert_eq!(orders.len(), 4);
            assert!(orders.iter().all(|o| (o - p).abs() < 1e-12));
        }
    }

    #[test]
    fn report_windows() {
        let rows: Vec<ErrorRow> = (0..3).map(|l| row(l, 0.1 * 2f64.powi(-(l as i32)))).collect();
        let r = assemble(StudyMode::Temporal, vec![], rows.clone());
        assert!(r.passed && !r.degenerate_exact);
        assert_eq!(r.orders_l2.len(), 2);
        let r = assemble(StudyMode::Spatial, vec![], rows);
        assert!(!r.passed);
        let zeros: Vec<ErrorRow> = (0..3).map(|l| row(l, 0.0)).collect();
        let r = assemble(StudyMode::Spatial, vec![], zeros);
        assert!(r.degenerate_exact && r.passed && r.orders_l2.is_empty());
    }

    #[test]
    fn phase_alignment_invariance() {
        let spec = GridSpec::cube(1, 32, -4.0, 4.0).unwrap();
        let a = GridFunction::from_fn(spec, |x| Complex64::new((-x[0] * x[0]).exp(), 0.1 * x[0]));
        let b = a.map(|z| z * 1.01 + Complex64::new(1e-3, 0.0));
        let (e0, ..) = difference_norms(&a, &b).unwrap();
        for theta in [0.3, 1.7, -2.9] {
            let rb = b.scaled(Complex64::from_polar(1.0, theta));
            let ra = a.scaled(Complex64::from_polar(1.0, theta));
            let (e1, ..) = difference_norms(&a, &rb).unwrap();
            let (e2, ..) = difference_norms(&ra, &b).unwrap();
            assert!((e1 - e0).abs() <= 1e-12 && (e2 - e0).abs() <= 1e-12);
        }
    }

    #[test]
    fn restriction_samples_coincident_nodes() {
        let coarse = GridSpec::new(&[4, 6], &[-1.0, 0.0], &[1.0, 3.0]).unwrap();
        let fine = GridSpec::new(&[8, 12], &[-1.0, 0.0], &[1.0, 3.0]).unwrap();
        let f = GridFunction::from_fn(fine, |x| Complex64::new(x[0], x[1]));
        let r = restrict_to_coarse(&f, &coarse).unwrap();
        assert_eq!(r, GridFunction::from_fn(coarse, |x| Complex64::new(x[0], x[1])));
        assert!(restrict_to_coarse(&f, &fine).is_err());
    }

    #[test]
    fn plan_validation() {
        let plan = |mode, levels: Vec<f64>| StudyPlan {
            mode,
            scenario: Scenario::lattice_1d(64),
            solver: SolverConfig::new(0.25),
            levels,
        };
        assert!(plan(StudyMode::Temporal, vec![0.25, 0.125]).validate().is_err());
        assert!(plan(StudyMode::Temporal, vec![0.25, 0.1, 0.05]).validate().is_err());
        assert!(plan(StudyMode::Temporal, vec![0.25, 0.125, 0.0625]).validate().is_ok());
        assert!(plan(StudyMode::Spatial, vec![0.5, 0.25, 0.125]).validate().is_ok());
        assert!(plan(StudyMode::Spatial, vec![0.3, 0.15, 0.075]).validate().is_err());
        assert!(plan(StudyMode::Spatial, vec![16.0, 8.0, 4.0]).validate().is_err());
    }

    #[test]
    fn free_constant_study_is_degenerate() {
        let scenario = Scenario {
            dim: 1,
            lo: PerAxis::All(0.0),
            hi: PerAxis::All(1.0),
            n: PerAxis::All(16),
            beta: 0.0,
            potential: PotentialPreset::Constant { value: 0.0 },
            initial: InitialGuess::Constant,
        };
        for (mode, levels) in [
            (StudyMode::Temporal, vec![0.1, 0.05, 0.025]),
            (StudyMode::Spatial, vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]),
        ] {
            let plan = StudyPlan { mode, scenario: scenario.clone(), solver: SolverConfig::new(0.1), levels };
            let r = run_study(&plan).unwrap();
            assert!(r.degenerate_exact && r.passed);
            assert!(r.errors.iter().all(|e| e.l2 == 0.0 && e.linf == 0.0));
        }
    }

    #[test]
    fn unconverged_level_is_reported() {
        let mut solver = SolverConfig::new(0.25);
        solver.max_steps = 2;
        let plan = StudyPlan {
            mode: StudyMode::Temporal,
            scenario: Scenario::lattice_1d(64),
            solver,
            levels: vec![0.25, 0.125, 0.0625],
        };
        assert!(matches!(run_study(&plan), Err(Error::Study { steps: 2, .. })));
    }
}
