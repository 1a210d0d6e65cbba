use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use gpe_core::io::{write_grid_function, write_grid_function_csv, write_history_csv};
use gpe_core::solver::RunSummary;
use gpe_core::verify::study::write_study_csv;
use gpe_core::verify::{invariant_suite, run_study, SuiteOptions};
use gpe_core::{run, Error, Result, Scenario, SolverConfig};
use serde::Serialize;

use crate::config::RunConfig;
use crate::plots;

/// How a successful invocation ended; errors are reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotConverged,
    VerificationFailed,
}

#[derive(Serialize)]
struct SolveReport<'a> {
    problem: &'a Scenario,
    solver: &'a SolverConfig,
    summary: &'a RunSummary,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Ok(BufWriter::new(file))
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::write(dir.join(name), text)?;
    Ok(())
}

pub fn solve(cfg: &RunConfig, out: &Path) -> Result<Status> {
    fs::create_dir_all(out)?;
    let (p, phi0) = cfg.problem.build()?;
    let result = run(&p, &cfg.solver, &phi0)?;
    let s = &result.summary;
    let o = &cfg.output;

    if o.history_csv {
        let mut w = create(out, "history.csv")?;
        write_history_csv(&mut w, &result.history)?;
        w.flush()?;
        if o.plots {
            write_text(out, "energy.gp", &plots::energy_script())?;
        }
    }
    if o.summary_json {
        write_json(
            out,
            "summary.json",
            &SolveReport { problem: &cfg.problem, solver: &cfg.solver, summary: s },
        )?;
    }
    if o.state_binary {
        write_grid_function(out.join("state.gpgf"), &result.state.phi)?;
    }
    if o.state_csv {
        let mut w = create(out, "state.csv")?;
        write_grid_function_csv(&mut w, &result.state.phi)?;
        w.flush()?;
        if o.plots {
            write_text(out, "state.gp", &plots::state_script(p.spec().dim()))?;
        }
    }

    println!(
        "{:?} after {} steps: E_h = {:.12}, E = {:.12}, mu = {:.12}, residual = {:.3e}, energy increases = {}",
        s.stop_reason,
        s.steps,
        s.energy_modified,
        s.energy_standard,
        s.chemical_potential,
        s.residual,
        s.stats.energy_increases
    );
    Ok(if s.converged { Status::Ok } else { Status::NotConverged })
}

pub fn study(cfg: &RunConfig, out: &Path) -> Result<Status> {
    let plan = cfg
        .study_plan()
        .ok_or_else(|| Error::Config("study needs a [study] section with mode and levels".into()))?;
    fs::create_dir_all(out)?;
    let report = run_study(&plan)?;

    write_json(out, "study.json", &report)?;
    let mut w = create(out, "study.csv")?;
    write_study_csv(&mut w, &report)?;
    w.flush()?;
    if cfg.output.plots {
        write_text(out, "study.gp", &plots::study_script(report.expected_order))?;
    }

    println!(
        "{:>5} {:>12} {:>12} {:>12} {:>8} {:>8}",
        "level", "value", "err_l2", "err_linf", "ord_l2", "ord_inf"
    );
    for (i, e) in report.errors.iter().enumerate() {
        let fmt = |o: Option<&f64>| o.map_or_else(|| "-".to_string(), |o| format!("{o:.3}"));
        println!(
            "{:>5} {:>12.4e} {:>12.4e} {:>12.4e} {:>8} {:>8}",
            e.level,
            e.value,
            e.l2,
            e.linf,
            fmt(report.orders_l2.get(i)),
            fmt(report.orders_linf.get(i))
        );
    }
    let mean = |m: Option<f64>| m.map_or_else(|| "-".to_string(), |m| format!("{m:.3}"));
    println!(
        "mean order l2 = {}, linf = {}, window [{}, {}]{}: {}",
        mean(report.mean_order_l2),
        mean(report.mean_order_linf),
        report.window[0],
        report.window[1],
        if report.degenerate_exact { " (levels agree to rounding)" } else { "" },
        if report.passed { "PASS" } else { "FAIL" }
    );
    Ok(if report.passed { Status::Ok } else { Status::VerificationFailed })
}

pub fn verify(cfg: &RunConfig, out: &Path, seed: u64) -> Result<Status> {
    fs::create_dir_all(out)?;
    let (p, phi0) = cfg.problem.build()?;
    let opts = SuiteOptions { seed, random_functions: cfg.verify.random_functions };
    let report = invariant_suite(&p, &cfg.solver, &phi0, cfg.verify.steps, opts)?;
    write_json(out, "verify.json", &report)?;

    println!("{:<26} {:>12} {:>10}  result", "check", "worst", "threshold");
    for c in &report.checks {
        let status = match (c.passed, c.gating) {
            (true, _) => "pass",
            (false, true) => "FAIL",
            (false, false) => "note",
        };
        println!("{:<26} {:>12.3e} {:>10.1e}  {status}", c.name, c.worst, c.threshold);
    }
    println!(
        "{} steps; {}",
        report.steps_run,
        if report.passed { "all checks passed" } else { "verification FAILED" }
    );
    Ok(if report.passed { Status::Ok } else { Status::VerificationFailed })
}
