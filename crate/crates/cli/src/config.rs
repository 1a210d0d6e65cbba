//! TOML run configuration shared by the three subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use gpe_core::verify::{StudyMode, StudyPlan};
use gpe_core::{Error, InitialGuess, PotentialPreset, Result, Scenario, SolverConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Scenario,
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub study: Option<StudyConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
}

/// Which artifacts to write; `dir` is overridden by `--out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub history_csv: bool,
    pub summary_json: bool,
    pub state_binary: bool,
    pub state_csv: bool,
    /// gnuplot scripts next to the CSV files.
    pub plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            history_csv: true,
            summary_json: true,
            state_binary: true,
            state_csv: true,
            plots: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub mode: StudyMode,
    /// Time steps (temporal) or mesh sizes (spatial), each half the previous.
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub steps: usize,
    pub random_functions: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { steps: 200, random_functions: 20 }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads, parses and validates `path`; relative data-file paths are
    /// resolved against the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let PotentialPreset::CustomFile { path } = &mut self.problem.potential {
            fix(path);
        }
        if let InitialGuess::File { path } = &mut self.problem.initial {
            fix(path);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        self.solver.validate()?;
        if self.verify.steps == 0 {
            return Err(Error::Config("verify.steps must be >= 1".into()));
        }
        if let Some(plan) = self.study_plan() {
            plan.validate()?;
        }
        Ok(())
    }

    pub fn study_plan(&self) -> Option<StudyPlan> {
        self.study.as_ref().map(|s| StudyPlan {
            mode: s.mode,
            scenario: self.problem.clone(),
            solver: self.solver.clone(),
            levels: s.levels.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gpe_core::Stabilizer;

    const MINIMAL: &str = r#"
[problem]
dim = 1
lo = -16
hi = 16
n = 64
beta = 250
potential = { kind = "harmonic_lattice1d" }

[solver]
tau = 0.25
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        c.validate().unwrap();
        assert_eq!(c.solver.stabilizer, Stabilizer::Auto);
        assert_eq!(c.solver.tol, 1e-8);
        assert_eq!(c.problem.initial, InitialGuess::Gaussian);
        assert_eq!(c.output, OutputConfig::default());
        assert_eq!(c.verify.steps, 200);
        assert!(c.study.is_none());
        assert_eq!(c.problem.potential, PotentialPreset::HarmonicLattice1d { depth: 25.0, period: 4.0 });
    }

    #[test]
    fn fixed_stabilizer_and_study_block() {
        let text = format!(
            "{MINIMAL}stabilizer = {{ fixed = 0.0 }}\n\n[study]\nmode = \"temporal\"\nlevels = [0.25, 0.125, 0.0625]\n"
        );
        let c = RunConfig::parse(&text).unwrap();
        assert_eq!(c.solver.stabilizer, Stabilizer::Fixed(0.0));
        let plan = c.study_plan().unwrap();
        assert_eq!(plan.mode, StudyMode::Temporal);
        plan.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::parse(&MINIMAL.replace("tau = 0.25", "tau = 0.25\ntua = 1")).unwrap_err();
        assert!(err.to_string().contains("tua"), "{err}");
        let err = RunConfig::parse(&format!("{MINIMAL}\n[outputs]\ndir = \"x\"\n")).unwrap_err();
        assert!(err.to_string().contains("outputs"), "{err}");
    }

    #[test]
    fn constraint_violations_name_the_key() {
        let c = RunConfig::parse(&MINIMAL.replace("tau = 0.25", "tau = -1")).unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("tau"));
        let c = RunConfig::parse(&MINIMAL.replace("beta = 250", "beta = -2")).unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("beta"));
        let c = RunConfig::parse(&MINIMAL.replace("n = 64", "n = 2")).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn relative_data_paths_follow_the_config() {
        let text = MINIMAL.replace(
            "potential = { kind = \"harmonic_lattice1d\" }",
            "potential = { kind = \"custom_file\", path = \"v.gpgf\" }",
        );
        let mut c = RunConfig::parse(&text).unwrap();
        c.resolve_paths(Path::new("/data/runs"));
        assert_eq!(
            c.problem.potential,
            PotentialPreset::CustomFile { path: PathBuf::from("/data/runs/v.gpgf") }
        );
    }
}
