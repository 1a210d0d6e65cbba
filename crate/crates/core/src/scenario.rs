//! Serializable problem descriptions: box, resolution, potential, interaction
//! strength and initial data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::model::{GpeProblem, PotentialPreset};
use crate::solver::InitialGuess;

/// A value given once for every axis or once per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAxis<T> {
    All(T),
    Each(Vec<T>),
}

impl<T: Copy> PerAxis<T> {
    fn expand(&self, dim: usize, key: &str) -> Result<Vec<T>> {
        match self {
            PerAxis::All(v) => Ok(vec![*v; dim]),
            PerAxis::Each(v) if v.len() == dim => Ok(v.clone()),
            PerAxis::Each(v) => {
                Err(Error::Config(format!("problem.{key} has {} entries but dim = {dim}", v.len())))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub dim: usize,
    pub lo: PerAxis<f64>,
    pub hi: PerAxis<f64>,
    pub n: PerAxis<usize>,
    pub beta: f64,
    pub potential: PotentialPreset,
    #[serde(default = "default_initial")]
    pub initial: InitialGuess,
}

fn default_initial() -> InitialGuess {
    InitialGuess::Gaussian
}

impl Scenario {
    /// 1D lattice-plus-harmonic trap on `[-16, 16]`, `beta = 250`, Gaussian start.
    pub fn lattice_1d(n: usize) -> Self {
        Scenario {
            dim: 1,
            lo: PerAxis::All(-16.0),
            hi: PerAxis::All(16.0),
            n: PerAxis::All(n),
            beta: 250.0,
            potential: PotentialPreset::HarmonicLattice1d { depth: 25.0, period: 4.0 },
            initial: InitialGuess::Gaussian,
        }
    }

    /// 2D harmonic trap on `[-8, 8]^2`, `beta = 300`, start `exp(-V)`.
    pub fn harmonic_2d(n: usize) -> Self {
        Scenario {
            dim: 2,
            lo: PerAxis::All(-8.0),
            hi: PerAxis::All(8.0),
            n: PerAxis::All(n),
            beta: 300.0,
            potential: PotentialPreset::Harmonic { omega: 1.0 },
            initial: InitialGuess::ExpMinusV,
        }
    }

    pub fn spec(&self) -> Result<GridSpec> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::Config(format!("problem.dim must be 1, 2 or 3 (got {})", self.dim)));
        }
        let lo = self.lo.expand(self.dim, "lo")?;
        let hi = self.hi.expand(self.dim, "hi")?;
        let n = self.n.expand(self.dim, "n")?;
        GridSpec::new(&n, &lo, &hi).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("problem: {m}")),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.spec()?;
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::Config(format!("problem.beta must be finite and >= 0 (got {})", self.beta)));
        }
        self.potential.validate(self.dim)
    }

    pub fn problem(&self) -> Result<GpeProblem> {
        self.validate()?;
        GpeProblem::from_preset(self.spec()?, &self.potential, self.beta)
    }

    /// Problem plus normalized initial data.
    pub fn build(&self) -> Result<(GpeProblem, GridFunction)> {
        let p = self.problem()?;
        let phi0 = self.initial.build(&p)?;
        Ok((p, phi0))
    }

    /// Same box with `n` points per axis.
    pub fn with_points(&self, n: usize) -> Self {
        Scenario { n: PerAxis::All(n), ..self.clone() }
    }
}
