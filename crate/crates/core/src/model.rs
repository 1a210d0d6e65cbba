//! The Gross-Pitaevskii problem on a grid and its scalar functionals.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{grad_norm_sq, l2_norm, laplacian, GridFunction, GridSpec};
use crate::spectral::EtdMultipliers;

/// Sampled trapping potential `V`, interaction strength `beta >= 0`.
#[derive(Debug, Clone)]
pub struct GpeProblem {
    v: GridFunction,
    beta: f64,
    v_inf: f64,
}

impl GpeProblem {
    pub fn new(v: GridFunction, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::Config(format!("beta must be finite and >= 0 (got {beta})")));
        }
        let scale = v.max_abs().max(1.0);
        if let Some(z) = v.values().iter().find(|z| !z.re.is_finite() || z.im.abs() > 1e-15 * scale) {
            return Err(Error::Config(format!("potential must be finite and real-valued (found {z})")));
        }
        // drop round-off imaginary parts so every later product stays real
        let v = v.map(|z| Complex64::new(z.re, 0.0));
        let v_inf = v.values().iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        Ok(GpeProblem { v, beta, v_inf })
    }

    pub fn from_preset(spec: GridSpec, preset: &PotentialPreset, beta: f64) -> Result<Self> {
        Self::new(preset.sample(spec)?, beta)
    }

    pub fn spec(&self) -> &GridSpec {
        self.v.spec()
    }

    pub fn potential(&self) -> &GridFunction {
        &self.v
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Max of `|V|` over the sampled grid values.
    pub fn v_inf(&self) -> f64 {
        self.v_inf
    }

    fn check(&self, phi: &GridFunction) -> Result<()> {
        self.v.same_shape(phi)
    }

    /// `(<V phi, phi>, <|phi|^4, 1>)`.
    pub(crate) fn local_terms(&self, phi: &GridFunction) -> (f64, f64) {
        let (mut pot, mut quartic) = (0.0, 0.0);
        for (v, z) in self.v.values().iter().zip(phi.values()) {
            let rho = z.norm_sqr();
            pot += v.re * rho;
            quartic += rho * rho;
        }
        let w = self.spec().cell_volume();
        (pot * w, quartic * w)
    }
}

/// Named potentials addressable from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialPreset {
    /// `V = value` everywhere.
    Constant { value: f64 },
    /// `V = omega^2 |x|^2 / 2`.
    Harmonic {
        #[serde(default = "one")]
        omega: f64,
    },
    /// `V = x^2/2 + depth * sin^2(pi x / period)`, one dimension only.
    HarmonicLattice1d {
        #[serde(default = "lattice_depth")]
        depth: f64,
        #[serde(default = "lattice_period")]
        period: f64,
    },
    /// Samples read from a grid-function file on the same grid.
    CustomFile { path: std::path::PathBuf },
}

fn one() -> f64 {
    1.0
}

fn lattice_depth() -> f64 {
    25.0
}

fn lattice_period() -> f64 {
    4.0
}

impl PotentialPreset {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            PotentialPreset::Constant { value } if !value.is_finite() => {
                Err(Error::Config(format!("potential.value must be finite (got {value})")))
            }
            PotentialPreset::Harmonic { omega } if !omega.is_finite() => {
                Err(Error::Config(format!("potential.omega must be finite (got {omega})")))
            }
            PotentialPreset::HarmonicLattice1d { .. } if dim != 1 => Err(Error::Config(format!(
                "potential.kind = harmonic_lattice_1d requires dim = 1 (got {dim})"
            ))),
            PotentialPreset::HarmonicLattice1d { depth, period }
                if !depth.is_finite() || !(period.is_finite() && *period > 0.0) =>
            {
                Err(Error::Config(format!(
                    "potential.depth must be finite and potential.period > 0 (got {depth}, {period})"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn sample(&self, spec: GridSpec) -> Result<GridFunction> {
        self.validate(spec.dim())?;
        Ok(match *self {
            PotentialPreset::Constant { value } => GridFunction::from_real_fn(spec, |_| value),
            PotentialPreset::Harmonic { omega } => GridFunction::from_real_fn(spec, |x| {
                0.5 * omega * omega * x.iter().map(|xi| xi * xi).sum::<f64>()
            }),
            PotentialPreset::HarmonicLattice1d { depth, period } => GridFunction::from_real_fn(spec, |x| {
                let s = (std::f64::consts::PI * x[0] / period).sin();
                0.5 * x[0] * x[0] + depth * s * s
            }),
            PotentialPreset::CustomFile { ref path } => {
                let v = crate::io::read_grid_function(path)?;
                if v.spec() != &spec {
                    return Err(Error::ShapeMismatch(format!(
                        "potential file {} is on grid {:?} [{:?}, {:?}], problem grid is {:?} [{:?}, {:?}]",
                        path.display(),
                        v.spec().n(),
                        v.spec().lo(),
                        v.spec().hi(),
                        spec.n(),
                        spec.lo(),
                        spec.hi()
                    )));
                }
                v
            }
        })
    }
}

/// Modified energy with the ETD-filtered gradient term,
/// `E_h = 1/2 ||G^{1/2} grad phi||^2 + <V phi, phi> + beta/2 ||phi||_4^4`.
pub fn energy_modified(p: &GpeProblem, mult: &EtdMultipliers, phi: &GridFunction) -> Result<f64> {
    p.check(phi)?;
    let grad = mult.gsqrt_grad_sq(phi)?;
    let (pot, quartic) = p.local_terms(phi);
    Ok(0.5 * grad + pot + 0.5 * p.beta * quartic)
}

/// Unfiltered discrete energy `1/2 ||grad phi||^2 + <V phi, phi> + beta/2 ||phi||_4^4`.
pub fn energy_standard(p: &GpeProblem, phi: &GridFunction) -> Result<f64> {
    p.check(phi)?;
    let (pot, quartic) = p.local_terms(phi);
    Ok(0.5 * grad_norm_sq(phi) + pot + 0.5 * p.beta * quartic)
}

/// Lagrange multiplier `1/2 ||G^{1/2} grad phi||^2 + <V phi + beta |phi|^2 phi, phi>`.
///
/// No division by `||phi||^2`: the input is expected to have unit mass.
pub fn lambda_n(p: &GpeProblem, mult: &EtdMultipliers, phi: &GridFunction) -> Result<f64> {
    p.check(phi)?;
    let grad = mult.gsqrt_grad_sq(phi)?;
    let (pot, quartic) = p.local_terms(phi);
    Ok(0.5 * grad + pot + p.beta * quartic)
}

/// `||-1/2 Delta_h phi + V phi + beta |phi|^2 phi - mu phi||_2`.
pub fn gpe_residual(p: &GpeProblem, phi: &GridFunction, mu: f64) -> Result<f64> {
    p.check(phi)?;
    let lap = laplacian(phi);
    let r = GridFunction::from_values(
        *phi.spec(),
        lap.values()
            .iter()
            .zip(phi.values())
            .zip(p.v.values())
            .map(|((l, z), v)| -0.5 * l + (v.re + p.beta * z.norm_sqr() - mu) * z)
            .collect(),
    )?;
    Ok(l2_norm(&r))
}

/// Practical stabilizer `3 beta/2 ||phi||_inf^2 + ||V||_inf / 2 + 1`.
pub fn stabilizer_auto(p: &GpeProblem, phi: &GridFunction) -> f64 {
    let m = phi.max_abs();
    1.5 * p.beta * m * m + 0.5 * p.v_inf + 1.0
}

/// Sufficient lower bound on `A` for energy decay:
/// `beta (||phi_tilde||_inf^2 / 2 + ||phi||_inf^2) + ||V||_inf / 2`.
pub fn stabilizer_lower_bound(p: &GpeProblem, phi_inf: f64, phi_tilde_inf: f64) -> f64 {
    p.beta * (0.5 * phi_tilde_inf * phi_tilde_inf + phi_inf * phi_inf) + 0.5 * p.v_inf
}
