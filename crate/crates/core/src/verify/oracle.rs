//! Dense eigensolver for the linear (`beta = 0`) one-dimensional problem.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::model::{gpe_residual, GpeProblem};

pub const MAX_ORACLE_POINTS: usize = 1024;

#[derive(Debug, Clone)]
pub struct OracleSolution {
    /// Smallest eigenvalue of `-1/2 Delta_h + diag(V)`.
    pub mu0: f64,
    /// Matching eigenvector, unit discrete l2 norm, positive mean.
    pub psi0: GridFunction,
    /// `||H psi0 - mu0 psi0||_2`.
    pub residual: f64,
}

/// Lowest eigenpair of the periodic matrix `-1/2 Delta_h + diag(V)`.
pub fn dense_oracle(p: &GpeProblem) -> Result<OracleSolution> {
    let spec = *p.spec();
    if spec.dim() != 1 {
        return Err(Error::Config(format!("dense oracle needs dim = 1 (got {})", spec.dim())));
    }
    if p.beta() != 0.0 {
        return Err(Error::Config(format!("dense oracle needs beta = 0 (got {})", p.beta())));
    }
    let n = spec.len();
    if n > MAX_ORACLE_POINTS {
        return Err(Error::Size(format!("dense oracle limited to {MAX_ORACLE_POINTS} points (got {n})")));
    }
    let h = spec.h()[0];
    let off = -0.5 / (h * h);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (i, v) in p.potential().values().iter().enumerate() {
        m[(i, i)] = 1.0 / (h * h) + v.re;
        m[(i, (i + 1) % n)] += off;
        m[(i, (i + n - 1) % n)] += off;
    }
    let eig = SymmetricEigen::new(m);
    let (k, &mu0) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("n >= 4");
    let col = eig.eigenvectors.column(k);
    let sign = if col.sum() < 0.0 { -1.0 } else { 1.0 };
    let scale = sign / h.sqrt();
    let psi0 =
        GridFunction::from_values(spec, col.iter().map(|&x| Complex64::new(x * scale, 0.0)).collect())?;
    let residual = gpe_residual(p, &psi0, mu0)?;
    Ok(OracleSolution { mu0, psi0, residual })
}
