//! Ground states of the Gross-Pitaevskii energy on periodic boxes by an
//! explicit, stabilized, exponential-time-differencing normalized gradient
//! flow, plus runtime verification of the scheme's discrete identities.
//!
//! The pieces, bottom up:
//!
//! * [`grid`]: periodic grids, complex grid functions, finite differences, inner products and norms.
//! * [`spectral`]: DFT diagonalization of the discrete Laplacian and the ETD multipliers.
//! * [`model`]: the problem (`V`, `beta`) and its energies, multiplier and residual.
//! * [`solver`]: the two-stage step and the driver loop.
//! * [`verify`]: oracle, refinement studies and the invariant suite.
//! * [`io`]: the binary grid-function container and CSV exports.

pub mod error;
pub mod grid;
pub mod io;
pub mod model;
pub mod scenario;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{GridFunction, GridSpec};
pub use model::{GpeProblem, PotentialPreset};
pub use scenario::Scenario;
pub use solver::{run, step, InitialGuess, SolverConfig, Stabilizer};
pub use spectral::EtdMultipliers;
