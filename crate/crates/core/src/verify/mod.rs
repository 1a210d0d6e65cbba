//! Independent checks on the solver: operator identities on random inputs,
//! the dense linear eigensolver, refinement studies and the per-step suite.

pub mod identities;
pub mod oracle;
pub mod study;
pub mod suite;

pub use oracle::{dense_oracle, OracleSolution};
pub use study::{run_study, StudyMode, StudyPlan, StudyReport};
pub use suite::{invariant_suite, SuiteOptions, SuiteReport};
