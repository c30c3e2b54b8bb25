//! Constrained pairwise covering-array generation.
//!
//! The pipeline warm-starts from an existing suite, satisfies must-include
//! constraints with partitioned fixings, fills the remaining pairs one
//! optimal test case at a time with a small binary program per step, and
//! finally drops redundant rows with a set-cover model.

pub mod bench;
pub mod cli;
pub mod domain;
pub mod gcp;
pub mod interactions;
pub mod io;
pub mod milp;
pub mod monolithic;
pub mod pipeline;
pub mod sequential;

pub use domain::{subsumes, validate_case, ConstraintSet, DomainError, Factor, FactorSystem, PartialAssignment, Pick, TestCase, TestSuite};
