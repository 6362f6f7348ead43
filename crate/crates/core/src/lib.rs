//! Energy-aware placement of user requests on a vehicular fog or the central
//! cloud, subject to software availability and capacity limits.
//!
//! - [`scenario`]: domain types and seeded instance generation
//! - [`power`]: device power models and network paths
//! - [`problem`]: constraints, objective and metrics
//! - [`solvers`]: brute force, branch-and-bound and greedy solvers
//! - [`experiments`]: packages-per-vehicle sweeps and CSV output
//! - [`cli`]: the `vfog` command line

pub mod cli;
pub mod experiments;
pub mod power;
pub mod problem;
pub mod scenario;
pub mod solvers;

#[cfg(test)]
mod testutil;

pub use power::Target;
pub use problem::{Assignment, Metrics};
pub use scenario::{build_instance, Instance, ScenarioConfig};
pub use solvers::{Solution, SolveError, SolverKind};
