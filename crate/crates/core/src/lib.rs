//! Phase-relaxation and enthalpy solvers for the one-dimensional Stefan
//! problem, with an epsilon-sweep harness comparing the two.
//!
//! The relaxed problem couples the energy balance
//! `(theta + chi)' + A theta = f` with the kinetic law
//! `eps chi' = psi(theta + u, chi)`; as `eps -> 0` its solutions approach the
//! weak Stefan solution with `chi ∈ alpha(theta + u)`.

pub mod analysis;
pub mod config;
pub mod error;
pub mod graphs;
pub mod linalg;
pub mod mesh;
pub mod output;
pub mod problem;
pub mod relaxed;
pub mod run;
pub mod scenarios;
pub mod stefan;

pub use error::{Error, Result};
pub use graphs::{MonotoneGraph, PsiPreset, RelaxationFunction};
pub use mesh::{assemble, build_mesh, BoundaryCondition, DiscreteOperators, DomainMesh};
pub use problem::{ProblemData, TimeField, Trajectory};
pub use relaxed::{solve_relaxed, RelaxedConfig};
pub use scenarios::{build_scenario, Scenario, ScenarioName};
pub use stefan::{solve_stefan, StefanConfig};
