//! Semi-decentralised equilibrium seeking for aggregative games.
//!
//! Agents run projected-gradient flows against a broadcast signal `σ`; a
//! central unit integrates the gap between the realised average decision and
//! `σ`. The crate simulates these dynamics ([`flow`]), computes reference
//! equilibria independently by fixed-point iteration ([`equilibrium`]),
//! verifies them through the variational inequality, and evaluates the
//! Lyapunov certificate that is supposed to guarantee exponential convergence
//! ([`lyapunov`]).

pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod experiment;
pub mod flow;
pub mod geometry;
pub mod linalg;
pub mod lyapunov;
pub mod model;
pub mod parallel;
pub mod rng;

pub use equilibrium::{solve_equilibrium, EquilibriumResult, SolverConfig};
pub use error::{Error, Result};
pub use flow::{integrate, IntegratorConfig, Trajectory};
pub use geometry::ConvexSet;
pub use lyapunov::{compare_conditions, CertificateReport, DecayReport};
pub use model::{load_scenario, GameSpec, QuadraticCost, SystemState};
