//! Proximity-gradient-subgradient algorithms for single-ratio fractional
//! programs
//!
//! ```text
//! minimize  F(x) = (f(x) + h(x)) / g(x)
//! ```
//!
//! with `f` proper lsc and prox-friendly, `h` smooth with `L`-Lipschitz
//! gradient, and `g` convex and positive on the domain of `f`.
//!
//! The solvers ([`run_pgsa`], [`run_pgsa_ls`]) work on any type implementing
//! [`FractionalProblem`]. Two instances ship with the crate: sparse
//! generalized eigenvalue problems ([`sgep`]) and `l1/l2` sparse recovery
//! with a box constraint ([`l1l2`]). The [`oracle`] module re-checks solver
//! output independently.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod io;
pub mod l1l2;
pub mod linalg;
pub mod linesearch;
pub mod oracle;
pub mod pgsa;
pub mod problem;
pub mod rng;
pub mod sgep;
pub mod trace;

pub use error::{Error, Result};
pub use linesearch::{run_pgsa_ls, LineSearchConfig};
pub use pgsa::{run_pgsa, PgsaConfig, StopRule};
pub use problem::{eval_objective, Certificate, ExtendedObjective, FractionalProblem, StopReason};
pub use trace::{Method, SolverTrace};
