//! Dirichlet problems for k-Hessian equations `S_k[u] = f` on bounded
//! domains, with `f ≥ 0` allowed to vanish. The degenerate case is handled
//! by solving the regularized problems `S_k[u^ϑ] = f + ϑ` and driving
//! `ϑ → 0` along a continuation path.
//!
//! The crate bundles:
//! - finite-difference Hessians and the linearized operator ([`hessop`]),
//! - an auditor for the structural hypothesis on `f` ([`condh`]),
//! - domain geometry and (k−1)-convexity checks ([`geometry`]),
//! - the damped Newton solver and path driver ([`solver`]),
//! - scripted numerical experiments ([`lab`]),
//! - the CLI and its config/file formats ([`cli`], [`config`]).

pub mod cli;
pub mod condh;
pub mod config;
pub mod expr;
pub mod geometry;
pub mod grid;
pub mod hessop;
pub mod lab;
pub mod rng;
pub mod solver;
pub mod sparse;
