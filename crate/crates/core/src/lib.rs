//! Exact and Monte Carlo probability analysis for a small concurrent
//! probabilistic language with mutable state, fork-based concurrency and
//! presampling tapes.
//!
//! The crate is organized around a pipeline:
//!
//! * [`syntax`] parses `.cpl` sources into a core expression tree,
//! * [`semantics`] gives the per-step and per-schedule distribution
//!   semantics over exact rationals,
//! * [`exact`] computes full value distributions, worst-case violation
//!   probabilities over all schedulers and minimum execution mass,
//! * [`mc`] estimates the same quantities by seeded simulation with
//!   Clopper-Pearson intervals,
//! * [`analytics`] evaluates the Bloom-filter false-positive recurrence
//!   together with its brute-force enumeration oracle,
//! * [`fixtures`] ships the example programs with their expected bounds.
//!
//! All probabilities on the exact paths are arbitrary-precision rationals;
//! floating point only ever appears in Monte Carlo reporting and display
//! helpers.

pub mod analytics;
pub mod dist;
pub mod exact;
pub mod fixtures;
pub mod mc;
pub mod predicate;
pub mod report;
pub mod semantics;
pub mod syntax;

pub use dist::{Dist, Prob};
pub use syntax::{Expr, Value};
