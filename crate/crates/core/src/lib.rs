//! Numerical critical-point toolkit for a quadratically coupled nonlinear
//! Schrödinger system on a truncated Dirichlet grid.
//!
//! The crate computes ground states of the two scalar equations by
//! constrained preconditioned descent, continues solutions of the coupled
//! system in the coupling strength by damped matrix-free Newton iteration,
//! and estimates the associated minimax levels (reference-surface max and a
//! deformation upper bound) together with their decoupled limit.

pub mod cli;
pub mod config;
pub mod coupled;
pub mod error;
pub mod functional;
pub mod grid;
pub mod ground;
pub mod krylov;
pub mod potential;
pub mod spectral;
pub mod sweep;

pub use error::{Error, Result};
pub use functional::{Component, ModelParams, Problem, StatePair};
pub use grid::{Field, Grid};
pub use potential::Potential;
