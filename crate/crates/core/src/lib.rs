//! Deep-water periodic wave branches over piecewise smooth vorticity.
//!
//! The crate computes laminar background flows, locates bifurcation points of
//! the linearized height-function problem through a Sturm–Liouville pencil,
//! and continues branches of nontrivial waves by bordered pseudo-arclength
//! Newton iteration, with runtime diagnostics (nodal pattern, decay rate,
//! admissible-set margins) and reconstruction of physical fields.

pub mod cli;
pub mod config;
pub mod continuation;
pub mod diagnostics;
pub mod dispersion;
pub mod error;
pub mod laminar;
pub mod numerics;
pub mod operator;
pub mod output;
pub mod physical;
pub mod presets;
pub mod quadrature;
pub mod vorticity;

pub use error::{Error, MarginInequality, Result};

/// Binary entry point; returns the process exit code.
pub fn run() -> i32 {
    cli::run_from_env()
}
