//! Skew pants, twisted ruled bands and surface gluing in rank-one
//! hyperbolic geometry.
//!
//! The crate builds the geometric objects behind pants-based surface
//! constructions in real hyperbolic space H^n (n <= 4) and the complex
//! hyperbolic plane, measures the quantitative estimates that make glued
//! surfaces incompressible, solves the combinatorial gluing equations in
//! exact rational arithmetic, and runs Moser-style measure transport on
//! sphere bundles over closed geodesics.
//!
//! Every runnable capability has a worked example under `examples/`; the
//! `skewpants` binary drives batch experiments from JSON configs.

pub mod band;
pub mod chain;
pub mod error;
pub mod fitting;
pub mod h2;
pub mod hexagon;
pub mod isometry;
pub mod tripod;
pub mod rng;
pub mod space;
pub mod tol;

pub use error::{Error, Result};

/// Temporary stub so the workspace builds during development.
pub fn cli_main() -> i32 {
    0
}
