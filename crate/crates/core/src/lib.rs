//! Numerics for piecewise uniformly expanding maps: combinatorial
//! complexities and expansion rates, essential-spectral-radius bounds,
//! Ulam discretization of transfer operators, invariant densities,
//! ergodic decompositions, basins, and correlation decay.
//!
//! The crate is organized around the pipeline
//! `geometry -> map -> complexity -> bounds` on one side and
//! `grid -> transfer -> measures` on the other, with `norms` providing
//! BV / Sobolev / oscillation surrogates on grid functions.

pub mod error;
pub mod bounds;
pub mod complexity;
pub mod expr;
pub mod geometry;
pub mod grid;
pub mod map;
pub mod presets;
pub mod transfer;

pub use error::{Error, Result};
