//! Quiver settings and the singularities of their quotient varieties.
//!
//! * [`quiver`]: quivers, dimension vectors, the Euler form, setting documents.
//! * [`classify`]: simple roots, representation types, local quivers, strata.
//! * [`reduction`]: reduction moves, coregularity, isolated-singularity
//!   classification and étale invariants.
//! * [`necklace`]: paths, necklaces, superpotentials and their cyclic
//!   derivatives.
//! * [`numeric`]: complex representations used as a numerical oracle: trace
//!   invariants, relation residuals, quotient dimension, moment map and
//!   stability.

pub mod classify;
pub mod error;
pub mod necklace;
pub mod numeric;
pub mod quiver;
pub mod reduction;

pub use error::{Error, Result};
pub use quiver::{CyclicData, DimensionVector, Quiver, QuiverSetting};
