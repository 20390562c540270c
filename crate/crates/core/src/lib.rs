//! Numerical laboratory for the degenerate parabolic dead-core equation
//!
//! ```text
//! Δ_p u − ∂u/∂t = λ₀(x,t)·u₊^q,   p ≥ 2,  0 ≤ q < 1
//! ```
//!
//! The crate is organised in layers:
//!
//! - [`params`]: problem parameters, intrinsic exponents and closed-form constants.
//! - [`exact`]: explicit dead-core profiles, barriers and a finite-difference residual checker.
//! - [`solver`]: a monotone explicit scheme on intervals and radial balls.
//! - [`field`]: stored space-time grid functions and their interpolation.
//! - [`geometry`]: positivity sets, intrinsic cylinders and measure-theoretic probes.
//! - [`analysis`]: growth, non-degeneracy, blow-up and Liouville diagnostics.
//! - [`config`], [`experiment`], [`suite`]: configuration-driven experiments and the
//!   bundled verification suite.

pub mod analysis;
pub mod config;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod field;
pub mod fit;
pub mod geometry;
pub mod params;
pub mod report;
pub mod solver;
pub mod suite;

pub use error::{Error, Result};
pub use field::SpaceTimeField;
pub use params::{Exponents, Modulus, ProblemParams};
