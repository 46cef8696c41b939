//! Finite-difference laboratory for the nonlocal parabolic Kirchhoff equation
//!
//! ```text
//! u_t - (a + b‖∇u‖₂²) Δu = |u|^{q-1} u   in Ω × (0, T),   u = 0 on ∂Ω,
//! ```
//!
//! and its stationary problem. The crate provides discrete versions of the
//! energy `J`, the Nehari functional `I`, the Nehari projection, the well depth
//! `d` and its lower bound `d₀`, ground states, a semi-implicit time integrator
//! with blow-up detection, and checks of the explicit exponential decay rates,
//! level-set bounds and ω-limit behaviour.
//!
//! Grids are uniform on an interval or a rectangle; see [`discretization`].

// negated comparisons deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discretization;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod functionals;
pub mod sampling;
pub mod stationary;
pub mod well;

pub use discretization::{Field, Mesh};
pub use error::{KirchhoffError, Result};
pub use evolution::{DecayRates, Outcome, Scheme, TimeStepConfig, Trajectory};
pub use functionals::{FiberResult, ModelParams};
pub use stationary::{GroundStateReport, OmegaLimitReport};
pub use well::{Classification, LevelSetBounds, WellReport};
