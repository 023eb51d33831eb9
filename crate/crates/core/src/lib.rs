//! Markov chains on [0, 1] that jump left with probability `p(x)` by a random
//! proportion of the distance to 0, or right by a random proportion of the
//! distance to 1.
//!
//! The crate covers simulation of the chain, closed-form stationary densities
//! for beta-distributed proportions, a two-point boundary value solver for
//! semidegenerate transition kernels, independent numerical oracles, and two
//! applications built on the chain (a coverage walk in a rectangle and a
//! sequential random search).

pub mod analytic;
pub mod apps;
pub mod chain;
pub mod direction;
pub mod error;
pub mod io;
pub mod law;
pub mod model;
pub mod point;
pub mod quad;
pub mod semidegenerate;
pub mod special;
pub mod verify;

mod ode;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use direction::{check_e1, check_e1_default, eval_p, DirectionFunction, ErgodicityReport, PiecewiseConstant, Polynomial};
pub use error::{Error, Result};
pub use law::{MixtureTerm, ProportionLaw};
pub use model::ChainSpec;
pub use point::UnitPoint;
