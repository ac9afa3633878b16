//! Game networks: multi-agent decision problems with factored probabilities
//! and per-player multiplicative utility potentials, with two equilibrium
//! solvers. [`first_equilibrium`] follows a convex-linear homotopy from the
//! uniform profile to a single, payoff-determined equilibrium;
//! [`all_equilibria`] tracks every path of a total-degree polynomial homotopy
//! and keeps the real roots that pass the Nash test.

pub mod all_equilibria;
pub mod decomposition;
pub mod equilibrium;
pub mod error;
pub mod expectations;
pub mod extensive_form;
pub mod factor;
pub mod first_equilibrium;
pub mod format;
pub mod games;
pub mod model;
pub mod poly;
pub mod profile;

pub use error::{Error, Result};
pub use model::{GNet, InfoSet, NodeId, PlayerId};
pub use profile::{Layout, Profile};
