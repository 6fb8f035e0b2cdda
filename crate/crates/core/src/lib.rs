//! Computation-replication analysis for multi-user, multi-server edge
//! computing networks.
//!
//! The crate is organized around the life cycle of an offloading round:
//!
//! - [`network`] holds the system parameters and the dimension adjustment
//!   used when the user count is not a multiple of the edge-node count.
//! - [`assignment`] builds circular (binary) and combinatorial (partial)
//!   task assignments and measures their computation load.
//! - [`latency`] evaluates normalized upload/download times, lower bounds,
//!   gaps and tradeoff curves in exact rational arithmetic.
//! - [`converse`] solves the converse assignment programs in closed form and
//!   by exhaustive enumeration.
//! - [`dof`] evaluates per-receiver degrees of freedom and numerically checks
//!   the alignment and neutralization constructions at finite extension.
//! - [`phy`] is a link-level Monte Carlo simulator for the four-node timing
//!   experiment (computing, multicast upload, cooperative zero-forcing
//!   download).

pub mod assignment;
pub mod converse;
pub mod dof;
mod error;
pub mod latency;
pub mod network;
pub mod phy;
pub mod random;
pub mod rational;

pub use error::{Error, Result};
pub use rational::Rational;
