//! Simulation and analysis of private, communication-constrained
//! collaborative online mean estimation.
//!
//! Agents on a fixed graph each receive a stream of bounded samples, privatize
//! them with Laplace noise, identify neighbors that share their mean, and run a
//! consensus average with those neighbors. The crate provides:
//!
//! - [`bernstein`]: Bernstein-condition algebra, tail bounds and test thresholds,
//! - [`privacy`]: Laplace mechanism calibration and sampling,
//! - [`topology`]: random regular graphs, class assignment and same-class components,
//! - [`rules`]: the oracle, Bernstein-test and optimistic-distance neighbor rules,
//! - [`consensus`]: the synchronous round engine and mixing weights,
//! - [`experiments`]: Monte Carlo runs, analytic benchmark curves, config and CSV.
//!
//! The guide under `book/` walks through each piece; its code samples are
//! compiled and run as doctests of this crate.

pub mod bernstein;
pub mod consensus;
pub mod error;
pub mod experiments;
pub mod privacy;
pub mod rng;
pub mod rules;
pub mod topology;

pub use error::{Error, Result};

// Compiles and runs every snippet in the guide as a doc-test.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/bernstein.md")]
    mod bernstein {}
    #[doc = include_str!("../../../book/src/privacy.md")]
    mod privacy {}
    #[doc = include_str!("../../../book/src/topology.md")]
    mod topology {}
    #[doc = include_str!("../../../book/src/decision-rules.md")]
    mod decision_rules {}
    #[doc = include_str!("../../../book/src/consensus.md")]
    mod consensus {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
