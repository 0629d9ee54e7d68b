//! Monte Carlo laboratory for the local time of a simple symmetric random walk.
//!
//! The crate simulates walks at scale, decomposes them into signed excursions,
//! verifies the branching (Ray-Knight) identities that tie level-indexed local
//! times to a critical Galton-Watson process, builds the Gaussian limit objects
//! (Wiener sheet, the process `G(k,t) = W(k,t) + W(k-1,t) - W*(t)`, Brownian
//! local time at zero), and measures Skorokhod-embedding couplings between the
//! discrete and continuous sides. A statistical layer (KS, chi-square, tail
//! audits, log-log rate fits) turns the known limit laws and inequalities into
//! reproducible pass/fail experiments.
//!
//! Everything is deterministic given a master seed: replications draw from
//! hierarchically derived [`rng::RngStream`]s, so any experiment re-runs
//! bit-identically, including under a different worker count.
//!
//! See the `examples/` directory for one runnable program per capability and
//! the `loctime` binary for batch experiment orchestration.

pub mod barrier;
pub mod config;
pub mod coupling;
pub mod error;
pub mod excursion;
pub mod experiments;
pub mod gaussian;
pub mod ray_knight;
pub mod rng;
pub mod runner;
pub mod special;
pub mod stats;
pub mod walk;

pub use error::Error;
pub use rng::RngStream;

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
