//! Simulators and experiment drivers for point-to-point routing on
//! welded-trees networks.
//!
//! A welded-trees network joins two balanced binary trees of height `n` by a
//! random cycle alternating between their leaf sets. Routing a payload from
//! the left root (`source`) to the right root (`target`) is where quantum and
//! classical distributed algorithms separate dramatically in message
//! complexity, and this crate provides the machinery to measure both sides at
//! desk scale:
//!
//! - [`graph`] — construction, validation, serialization, and oracle queries
//!   for welded-trees instances with randomized identifiers and port numbers.
//! - [`walk`] — exact simulation of the Grover walk over directed arcs,
//!   hitting-probability sweeps, and a dense-matrix verification oracle.
//! - [`distsim`] — round-based distributed simulation with emission/reception
//!   registers, exact qubit ledgers, and the walk-based routing algorithms.
//! - [`classical`] — the flooding baseline, the oracle exploration games, and
//!   random tree embeddings with Monte Carlo estimators for their win rates.
//! - [`stats`] — chi-square goodness of fit, Wilson intervals, and small
//!   least-squares fits used by the experiment suite.
//! - [`report`] — CSV emission with reproducible config-echo headers.
//! - [`runner`] — deterministic fan-out of independent trials over threads.
//!
//! Every experiment is driven by a seeded, splittable RNG ([`rng::SplitRng`]),
//! so identical configurations reproduce identical outputs byte for byte.

pub mod classical;
pub mod distsim;
pub mod graph;
pub mod report;
pub mod rng;
pub mod runner;
pub mod stats;
pub mod walk;

pub use graph::{GraphError, OracleAnswer, WeldedTreesInstance};
pub use rng::SplitRng;
