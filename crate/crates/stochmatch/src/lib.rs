//! Stochastic matching at desk scale.
//!
//! A graph `G = (V, E, w)` is given together with a realization probability
//! `p`: every edge survives independently with probability `p`, and the
//! benchmark is the omniscient optimum `OPT = E[M(E_p)]`, the expected weight
//! of the maximum matching of the realized graph. The crate provides
//!
//! * deterministic exact maximum-weight matching on general graphs
//!   ([`solver`]), with a brute-force oracle for cross-validation,
//! * Monte-Carlo and exhaustive estimators for `OPT` and per-edge matching
//!   probabilities ([`estimators`]),
//! * the query-planning algorithms under comparison ([`algorithms`]): the
//!   realization-sampling non-adaptive algorithm, the iterated-matching
//!   baseline it improves on, and an adaptive multi-round variant,
//! * fractional-matching constructions and certificates used to analyze the
//!   algorithms ([`analysis`]),
//! * instance generators and a seeded, bit-reproducible experiment harness
//!   ([`graph`], [`harness`]).
//!
//! All randomness flows through counter-based streams ([`rng`]) keyed by
//! `(seed, domain, trial, draw)`, so every experiment is reproducible and
//! independent of worker count.

pub mod algorithms;
pub mod analysis;
pub mod estimators;
pub mod graph;
pub mod harness;
pub mod rng;
pub mod solver;

pub use graph::{EdgeSet, Graph};
pub use solver::{Matching, MatchingSolver};
