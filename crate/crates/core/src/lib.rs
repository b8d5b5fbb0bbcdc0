//! Probabilities of the operating modes an arbitrary node can take in a
//! cache-enabled full-duplex D2D network.
//!
//! Each of `N` user devices caches one content out of a library of `m`
//! contents, either deterministically (user `k` holds content `k`) or
//! stochastically (one i.i.d. draw from a Zipf-type caching distribution).
//! Every user then requests one content according to a Zipf popularity
//! distribution. Depending on its own cache, its request, and the caches
//! and requests of the other users, a node ends up in exactly one of six
//! operating modes: self-request (SR), self-request while transmitting
//! (SR-HDTX), full-duplex transceiver (FDTR, split into bi-directional
//! BFD and three-node TNFD), half-duplex transmitter (HDTX), half-duplex
//! receiver (HDRX), or hitting outage (HO).
//!
//! The crate computes the per-mode probabilities four ways:
//!
//! * [`deterministic::mode_probabilities`] — closed forms for the
//!   deterministic policy, including the BFD/TNFD split;
//! * [`stochastic::mode_probabilities_exact`] — exact expectation over all
//!   `m^N` cache placements (streamed, never materialized);
//! * [`stochastic::mode_probabilities_fast`] — an `O(m)` product form that
//!   exploits the independence of users' caches, usable at large `N`, `m`;
//! * [`simulator::run_trials`] — a seeded, reproducible Monte Carlo
//!   estimator that classifies every user in every trial.
//!
//! [`metrics`] adds the HD/FD/TX/RX aggregates and the binomial PMFs of
//! per-mode node counts, and [`experiments`] wires everything into
//! parameter sweeps, policy comparisons, a skew-exponent optimizer, and a
//! cross-engine validation harness.

pub mod deterministic;
pub mod dist;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod modes;
pub mod simulator;
pub mod stochastic;

pub use dist::{CachingDist, NetworkConfig, Policy, PopularityDist};
pub use error::{Error, Result};
pub use metrics::{AggregateMetrics, Pmf};
pub use modes::{Aggregate, FdSplit, Mode, ModeProbabilities, ModeStat, Provenance};
