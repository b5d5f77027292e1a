//! Simulator and optimization library for cache-enabled cloud small-cell
//! networks (C-SCNs).
//!
//! A set of multi-antenna small-cell base stations, connected to a central
//! processor over fronthaul links, cooperatively serve single-antenna users
//! with multicast beamforming. Each SBS caches file fractions; whatever is
//! not cached must be pushed over fronthaul while the SBS serves, so the
//! delivery power splits into an edge (radio) part and a fronthaul part.
//!
//! The library implements the two-timescale scheme end to end:
//!
//! * per-slot **delivery**: joint beamforming + SBS clustering by a penalty
//!   convex-concave procedure over conic subproblems ([`delivery`], [`conic`]),
//! * per-block **cache allocation**: alternating optimization over a
//!   historical window with a closed-form fractional-knapsack cache step
//!   ([`cache`]),
//! * baseline caching policies (uniform, LRU, genie-aided) and an experiment
//!   harness with a brute-force clustering oracle ([`baselines`], [`harness`]).

pub mod baselines;
pub mod cache;
pub mod conic;
pub mod delivery;
mod error;
pub mod harness;
pub mod model;
pub mod physics;
pub mod scenario;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
