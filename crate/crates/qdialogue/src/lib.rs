//! Simulator and analysis toolkit for a bidirectional quantum dialogue
//! protocol built on cavity-assisted entanglement swapping.
//!
//! Two communicants share groups of identically prepared two-atom Bell
//! states. Each party encodes a two-bit message on their half of one pair
//! with a local unitary; sending both pairs of a group through a pair of
//! single-mode cavities swaps the entanglement and correlates the four
//! final Z-basis outcomes into one of four announced "collections", from
//! which each side recovers the other's bits without ever transmitting
//! them. The crate provides:
//!
//! - [`quantum`]: exact dense state-vector simulation of small atom
//!   registers (gates, Z/X/Bell measurements, reduced densities).
//! - [`bell`]: the four two-atom Bell states and their basis correlations.
//! - [`cavity`]: the two-atom cavity gate at its standard operating point,
//!   the outcome collections, and the encode/decode bookkeeping.
//! - [`protocol`]: the six-step session engine with security checks,
//!   decoys, and a full classical transcript.
//! - [`adversary`]: intercept-resend, measure-resend and entangle-measure
//!   channel attacks, plus an exact transcript-posterior calculator for a
//!   passive listener.
//! - [`analysis`]: seeded Monte Carlo detection experiments, leakage
//!   enumeration, and qubit-efficiency accounting.
//! - [`config`]: TOML session configuration files.
//!
//! All simulation is exact (tolerance 1e-12) and deterministic for a fixed
//! seed: every random choice flows from an injected ChaCha stream.

pub mod adversary;
pub mod analysis;
pub mod bell;
pub mod cavity;
pub mod config;
pub mod protocol;
pub mod quantum;

pub use bell::BellState;
pub use cavity::{Collection, EncodingOp, Party};
pub use quantum::{AtomKet, Basis, StateVector};

/// Numeric tolerance used by every exactness check in the crate.
pub const TOL: f64 = 1e-12;

/// Seed used when a configuration does not specify one.
pub const DEFAULT_SEED: u64 = 42;
