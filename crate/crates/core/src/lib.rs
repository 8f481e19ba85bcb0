//! Hybrid block-diagonalization beamforming for a multi-pair two-way
//! amplify-and-forward massive-MIMO relay.
//!
//! The relay matrix is factored as `W = α F_t B_t T B_r F_r`:
//!
//! * [`relay_design`] builds the phase-only analog stage `F_r`/`F_t` by equal
//!   gain combining, the block-diagonalizing digital stage `B_r`/`B_t`, and the
//!   per-pair ANOMAX amplification blocks `T_m`.
//! * [`terminal_design`] builds the user precoders/decoders (noise whitening,
//!   SVD, water-filling) and iterates them jointly with the amplification
//!   factor `α`.
//! * [`metrics`] evaluates per-user and sum spectral efficiency.
//! * [`harness`] runs seeded Monte-Carlo sweeps against a full-RF-chain relay
//!   baseline and writes CSV results.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod relay_design;
pub mod terminal_design;

pub use error::{Error, Result};
