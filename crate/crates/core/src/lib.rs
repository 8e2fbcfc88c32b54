//! Puzzle-gated authentication handshake with stateless server tokens.
//!
//! The crate is `no_std` (it needs `alloc`) and never reads a clock or an
//! entropy source on its own: every operation takes the current time as a
//! [`Timestamp`] and randomness as an explicit `RngCore + CryptoRng`. That
//! keeps the engine deterministic under a seeded generator, which is what
//! the [`simnet`] harness relies on.
//!
//! Layout:
//!
//! * [`puzzle`]: hash-preimage client puzzles with self-authenticating
//!   challenge cookies.
//! * [`token`]: the opaque server token, AEAD-sealed under the master key.
//! * [`server`] / [`client`]: the two protocol state machines.
//! * [`wire`]: the tag-length-value message encoding shared by both.
//! * [`svo`]: parser and proof checker for SVO belief logic, with the bundled
//!   derivation of the handshake's authentication goal.
//! * [`simnet`]: deterministic in-memory simulation with attack workloads.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod client;
pub mod codec;
pub mod crypto;
pub mod puzzle;
pub mod server;
pub mod simnet;
pub mod svo;
pub mod token;
mod types;
pub mod wire;

pub use types::{ClientId, ClientIdError, Timestamp};
