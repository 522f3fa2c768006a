//! Decentralized multi-player multi-armed bandits without collision or
//! sensing information.
//!
//! The crate holds the algorithmic core and has no IO: the Bernoulli KL
//! kernel and KL-UCB index inversion ([`kl`]), the per-player decision rules
//! ([`policy`]), the synchronous collision environment ([`sim`]) and the
//! arrival/departure processes for dynamic populations ([`dynamics`]).
//!
//! It builds without `std` (with `alloc`); disable default features and
//! enable `libm` for the floating point routines.
//!
//! Arms and players are indexed from 0.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("mpmab-core needs either the `std` or the `libm` feature for float math");

mod error;
mod math;

pub mod dynamics;
pub mod kl;
pub mod policy;
pub mod sim;

pub use error::{Error, Result};

/// Pseudorandom stream used for every random source in the simulator.
///
/// ChaCha8 output is specified independently of platform and word size, so
/// seeded traces are reproducible everywhere.
pub type Stream = rand_chacha::ChaCha8Rng;

/// Creates a [`Stream`] from a 64-bit seed.
pub fn stream_from_seed(seed: u64) -> Stream {
    use rand::SeedableRng;
    Stream::seed_from_u64(seed)
}
