//! Noise and SNR toolkit for a common-emitter amplifier chain.
//!
//! * [`noise`]: thermal and shot noise of the base circuit.
//! * [`amp`]: the amplifier as an ideal gain acting on signal plus base noise.
//! * [`filters`]: Butterworth / Chebyshev I / Chebyshev II / elliptic low-pass design.
//! * [`snr`]: known-frequency least-squares SNR estimation.
//! * [`heuristic`]: cutoff-frequency rule of thumb for Butterworth post-filters.
//! * [`experiments`]: seeded Monte-Carlo sweeps.
//! * [`cli`]: the `ceasnr` command-line front end.

pub mod amp;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod filters;
pub mod heuristic;
pub mod noise;
pub mod quad;
pub mod rng;
pub mod snr;

pub use error::{Error, Result};
