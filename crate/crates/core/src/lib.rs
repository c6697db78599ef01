//! Adaptive minimum-BER reduced-rank receive processing for multiuser MIMO
//! uplinks, built on joint interpolation, decimation and filtering (JIDF).
//!
//! The crate is organised bottom-up:
//!
//! - [`signal`]: symbols, Clarke fading channels, noise and the received vector.
//! - [`jidf`]: interpolators, decimation patterns and per-branch projection.
//! - [`mber`]: the error-probability cost, its gradients and the adaptive receiver.
//! - [`baselines`]: full-rank LMS and full-rank MBER reference receivers.
//! - [`receiver`]: the [`Receiver`](receiver::Receiver) trait and the name-keyed registry.
//! - [`complexity`]: per-symbol arithmetic operation counts, one model per algorithm.
//! - [`harness`]: the seeded Monte Carlo engine and BER curves.
//! - [`gradcheck`]: finite-difference verification of the analytic gradients.

pub mod baselines;
pub mod complexity;
pub mod error;
pub mod gradcheck;
pub mod harness;
pub mod jidf;
pub mod mber;
pub mod receiver;
pub mod signal;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Hard binary decision; zero maps to `+1`.
#[inline]
pub fn hard_decision(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}
