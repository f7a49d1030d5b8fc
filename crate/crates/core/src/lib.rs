//! Simulation and analysis of dispersion-managed WDM fiber links.
//!
//! The crate covers the full path from Gaussian symbols to achievable
//! information rates:
//!
//! * [`signal`]: sampled envelopes and unitary spectral primitives,
//! * [`transceiver`]: sinc-pulse WDM transmitter and matched-filter receiver,
//! * [`link`]: split-step Fourier fiber spans, DCF/FBG compensation, EDFAs
//!   and digital back propagation,
//! * [`xpm`]: the semi-analytic XPM kernel and its time–frequency
//!   autocorrelation,
//! * [`air`]: mismatched-decoding information rates for AWGN and
//!   phase-noise auxiliary channels,
//! * [`harness`]: configuration, sweeps, CSV/SVG output.

// `!(x > 0.0)` style checks are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod air;
pub mod error;
pub mod harness;
pub mod link;
pub mod rng;
pub mod signal;
pub mod transceiver;
pub mod xpm;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/signals.md")]
    mod signals {}
    #[doc = include_str!("../../../book/src/propagation.md")]
    mod propagation {}
    #[doc = include_str!("../../../book/src/xpm.md")]
    mod xpm {}
    #[doc = include_str!("../../../book/src/air.md")]
    mod air {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
