//! Log-periodic power-law (LPPL) bubble diagnostics.
//!
//! The crate is `no_std` (with `alloc`) so the numerical pipeline can be
//! embedded anywhere; file formats, hashing and the command-line front end
//! live in the `bubblecast` companion crate.
//!
//! Pipeline, bottom-up:
//!
//! * [`timeseries`]: validated price series on a calendar-day axis.
//! * [`lppl`]: model evaluation, profiled least squares and multi-start fitting.
//! * [`scanner`]: the `(t1, t2)` sub-window grid and per-window fits.
//! * [`forecast`]: residual bootstrap ensemble and critical-time quantiles.
//! * [`diagnostics`]: drawdowns, up-day fractions, Savitzky-Golay growth
//!   rates, trend slopes and the proxy bubble index.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod diagnostics;
pub mod error;
pub mod forecast;
mod linalg;
pub mod lppl;
mod math;
pub mod scanner;
pub mod timeseries;

pub use error::{Error, Result};

pub use chrono::NaiveDate;
