//! One-way distributed correlation testing with shared sign codebooks.
//!
//! Two parties observe `x` and `y`, the coordinates of i.i.d. pairs that are
//! either independent or correlated with `|rho| >= tau`. The first party sends
//! a short message, the second decides. This crate holds the protocols, their
//! parameter formulas, communication lower-bound calculators and a Monte
//! Carlo harness.

pub mod codebook;
pub mod error;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod params;
pub mod protocol;
pub mod rng;

pub use error::{Error, Result};
