//! Market-state detection from epoch-wise correlation matrices.
//!
//! The crate covers the numerical side of the analysis: log returns and
//! sector ordering, disjoint epochs, Pearson correlation, the two
//! reduced-rank constructions that remove the market mode (the dyad of the
//! largest singular value) before clustering, bisecting k-means with its
//! width/quotient machinery, and the state statistics built on top of a
//! cluster solution (timelines, typical states, turning points, adjusted
//! Rand index robustness).
//!
//! It is `no_std` and needs only `alloc`. File formats, rendering and the
//! command-line pipeline live in the `marketstates` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod clustering;
pub mod correlation;
pub mod epoch;
pub mod error;
pub mod ingest;
pub mod matrices;
mod math;
pub mod reduce;
pub mod sector;
pub mod spectral;

pub use chrono::NaiveDate;
pub use nalgebra::DMatrix;

pub use correlation::{CorrelationMatrix, MatrixKind};
pub use epoch::{EpochInfo, EpochWindow, NormalizedEpoch};
pub use error::{Error, Result};
pub use ingest::{PriceTable, ReturnMatrix};
pub use sector::Sector;
