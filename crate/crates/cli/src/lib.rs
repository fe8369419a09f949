//! Batch front end for market-state detection: configuration, file formats,
//! the staged pipeline and SVG figures.

pub mod config;
pub mod container;
pub mod error;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod reports;
pub mod svg;
pub mod synthetic;
