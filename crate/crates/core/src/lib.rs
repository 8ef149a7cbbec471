//! MOEA/D-DE with a partial update of the working population.
//!
//! The crate is organised bottom-up:
//!
//! * [`weights`] builds the low-discrepancy weight set and neighbourhoods,
//! * [`problems`] holds the DTLZ, inverted DTLZ and UF benchmark problems,
//! * [`engine`] runs the optimizer and records anytime checkpoints,
//! * [`archive`] turns a run into a size-matched evaluation set,
//! * [`metrics`] and [`stats`] compute the quality indicators and tests,
//! * [`harness`] drives whole experiments and persists their results.
//!
//! With the default `parallel` feature, batch work (independent runs,
//! per-problem metrics, Monte-Carlo estimates) is spread over rayon's pool.
//! Disabling it gives a purely sequential build with identical output.

pub mod archive;
pub mod engine;
mod error;
pub mod harness;
pub mod metrics;
pub mod par;
pub mod problems;
pub mod stats;
pub mod svg;
pub mod weights;

pub use error::{Error, Result};
