//! Discrete spectrum of the focusing Zakharov-Shabat problem by tracking the
//! jumps of `arg a(zeta)` from the boundary of a search rectangle to the zeros
//! of `a`, with a contour-integral baseline for cross-validation.

pub mod bench;
pub mod boundary;
pub mod ci;
pub mod domain;
pub mod error;
pub mod export;
pub mod pipeline;
pub mod presets;
pub mod scatter;
pub mod refine;
pub mod signal;
pub mod tracker;

pub use error::{Error, Result};
