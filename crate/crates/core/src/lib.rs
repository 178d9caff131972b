//! Multiscale spectral aggregation over level-set restricted centroidal
//! Voronoi regions, packaged for glyph-based visualization.
//!
//! The processing chain runs
//! [`volume`] → [`specfilter`] → [`geometry`] → [`lsrcvt`] → [`stats`] →
//! [`glyphpack`].

pub mod error;
pub mod fft;
pub mod geometry;
pub mod glyphpack;
pub mod grid;
pub mod lsrcvt;
pub mod specfilter;
pub mod stats;
pub mod volume;

pub use error::{Error, Result};
pub use grid::{Axis, Grid3, ScalarField};
