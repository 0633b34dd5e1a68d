//! Planar tensegrity structures grown from K4 cells, with a certified basis
//! of their self-stress space.

pub mod cells;
pub mod error;
pub mod fixtures;
pub mod geom;
pub mod growgen;
pub mod model;
pub mod multiply;
pub mod stress;

pub use error::{Error, Result};
