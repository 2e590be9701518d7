pub mod classify;
pub mod detectors;
pub mod error;
pub mod hull;
pub mod io;
pub mod matrix;
pub mod product;
pub mod resources;
pub mod rng;
pub mod state;
pub mod symmetry;
pub mod volume;
pub mod weyl;
pub mod witness;

pub use error::{Error, Result};
