//! Location-aided codebook beam training for mmWave vehicle-to-infrastructure
//! links: coupled pair selection, decoupled selection with location, and
//! decoupled selection without location at the BS.

pub mod array;
mod codec;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod link;
pub mod regressor;
pub mod scene;
pub mod select;

pub use error::{Error, Result};
