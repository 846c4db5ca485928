pub mod cli;
pub mod contour;
pub mod error;
pub mod ext;
pub mod fields;
pub mod geometry;
pub mod imaging;
pub mod kernels;
pub mod optimize;
pub mod phasefield;

pub use error::{Error, Result};
pub use ext::ExtReal;
pub use fields::{BinaryPattern, ScalarField};
