pub mod blowup;
pub mod characteristics;
pub mod cli;
pub mod complex2d;
pub mod contour;
pub mod demos;
pub mod error;
pub mod export;
pub mod expr;
pub mod hodograph;
pub mod linalg;
pub mod mappings;
pub mod optimize;
pub mod potential;
pub mod problem;
pub mod validate;

pub use error::{Error, Result, SetupError};
