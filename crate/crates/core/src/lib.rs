//! Matrix-valued orthogonal polynomials for periodic Aztec diamond weights.

pub mod cli;
pub mod contour;
pub mod kernel;
pub mod elliptic;
pub mod error;
pub mod exact;
pub mod linalg;
pub mod mvop;
pub mod poly;
pub mod thetamvop;
pub mod weights;
pub mod wienerhopf;

pub use error::{Error, Result};
