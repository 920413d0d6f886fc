//! Verification workbench for invariant harmonic morphisms on matrix
//! symmetric spaces.

pub mod cli;
pub mod error;
pub mod jet;
pub mod matrix;
pub mod morphisms;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod spaces;
pub mod verifier;

pub use error::{Error, Result};
pub use matrix::Mat;
pub use scalar::C64;
