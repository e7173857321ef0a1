//! Lindblad phase damping of small qubit registers.
//!
//! The crate integrates the master equation for dense `2ⁿ × 2ⁿ` density
//! matrices, computes closed-form dephasing rates when every operator is
//! diagonal in the computational basis, and checks the chain inequality
//! that bounds the dephasing rate of any coherence (in particular GHZ
//! coherences) by `n` times the sum of single-spin-flip rates along a path.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod lindblad;
pub mod presets;
pub mod register;
pub mod tensor;
pub mod theorems;

pub use error::{Error, Result};
pub use tensor::{ComplexMatrix, Tolerances, C64};
