//! Ground states of the critical Kirchhoff equation
//! `−(ε²a + εb∫|∇u|²)Δu + V(x)u = P(x)|u|^{p−2}u + Q(x)u⁵` in ℝ³.

pub mod cli;
pub mod concentration;
pub mod error;
pub mod functional;
pub mod groundstate;
pub mod model;
pub mod potentials;
pub mod thresholds;

pub use error::{KgsError, Result};
