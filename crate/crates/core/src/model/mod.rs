//! Grids, fields, quadrature and the shared parameter record.

pub mod dump;
mod field;
mod grid;
mod ops;
mod params;

pub use field::{compensated_sum, Accumulator, Field};
pub use grid::{distance, norm, CartesianGrid, Coordinates, Grid, RadialGrid};
pub(crate) use ops::radial_cell_coeff;
pub use ops::{grad_norm_sq, inner, integrate, neg_laplacian, stiffness_apply, weighted_norm_sq};
pub use params::KirchhoffParams;
