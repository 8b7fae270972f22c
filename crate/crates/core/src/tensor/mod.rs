//! Dense linear algebra, layer primitives, seeded randomness and the
//! finite-difference gradient oracle.

mod gradcheck;
mod matrix;
pub mod ops;
mod param;
mod rng;

pub use gradcheck::{numeric_gradient, relative_error};
pub use matrix::{sq_dist, Matrix};
pub use param::{Param, ParamSet};
pub use rng::{sample_std_normal, Rng};
