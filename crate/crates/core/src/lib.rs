//! Numerical toolkit for the focusing cubic Schrödinger equation with an
//! inverse-power potential in three dimensions.

pub mod error;
pub mod dynamics;
pub mod experiments;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod groundstate;
pub mod io;
pub mod modulation;
mod quadrature;
pub mod random;
pub mod snapshot;
pub mod transform;

pub use error::{Error, Result};
pub use field::{sample_profile, ComplexField, Position};
pub use grid::{CartesianGrid, Grid, GridSpec, RadialGrid};
pub use num_complex::Complex64;
