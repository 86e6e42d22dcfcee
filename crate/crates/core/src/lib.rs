pub mod adiabatic;
pub mod base1d;
pub mod cli;
pub mod error;
pub mod fit;
pub mod glue;
pub mod mat2;
pub mod scattering;
pub mod spectral;

pub use error::{Error, Result};
