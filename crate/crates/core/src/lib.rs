//! Tunneling exponents under nonstationary fields: the exact Zener solution,
//! its classical-trajectory limit, and enhanced tunneling in two dimensions.

pub mod cli;
pub mod enhanced_2d;
pub mod error;
pub mod exact_zener;
pub mod fields;
pub mod ode;
pub mod quad;
pub mod semiclassical_1d;

pub use error::{Error, Result};
