//! Numerical building blocks shared by the exponent and design modules.

pub mod hull;
pub mod quad;
pub mod scalar;
pub mod special;
