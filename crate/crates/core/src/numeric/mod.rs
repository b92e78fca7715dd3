//! Numerical building blocks: quadrature, special functions, polynomial
//! roots and small statistics helpers.

pub mod quad;
pub mod roots;
pub mod special;
pub mod stats;
