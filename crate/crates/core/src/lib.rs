//! Bayes complexity of functions under shallow ReLU and linear priors.
//!
//! The crate estimates how much prior mass sits near a target function,
//! both at finite tolerance (sharp complexity) and as a log-log scaling
//! exponent (limiting complexity), and ties these quantities to PAC-Bayes
//! generalization bounds.

pub mod complexity;
pub mod error;
pub mod models;
pub mod numeric;
pub mod pacbayes;
pub mod priors;
pub mod projection;
pub mod pwl;
pub mod rng;

pub use error::{Error, Result};
pub use pwl::{L2Measure, PwlFunction};
pub use rng::SeededRng;
