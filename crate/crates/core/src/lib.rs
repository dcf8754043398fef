//! Finite-group composition: representation theory, the character-based
//! composition oracle, a from-scratch MLP trainer and the interpretability
//! pipeline that checks what the trained network computes.

pub mod container;
pub mod error;
pub mod gcr;
pub mod group;
pub mod harness;
pub mod interp;
pub mod linalg;
pub mod nn;
pub mod rep;

pub use error::{Error, Result};
