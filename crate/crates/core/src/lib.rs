//! Object-oriented discrete Bayesian network engine.

pub mod error;
pub mod factor;
pub mod graph;
pub mod inference;
pub mod learning;
pub mod oobn;
pub mod random;
pub mod sensitivity;
pub mod stateless;

pub use error::{Error, Result};
pub use graph::{Assignment, Cpt, Evidence, Network, Variable};
pub use inference::Posterior;
