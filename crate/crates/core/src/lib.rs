//! Online k-submodular maximization with a per-element selection game.

pub mod engine;
pub mod error;
pub mod harness;
pub mod kfunc;
pub mod linprog;
pub mod olo;
pub mod rng;
pub mod selection;

pub use error::{Error, Result};
