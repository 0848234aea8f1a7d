//! Kernel ridge regression, optimistic kernel value iteration, and regret
//! experiments on finite episodic MDPs whose transitions are certified members
//! of a kernel's RKHS.

pub mod agents;
pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod krr;
pub mod mdp;

pub use error::{Error, Result};
