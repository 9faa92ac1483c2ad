//! Strategic exploration for inverse constrained reinforcement learning on
//! tabular constrained MDPs.

pub mod cmdp;
pub mod csvio;
pub mod envs;
pub mod error;
pub mod estimation;
pub mod exploration;
pub mod harness;
pub mod metrics;
pub mod solver;

pub use error::{IcrlError, Result};
