//! Planning for robust active-measuring MDPs (RAM-MDPs).
//!
//! An agent controls an MDP whose transition probabilities are only known up
//! to intervals, and may pay a fixed cost to observe the true state after each
//! step. The crate provides:
//!
//! - [`model`]: the interval model, beliefs, point models and JSON files.
//! - [`solvers`]: greedy inner problems, robust/optimistic/exact value
//!   iteration, and the belief-dependent worst case for non-measuring steps.
//! - [`planners`]: the robust act-then-measure planner, its
//!   measurement-lenient variants and non-robust baselines.
//! - [`environments`]: the benchmark models.
//! - [`simulation`]: episode runners and batch statistics.
//! - [`oracle`]: brute-force references used to check the planners.

pub mod environments;
mod error;
pub mod model;
pub mod oracle;
pub mod planners;
pub mod simulation;
pub mod solvers;

pub use error::{Error, Result};
