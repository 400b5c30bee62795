//! Adaptive tracking of time-varying convex optimization problems by
//! centralized and distributed multi-agent controllers, with a fixed-step
//! simulator and a scenario-driven command-line front end.

pub mod cli;
pub mod controllers;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod objective;
pub mod plot;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
