//! Experiment harness behind the `itd` binary: seeded Type I error / power
//! grids, limit-theorem diagnostics, the drift comparison, and the socket
//! entry points.

pub mod clt;
pub mod concentration;
pub mod drift;
pub mod error;
pub mod experiments;
pub mod net;
pub mod runner;
pub mod stats;
pub mod table;
