//! Distributed two-sample testing with the integrated transportation
//! distance: exact and entropic discrete optimal transport per client,
//! weighted aggregation at a coordinator, and the permutation-test machinery
//! built on top.

pub mod error;
pub mod kernel;
pub mod permtest;
pub mod seed;
pub mod synth;
pub mod transport;

pub use error::{Error, Result};
pub use kernel::{ClientDistance, ClientSample, ClientWeightVector, ITDStatistic};
pub use permtest::{PermutationBatch, PermutedITDSample, TestParams, TestReport};
pub use transport::{CostMatrix, PointCloud, SinkhornResult, TransportPlan};
