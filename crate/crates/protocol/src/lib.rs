//! Coordinator/client protocol for distributed two-sample testing: clients
//! compute transport distances locally and ship only scalar summaries over a
//! framed channel; the coordinator aggregates and decides.

pub mod client;
pub mod codec;
pub mod coordinator;
pub mod error;
pub mod message;
pub mod sim;
pub mod transcript;
pub mod transport;

pub use coordinator::{coordinator_run, ClientEndpoint, RunParams};
pub use error::ProtocolError;
pub use message::{Body, Envelope, PROTOCOL_VERSION};
pub use sim::{run_loopback, run_socket};
pub use transcript::Transcript;
