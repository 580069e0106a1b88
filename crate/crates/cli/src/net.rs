//! Socket-facing entry points: a client endpoint serving CSV-loaded samples
//! and a coordinator connecting to remote clients.

use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::time::Duration;

use itd_core::kernel::ClientSample;
use itd_core::permtest::TestReport;
use itd_core::synth::load_client_csv;
use itd_protocol::client::serve_client;
use itd_protocol::coordinator::{coordinator_run, ClientEndpoint, RunParams};
use itd_protocol::transcript::Transcript;
use itd_protocol::transport::TcpChannel;

use crate::error::Result;

/// Address and advertised sizes of one remote client, as `id:host:port:m:n`.
#[derive(Debug, Clone)]
pub struct ClientSpec {
    pub client_id: u64,
    pub addr: String,
    pub m: usize,
    pub n: usize,
}

impl std::str::FromStr for ClientSpec {
    type Err = anyhow::Error;

    fn from_str(raw: &str) -> Result<Self> {
        let parts: Vec<&str> = raw.split(':').collect();
        anyhow::ensure!(parts.len() == 5, "expected id:host:port:m:n, got {raw:?}");
        Ok(ClientSpec {
            client_id: parts[0].parse()?,
            addr: format!("{}:{}", parts[1], parts[2]),
            m: parts[3].parse()?,
            n: parts[4].parse()?,
        })
    }
}

/// Serves a CSV-loaded sample on a listening socket, one run per connection.
/// With `max_runs` = 0 it serves until the process is killed.
pub fn serve_client_csv(
    listen: &str,
    client_id: u64,
    xs_path: &Path,
    ys_path: &Path,
    timeout: Duration,
    max_runs: usize,
) -> Result<()> {
    let sample = load_client_csv(client_id, xs_path, ys_path)?;
    serve_sample(listen, &sample, timeout, max_runs)
}

pub fn serve_sample(
    listen: &str,
    sample: &ClientSample,
    timeout: Duration,
    max_runs: usize,
) -> Result<()> {
    let listener = TcpListener::bind(listen)?;
    eprintln!(
        "client {} serving m={} n={} on {}",
        sample.client_id,
        sample.xs.len(),
        sample.ys.len(),
        listener.local_addr()?
    );
    let mut served = 0usize;
    loop {
        let (stream, _) = listener.accept()?;
        let mut channel = TcpChannel::new(stream)?;
        if let Err(e) = serve_client(&mut channel, sample, timeout) {
            eprintln!("client {}: run failed: {e}", sample.client_id);
        }
        served += 1;
        if max_runs > 0 && served >= max_runs {
            return Ok(());
        }
    }
}

/// Connects to every listed client and runs one coordinated test.
pub fn coordinate(
    params: &RunParams,
    specs: &[ClientSpec],
    transcript_path: Option<&PathBuf>,
) -> Result<TestReport> {
    let mut registry = Vec::with_capacity(specs.len());
    for spec in specs {
        registry.push(ClientEndpoint {
            client_id: spec.client_id,
            m: spec.m,
            n: spec.n,
            channel: Box::new(TcpChannel::connect(&spec.addr)?),
        });
    }
    let transcript = transcript_path.map(|_| Transcript::new());
    let report = coordinator_run(params, registry, transcript.as_ref())?;
    if let (Some(path), Some(t)) = (transcript_path, transcript) {
        t.write_to(path)?;
    }
    Ok(report)
}
