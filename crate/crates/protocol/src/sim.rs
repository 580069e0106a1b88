//! Single-process simulation harnesses: spin up client endpoints on threads
//! behind either transport and drive one coordinator run against them.

use std::net::TcpListener;
use std::thread;
use std::time::Duration;

use itd_core::kernel::ClientSample;
use itd_core::permtest::TestReport;

use crate::client::serve_client;
use crate::coordinator::{coordinator_run, ClientEndpoint, RunParams};
use crate::error::Result;
use crate::transcript::Transcript;
use crate::transport::{loopback_pair, TcpChannel};

/// Runs one test with clients as loopback threads in this process.
pub fn run_loopback(
    params: &RunParams,
    clients: Vec<ClientSample>,
    transcript: Option<&Transcript>,
) -> Result<TestReport> {
    let timeout = params.reply_timeout;
    let mut registry = Vec::with_capacity(clients.len());
    let mut workers = Vec::with_capacity(clients.len());
    for client in clients {
        let (coordinator_end, mut client_end) = loopback_pair();
        registry.push(ClientEndpoint {
            client_id: client.client_id,
            m: client.xs.len(),
            n: client.ys.len(),
            channel: Box::new(coordinator_end),
        });
        workers.push(thread::spawn(move || {
            // An unselected client idles until the coordinator drops its
            // channel; that shows up as a receive error and is fine.
            let _ = serve_client(&mut client_end, &client, timeout);
        }));
    }
    let report = coordinator_run(params, registry, transcript);
    for worker in workers {
        let _ = worker.join();
    }
    report
}

/// Runs one test with clients serving TCP connections on loopback sockets.
pub fn run_socket(
    params: &RunParams,
    clients: Vec<ClientSample>,
    transcript: Option<&Transcript>,
) -> Result<TestReport> {
    let timeout = params.reply_timeout;
    let mut registry = Vec::with_capacity(clients.len());
    let mut workers = Vec::with_capacity(clients.len());
    for client in clients {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let client_id = client.client_id;
        let (m, n) = (client.xs.len(), client.ys.len());
        workers.push(thread::spawn(move || {
            let _ = serve_one_connection(&listener, &client, timeout);
        }));
        registry.push(ClientEndpoint {
            client_id,
            m,
            n,
            channel: Box::new(TcpChannel::connect(&addr.to_string())?),
        });
    }
    let report = coordinator_run(params, registry, transcript);
    for worker in workers {
        let _ = worker.join();
    }
    report
}

fn serve_one_connection(
    listener: &TcpListener,
    client: &ClientSample,
    timeout: Duration,
) -> Result<()> {
    let (stream, _) = listener.accept()?;
    let mut channel = TcpChannel::new(stream)?;
    serve_client(&mut channel, client, timeout)
}
