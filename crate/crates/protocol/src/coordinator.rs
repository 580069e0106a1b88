//! Coordinator endpoint: selects a cohort, fans out compute requests, waits
//! at a barrier for every reply, then aggregates and decides. Any client
//! failure aborts the run before a verdict exists.

use std::time::Duration;

use itd_core::kernel::{aggregate_itd2, client_weights, ClientDistance};
use itd_core::permtest::{
    aggregate_permuted_itd, decide, PermutationBatch, RunConfig, TestReport,
};
use itd_core::seed;

use crate::codec::{decode, encode};
use crate::error::{ProtocolError, Result};
use crate::message::{Body, Envelope};
use crate::transcript::{Direction, Transcript, ANALYST_PEER};
use crate::transport::{FrameChannel, DEFAULT_REPLY_TIMEOUT};

/// Seed stream for cohort selection, distinct from every client id and from
/// the aggregation stream.
pub const SELECTION_STREAM: u64 = u64::MAX - 1;

/// One reachable client: advertised sample sizes plus a live channel.
pub struct ClientEndpoint {
    pub client_id: u64,
    pub m: usize,
    pub n: usize,
    pub channel: Box<dyn FrameChannel>,
}

#[derive(Debug, Clone)]
pub struct RunParams {
    pub run_id: u64,
    /// Cohort size drawn from the registry.
    pub select: usize,
    pub order: f64,
    pub local_permutations: usize,
    pub aggregate_rounds: usize,
    pub alpha: f64,
    pub root_seed: u64,
    pub reply_timeout: Duration,
}

impl RunParams {
    pub fn new(run_id: u64, select: usize, root_seed: u64) -> Self {
        RunParams {
            run_id,
            select,
            order: 2.0,
            local_permutations: 100,
            aggregate_rounds: 1000,
            alpha: 0.05,
            root_seed,
            reply_timeout: DEFAULT_REPLY_TIMEOUT,
        }
    }
}

/// Runs one distributed test over the given registry. Produces a report
/// identical to the monolithic in-process computation with the same seeds.
pub fn coordinator_run(
    params: &RunParams,
    registry: Vec<ClientEndpoint>,
    transcript: Option<&Transcript>,
) -> Result<TestReport> {
    validate(params, &registry)?;

    // Seeded uniform cohort selection without replacement, then id order so
    // the weight vector has a canonical layout.
    let mut selection_rng = seed::rng(seed::derive(params.root_seed, SELECTION_STREAM));
    let picks = rand::seq::index::sample(&mut selection_rng, registry.len(), params.select);
    let mut selected: Vec<ClientEndpoint> = {
        let mut keep: Vec<Option<ClientEndpoint>> = registry.into_iter().map(Some).collect();
        picks.iter().map(|i| keep[i].take().unwrap()).collect()
    };
    selected.sort_by_key(|c| c.client_id);

    let m_sizes: Vec<usize> = selected.iter().map(|c| c.m).collect();
    let n_sizes: Vec<usize> = selected.iter().map(|c| c.n).collect();
    let weights = client_weights(&m_sizes, &n_sizes)?;
    let client_ids: Vec<u64> = selected.iter().map(|c| c.client_id).collect();

    let record = |direction: Direction, peer: u64, payload: &[u8]| {
        if let Some(t) = transcript {
            t.record(direction, peer, payload);
        }
    };

    // Fan-out: announce the cohort and request computation from every client.
    let announce = Envelope::new(
        params.run_id,
        Body::SelectClients { client_ids: client_ids.clone(), weights: weights.clone() },
    );
    let announce_bytes = encode(&announce)?;
    for endpoint in selected.iter_mut() {
        let request = Envelope::new(
            params.run_id,
            Body::ComputeRequest {
                order: params.order,
                permutations: params.local_permutations,
                seed: seed::derive(params.root_seed, endpoint.client_id),
            },
        );
        let request_bytes = encode(&request)?;
        endpoint.channel.send(&announce_bytes)?;
        record(Direction::Sent, endpoint.client_id, &announce_bytes);
        endpoint.channel.send(&request_bytes)?;
        record(Direction::Sent, endpoint.client_id, &request_bytes);
    }

    // Barrier: every client must deliver its result and its batch before any
    // aggregation happens.
    let mut per_client = Vec::with_capacity(selected.len());
    let mut batches = Vec::with_capacity(selected.len());
    for endpoint in selected.iter_mut() {
        let result = expect_reply(endpoint, params, transcript)?;
        let w2_squared = match result.body {
            Body::LocalResult { client_id, w2_squared } => {
                check_sender(client_id, endpoint.client_id)?;
                w2_squared
            }
            other => {
                return Err(ProtocolError::UnexpectedMessage {
                    got: other.kind(),
                    wanted: "LocalResult",
                })
            }
        };
        per_client.push(ClientDistance { client_id: endpoint.client_id, w2_squared });

        let batch = expect_reply(endpoint, params, transcript)?;
        let stats = match batch.body {
            Body::PermutedBatch { client_id, stats } => {
                check_sender(client_id, endpoint.client_id)?;
                stats
            }
            other => {
                return Err(ProtocolError::UnexpectedMessage {
                    got: other.kind(),
                    wanted: "PermutedBatch",
                })
            }
        };
        if stats.len() != params.local_permutations || stats.iter().any(|s| !s.is_finite()) {
            return Err(ProtocolError::Aborted(format!(
                "client {} returned a malformed batch",
                endpoint.client_id
            )));
        }
        batches.push(PermutationBatch {
            client_id: endpoint.client_id,
            stats,
            seed: seed::derive(params.root_seed, endpoint.client_id),
        });
    }

    let observed = aggregate_itd2(per_client, &weights);
    let mut coord_rng = seed::rng(seed::derive(params.root_seed, seed::COORDINATOR_STREAM));
    let sample =
        aggregate_permuted_itd(&batches, &weights, params.aggregate_rounds, &mut coord_rng)?;
    let config = RunConfig {
        clients: selected.len(),
        m_sizes,
        n_sizes,
        local_permutations: params.local_permutations,
        aggregate_rounds: params.aggregate_rounds,
        alpha: params.alpha,
        root_seed: params.root_seed,
    };
    let report = decide(&observed, &weights, &sample, &batches, params.alpha, config)?;

    // The verdict goes to the invoking analyst, once.
    let verdict = Envelope::new(params.run_id, Body::Verdict { report: report.clone() });
    record(Direction::Sent, ANALYST_PEER, &encode(&verdict)?);
    Ok(report)
}

fn validate(params: &RunParams, registry: &[ClientEndpoint]) -> Result<()> {
    if registry.is_empty() {
        return Err(ProtocolError::InvalidConfig("empty client registry"));
    }
    if params.select == 0 || params.select > registry.len() {
        return Err(ProtocolError::InvalidConfig("cohort size outside registry bounds"));
    }
    if params.local_permutations == 0 || params.aggregate_rounds == 0 {
        return Err(ProtocolError::InvalidConfig("permutation counts must be >= 1"));
    }
    if !(0.0 < params.alpha && params.alpha < 1.0) {
        return Err(ProtocolError::InvalidConfig("alpha must be in (0, 1)"));
    }
    let mut ids: Vec<u64> = registry.iter().map(|c| c.client_id).collect();
    ids.sort_unstable();
    for pair in ids.windows(2) {
        if pair[0] == pair[1] {
            return Err(ProtocolError::DuplicateClient(pair[0]));
        }
    }
    Ok(())
}

fn expect_reply(
    endpoint: &mut ClientEndpoint,
    params: &RunParams,
    transcript: Option<&Transcript>,
) -> Result<Envelope> {
    let frame = endpoint.channel.recv(params.reply_timeout).map_err(|e| match e {
        ProtocolError::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => {
            ProtocolError::Timeout(endpoint.client_id)
        }
        ProtocolError::Io(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
            ProtocolError::ChannelClosed(endpoint.client_id)
        }
        other => other,
    })?;
    if let Some(t) = transcript {
        t.record(Direction::Received, endpoint.client_id, &frame);
    }
    let env = decode(&frame)?;
    if env.run_id != params.run_id {
        return Err(ProtocolError::RunMismatch { got: env.run_id, expected: params.run_id });
    }
    Ok(env)
}

fn check_sender(got: u64, expected: u64) -> Result<()> {
    if got != expected {
        return Err(ProtocolError::WrongClient { got, expected });
    }
    Ok(())
}
