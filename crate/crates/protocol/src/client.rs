//! Client endpoint: answers one compute request with its observed squared
//! distance and a batch of permuted statistics, then terminates. Only
//! scalars derived from the local sample ever leave this module.

use std::time::Duration;

use itd_core::error::Error as CoreError;
use itd_core::kernel::ClientSample;
use itd_core::permtest::local_permuted_stats;
use itd_core::seed;
use itd_core::transport::{cost_matrix, solve_exact};

use crate::codec::{decode, encode};
use crate::error::{ProtocolError, Result};
use crate::message::{Body, Envelope};
use crate::transport::FrameChannel;

/// Both replies to one compute request, in the order they are sent.
pub fn client_handle(
    local: &ClientSample,
    run_id: u64,
    order: f64,
    permutations: usize,
    rng_seed: u64,
) -> Result<(Envelope, Envelope)> {
    if order != 2.0 {
        return Err(CoreError::InvalidOrder(order).into());
    }
    if permutations == 0 {
        return Err(CoreError::InvalidParameter("permutation count must be >= 1").into());
    }
    let cost = cost_matrix(local.xs.points(), local.ys.points(), 2.0)?;
    let w2_squared = solve_exact(&cost, local.xs.weights(), local.ys.weights())?.value;

    let mut rng = seed::rng(rng_seed);
    let batch = local_permuted_stats(local, permutations, &mut rng, rng_seed)?;

    let result = Envelope::new(run_id, Body::LocalResult { client_id: local.client_id, w2_squared });
    let stats = Envelope::new(
        run_id,
        Body::PermutedBatch { client_id: local.client_id, stats: batch.stats },
    );
    Ok((result, stats))
}

/// Serves one run on a channel: skips the cohort announcement, answers the
/// compute request, then returns. A decode or compute failure propagates
/// after the channel is dropped, which the coordinator sees as a dead client.
pub fn serve_client(
    channel: &mut dyn FrameChannel,
    local: &ClientSample,
    timeout: Duration,
) -> Result<()> {
    loop {
        let frame = channel.recv(timeout)?;
        let env = decode(&frame)?;
        match env.body {
            Body::SelectClients { .. } => continue,
            Body::ComputeRequest { order, permutations, seed } => {
                let (result, stats) =
                    client_handle(local, env.run_id, order, permutations, seed)?;
                channel.send(&encode(&result)?)?;
                channel.send(&encode(&stats)?)?;
                return Ok(());
            }
            other => {
                return Err(ProtocolError::UnexpectedMessage {
                    got: other.kind(),
                    wanted: "ComputeRequest",
                })
            }
        }
    }
}
