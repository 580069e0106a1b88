//! Parallel replication driver. Every replication gets its own derived seed,
//! so results are identical for any worker count or schedule.

use itd_core::seed;
use rayon::prelude::*;

use crate::error::Result;

/// Builds a worker pool; 0 means one worker per logical CPU.
pub fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

/// Fraction of replications for which `rejects` returns true. The closure
/// receives the replication's derived seed, never a shared RNG.
pub fn rejection_rate<F>(
    pool: &rayon::ThreadPool,
    replications: usize,
    cell_seed: u64,
    rejects: F,
) -> Result<f64>
where
    F: Fn(u64) -> Result<bool> + Sync,
{
    let outcomes: Vec<Result<bool>> = pool.install(|| {
        (0..replications as u64)
            .into_par_iter()
            .map(|rep| rejects(seed::derive(cell_seed, rep)))
            .collect()
    });
    let mut hits = 0usize;
    for outcome in outcomes {
        if outcome? {
            hits += 1;
        }
    }
    Ok(hits as f64 / replications as f64)
}
