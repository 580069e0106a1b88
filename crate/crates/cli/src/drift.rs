//! Mixture-drift experiment: compares the aggregated test against each
//! client testing alone, under partial drift of every client's second sample
//! toward the global mixture.

use itd_core::seed;
use itd_core::synth::{sample_drift, DriftConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::experiments::{execute_test, TestBudget, Transport};
use crate::runner::pool;

#[derive(Debug, Clone, Serialize)]
pub struct DriftReport {
    pub clients: usize,
    pub epsilon: f64,
    pub sample_size: usize,
    pub replications: usize,
    pub itd_power: f64,
    pub per_client_power: Vec<f64>,
}

impl DriftReport {
    pub fn max_client_power(&self) -> f64 {
        self.per_client_power.iter().cloned().fold(0.0, f64::max)
    }
}

/// One replication: rejection flags for the joint test and for each client
/// testing its own pair in isolation.
fn replicate(
    clients: usize,
    epsilon: f64,
    sample_size: usize,
    budget: &TestBudget,
    transport: Transport,
    rep_seed: u64,
) -> Result<(bool, Vec<bool>)> {
    let cfg = DriftConfig::circle(clients, epsilon, sample_size, seed::derive(rep_seed, 0));
    let samples = sample_drift(&cfg)?;
    let joint =
        execute_test(samples.clone(), budget, seed::derive(rep_seed, 1), transport)?.reject;
    let mut solo = Vec::with_capacity(clients);
    for (k, sample) in samples.into_iter().enumerate() {
        // Client 0 alone reuses the joint run's seed, so a one-client
        // experiment reduces exactly to the single-client column.
        let report =
            execute_test(vec![sample], budget, seed::derive(rep_seed, 1 + k as u64), transport)?;
        solo.push(report.reject);
    }
    Ok((joint, solo))
}

pub fn run_drift(
    clients: usize,
    epsilon: f64,
    sample_size: usize,
    budget: &TestBudget,
    transport: Transport,
    replications: usize,
    root_seed: u64,
    workers: usize,
) -> Result<DriftReport> {
    anyhow::ensure!(replications >= 1, "replications must be >= 1");
    let pool = pool(workers)?;
    let outcomes: Vec<(bool, Vec<bool>)> = pool.install(|| {
        (0..replications as u64)
            .into_par_iter()
            .map(|rep| {
                replicate(
                    clients,
                    epsilon,
                    sample_size,
                    budget,
                    transport,
                    seed::derive(root_seed, rep),
                )
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let itd_power =
        outcomes.iter().filter(|(joint, _)| *joint).count() as f64 / replications as f64;
    let per_client_power = (0..clients)
        .map(|k| {
            outcomes.iter().filter(|(_, solo)| solo[k]).count() as f64 / replications as f64
        })
        .collect();
    Ok(DriftReport {
        clients,
        epsilon,
        sample_size,
        replications,
        itd_power,
        per_client_power,
    })
}

pub fn render(report: &DriftReport) -> String {
    let mut out = format!(
        "# drift: K={} epsilon={} m=n={} reps={}\n",
        report.clients, report.epsilon, report.sample_size, report.replications
    );
    out.push_str(&format!("{:<10} {:>10}\n", "column", "power"));
    for (k, power) in report.per_client_power.iter().enumerate() {
        out.push_str(&format!("{:<10} {:>10.4}\n", format!("client {k}"), power));
    }
    out.push_str(&format!("{:<10} {:>10.4}\n", "itd", report.itd_power));
    out
}
