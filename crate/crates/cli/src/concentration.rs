//! Tail-bound diagnostic: empirical upper-tail frequency of the aggregated
//! statistic on bounded-support data versus the large-deviation bound.

use itd_core::kernel::{concentration_bound, empirical_itd2, ClientWeightVector};
use itd_core::permtest::client_from_points;
use itd_core::seed;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::runner::pool;

#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
    pub mc_sd: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub clients: usize,
    pub dim: usize,
    pub m: usize,
    pub n: usize,
    pub replications: usize,
    /// Support diameter of the unit cube, used for both sample diameters.
    pub diameter: f64,
    pub rows: Vec<TailRow>,
    pub pass: bool,
}

/// One replication: K clients of uniform-on-[0,1]^d samples on both sides,
/// aggregated squared distance under equal weights.
fn replicate(clients: usize, dim: usize, m: usize, n: usize, rep_seed: u64) -> Result<f64> {
    let mut samples = Vec::with_capacity(clients);
    for k in 0..clients as u64 {
        let mut rng = seed::rng(seed::derive(rep_seed, k));
        let mut draw = |count: usize| -> Vec<Vec<f64>> {
            (0..count)
                .map(|_| (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect())
                .collect()
        };
        let xs = draw(m);
        let ys = draw(n);
        samples.push(client_from_points(k, xs, ys)?);
    }
    let weights = ClientWeightVector::uniform(clients)?;
    Ok(empirical_itd2(&samples, &weights)?.value)
}

pub fn run_concentration_check(
    clients: usize,
    dim: usize,
    m: usize,
    n: usize,
    replications: usize,
    thresholds: &[f64],
    root_seed: u64,
    workers: usize,
) -> Result<ConcentrationReport> {
    anyhow::ensure!(replications >= 2, "need at least two replications");
    let pool = pool(workers)?;
    let values: Vec<f64> = pool.install(|| {
        (0..replications as u64)
            .into_par_iter()
            .map(|rep| replicate(clients, dim, m, n, seed::derive(root_seed, rep)))
            .collect::<Result<Vec<f64>>>()
    })?;
    let mean = values.iter().sum::<f64>() / replications as f64;
    let diameter = (dim as f64).sqrt();

    let mut rows = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let bound = concentration_bound(clients, m, n, diameter, diameter, t)?;
        let hits = values.iter().filter(|&&v| v - mean > t).count();
        let empirical = hits as f64 / replications as f64;
        let mc_sd = (empirical * (1.0 - empirical) / replications as f64).sqrt();
        rows.push(TailRow { t, empirical, bound, mc_sd, pass: empirical <= bound + 2.0 * mc_sd });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(ConcentrationReport {
        clients,
        dim,
        m,
        n,
        replications,
        diameter,
        rows,
        pass,
    })
}

pub fn render(report: &ConcentrationReport) -> String {
    let mut out = format!(
        "# concentration: K={} d={} m={} n={} reps={} diameter={:.4}\n",
        report.clients, report.dim, report.m, report.n, report.replications, report.diameter
    );
    out.push_str(&format!(
        "{:>8} {:>10} {:>10} {:>10} {:>8}\n",
        "t", "empirical", "bound", "mc-sd", "status"
    ));
    for row in &report.rows {
        out.push_str(&format!(
            "{:>8.3} {:>10.4} {:>10.4} {:>10.4} {:>8}\n",
            row.t,
            row.empirical,
            row.bound,
            row.mc_sd,
            if row.pass { "PASS" } else { "FAIL" },
        ));
    }
    out
}
