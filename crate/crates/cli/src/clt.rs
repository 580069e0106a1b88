//! Central-limit diagnostic for the aggregated statistic, using the
//! closed-form squared W2 between 1-D Gaussians so no transport solves are
//! needed: W2²(N(a,s²), N(b,t²)) = (a−b)² + (s−t)².

use itd_core::kernel::{clt_variance, ClientWeightVector};
use itd_core::seed;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::runner::pool;
use crate::stats::{ks_to_standard_normal, mean_var};

/// Scale of the per-client mean and sd perturbations.
const SHIFT_SD: f64 = 0.25;

#[derive(Debug, Clone, Serialize)]
pub struct CltReport {
    pub clients: usize,
    pub replications: usize,
    pub ks_distance: f64,
    /// Within-replication variance estimate over the analytic one.
    pub variance_ratio: f64,
    pub pass: bool,
    pub note: Option<String>,
}

/// Analytic per-client squared distance: the client's two Gaussians share a
/// base (u, r) and differ by independent N(0, SHIFT_SD²) mean and sd shifts.
fn client_value(rng: &mut impl Rng) -> f64 {
    let _base_mean: f64 = rng.gen_range(-1.0..1.0);
    let base_sd: f64 = rng.gen_range(0.8..1.2);
    let mean_shift = SHIFT_SD * gaussian(rng);
    let sd_shift = SHIFT_SD * gaussian(rng);
    let shifted_sd = (base_sd + sd_shift).max(0.0) - base_sd;
    mean_shift * mean_shift + shifted_sd * shifted_sd
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller; one draw per call keeps the stream layout simple.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// E[v] and Var(v) for `client_value`: each squared shift has mean s² and
/// variance 2s⁴ (the sd clamp at 0 is a >4σ event, ignored).
const VALUE_MEAN: f64 = 2.0 * SHIFT_SD * SHIFT_SD;
const VALUE_VAR: f64 = 4.0 * SHIFT_SD * SHIFT_SD * SHIFT_SD * SHIFT_SD;

/// One standardized replication: √K (mean_k v_k − E[v]) / √Var(v), plus the
/// ratio of the plug-in variance estimate to the analytic variance.
fn replicate(clients: usize, rep_seed: u64) -> (f64, f64) {
    let mut rng = seed::rng(rep_seed);
    let values: Vec<f64> = (0..clients).map(|_| client_value(&mut rng)).collect();
    let mean = values.iter().sum::<f64>() / clients as f64;
    let standardized = (clients as f64).sqrt() * (mean - VALUE_MEAN) / VALUE_VAR.sqrt();
    let weights = ClientWeightVector::uniform(clients).expect("positive client count");
    let estimate = clt_variance(&values, &weights, mean).expect("matching lengths");
    // clt_variance weights by 1/K; undo that to estimate Var(v).
    (standardized, estimate * clients as f64 / (clients as f64 - 1.0).max(1.0) / VALUE_VAR)
}

pub fn run_clt_check(
    client_counts: &[usize],
    replications: usize,
    root_seed: u64,
    workers: usize,
) -> Result<Vec<CltReport>> {
    anyhow::ensure!(replications >= 2, "need at least two replications");
    let pool = pool(workers)?;
    let mut reports = Vec::with_capacity(client_counts.len());
    for (index, &clients) in client_counts.iter().enumerate() {
        if clients < 2 {
            reports.push(CltReport {
                clients,
                replications: 0,
                ks_distance: f64::NAN,
                variance_ratio: f64::NAN,
                pass: true,
                note: Some(
                    "skipped: the aggregate over a single client has no limit to check"
                        .to_string(),
                ),
            });
            continue;
        }
        let cell_seed = seed::derive(root_seed, index as u64);
        let outcomes: Vec<(f64, f64)> = pool.install(|| {
            (0..replications as u64)
                .into_par_iter()
                .map(|rep| replicate(clients, seed::derive(cell_seed, rep)))
                .collect()
        });
        let mut standardized: Vec<f64> = outcomes.iter().map(|(s, _)| *s).collect();
        let ratios: Vec<f64> = outcomes.iter().map(|(_, r)| *r).collect();
        let ks = ks_to_standard_normal(&mut standardized);
        let (ratio_mean, _) = mean_var(&ratios);
        let pass = ks <= 0.10 && (0.7..=1.3).contains(&ratio_mean);
        reports.push(CltReport {
            clients,
            replications,
            ks_distance: ks,
            variance_ratio: ratio_mean,
            pass,
            note: None,
        });
    }
    Ok(reports)
}

pub fn render(reports: &[CltReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>6} {:>6} {:>10} {:>10} {:>8}\n",
        "K", "reps", "KS", "var-ratio", "status"
    ));
    for r in reports {
        if let Some(note) = &r.note {
            out.push_str(&format!("{:>6} {note}\n", r.clients));
        } else {
            out.push_str(&format!(
                "{:>6} {:>6} {:>10.4} {:>10.4} {:>8}\n",
                r.clients,
                r.replications,
                r.ks_distance,
                r.variance_ratio,
                if r.pass { "PASS" } else { "FAIL" },
            ));
        }
    }
    out
}
