//! Distributed permutation test machinery: local permuted statistics on the
//! client side, and critical value / decision logic on the coordinator side.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    aggregate_itd2, client_weights, kahan_sum, ClientDistance, ClientSample, ClientWeightVector,
    ITDStatistic,
};
use crate::seed;
use crate::transport::{cost_matrix, solve_exact, PointCloud};

/// One client's batch of permuted local statistics T̂^{π,k}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationBatch {
    pub client_id: u64,
    /// W2² of each permuted first-m / last-n split of the pooled samples.
    pub stats: Vec<f64>,
    pub seed: u64,
}

/// The coordinator's B aggregated permuted ITD² values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutedITDSample {
    pub values: Vec<f64>,
}

/// Per-client batch summary carried in the report instead of the raw batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub client_id: u64,
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl BatchSummary {
    pub fn of(batch: &PermutationBatch) -> Self {
        let count = batch.stats.len();
        let mean = kahan_sum(batch.stats.iter().cloned()) / count as f64;
        let min = batch.stats.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = batch.stats.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        BatchSummary { client_id: batch.client_id, count, mean, min, max }
    }
}

/// Echo of the run parameters, for reproducibility audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub clients: usize,
    pub m_sizes: Vec<usize>,
    pub n_sizes: Vec<usize>,
    pub local_permutations: usize,
    pub aggregate_rounds: usize,
    pub alpha: f64,
    pub root_seed: u64,
}

/// Full outcome of one distributed permutation test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub observed: ITDStatistic,
    pub weights: ClientWeightVector,
    pub critical_value: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub per_client_batches: Vec<BatchSummary>,
    pub config: RunConfig,
}

fn w2_squared(xs: &[Vec<f64>], wx: &[f64], ys: &[Vec<f64>], wy: &[f64]) -> Result<f64> {
    let cost = cost_matrix(xs, ys, 2.0)?;
    Ok(solve_exact(&cost, wx, wy)?.value)
}

/// Steps 3–6: B_k independent uniform permutations of the pooled m+n points;
/// each statistic is W2² between the first m and the remaining n entries.
pub fn local_permuted_stats(
    client: &ClientSample,
    permutations: usize,
    rng: &mut impl Rng,
    rng_seed: u64,
) -> Result<PermutationBatch> {
    if permutations == 0 {
        return Err(Error::InvalidParameter("B_k must be >= 1"));
    }
    let m = client.xs.len();
    let n = client.ys.len();
    let pooled: Vec<&Vec<f64>> = client
        .xs
        .points()
        .iter()
        .chain(client.ys.points().iter())
        .collect();
    let wx = vec![1.0 / m as f64; m];
    let wy = vec![1.0 / n as f64; n];

    let mut indices: Vec<usize> = (0..m + n).collect();
    let mut stats = Vec::with_capacity(permutations);
    for _ in 0..permutations {
        indices.shuffle(rng);
        let xs: Vec<Vec<f64>> = indices[..m].iter().map(|&i| pooled[i].clone()).collect();
        let ys: Vec<Vec<f64>> = indices[m..].iter().map(|&i| pooled[i].clone()).collect();
        stats.push(w2_squared(&xs, &wx, &ys, &wy)?);
    }
    Ok(PermutationBatch { client_id: client.client_id, stats, seed: rng_seed })
}

/// Step 7: each aggregated value draws one statistic per client batch,
/// with replacement across the B rounds.
pub fn aggregate_permuted_itd(
    batches: &[PermutationBatch],
    weights: &ClientWeightVector,
    rounds: usize,
    rng: &mut impl Rng,
) -> Result<PermutedITDSample> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("B must be >= 1"));
    }
    if batches.len() != weights.len() {
        return Err(Error::SizeMismatch("batches and weights differ in length"));
    }
    if batches.iter().any(|b| b.stats.is_empty()) {
        return Err(Error::EmptyInput("permutation batch"));
    }
    let mut values = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let value = kahan_sum(batches.iter().zip(weights.as_slice()).map(|(batch, w)| {
            let pick = rng.gen_range(0..batch.stats.len());
            w * batch.stats[pick]
        }));
        values.push(value);
    }
    Ok(PermutedITDSample { values })
}

/// The smallest threshold under-cut by at least a (1−α)-fraction of the
/// permuted values: c = min{z : (1/B) Σ 1(val < z) ≥ 1−α}.
///
/// When no sample value satisfies the condition (ties at the top, or all
/// values equal) the feasible set is the open interval above the maximum, so
/// the value just above the maximum is returned; together with the
/// ≥-rejection rule this keeps the degenerate case conservative.
pub fn critical_value(sample: &PermutedITDSample, alpha: f64) -> Result<f64> {
    if sample.values.is_empty() {
        return Err(Error::EmptyInput("permuted sample"));
    }
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParameter("alpha must be in (0, 1)"));
    }
    let b = sample.values.len();
    let mut sorted = sample.values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let needed = ((1.0 - alpha) * b as f64).ceil() as usize;

    // sorted[i] has exactly `strictly_below` values strictly less than it.
    let mut strictly_below = 0usize;
    for i in 0..b {
        if i > 0 && sorted[i] > sorted[i - 1] {
            strictly_below = i;
        }
        if strictly_below >= needed {
            return Ok(sorted[i]);
        }
    }
    Ok(sorted[b - 1].next_up())
}

/// Standard permutation p-value companion: (1 + #{val ≥ observed}) / (B + 1).
pub fn p_value(sample: &PermutedITDSample, observed: f64) -> Result<f64> {
    if sample.values.is_empty() {
        return Err(Error::EmptyInput("permuted sample"));
    }
    let count = sample.values.iter().filter(|&&v| v >= observed).count();
    Ok((1 + count) as f64 / (sample.values.len() + 1) as f64)
}

/// Step 9: reject iff the observed statistic reaches the critical value.
pub fn decide(
    observed: &ITDStatistic,
    weights: &ClientWeightVector,
    sample: &PermutedITDSample,
    batches: &[PermutationBatch],
    alpha: f64,
    config: RunConfig,
) -> Result<TestReport> {
    let critical = critical_value(sample, alpha)?;
    let p = p_value(sample, observed.value)?;
    Ok(TestReport {
        observed: observed.clone(),
        weights: weights.clone(),
        critical_value: critical,
        p_value: p,
        alpha,
        reject: observed.value >= critical,
        per_client_batches: batches.iter().map(BatchSummary::of).collect(),
        config,
    })
}

/// Parameters for a full in-process test run.
#[derive(Debug, Clone, Copy)]
pub struct TestParams {
    pub local_permutations: usize,
    pub aggregate_rounds: usize,
    pub alpha: f64,
    pub root_seed: u64,
}

impl Default for TestParams {
    fn default() -> Self {
        // B_k and B defaults follow the simulation design; desk-scale
        // harness runs override them.
        TestParams { local_permutations: 100, aggregate_rounds: 1000, alpha: 0.05, root_seed: 0 }
    }
}

/// Runs the whole permutation test in one process. The coordinator/client
/// protocol produces reports identical to this path for the same seeds.
pub fn run_test(clients: &[ClientSample], params: &TestParams) -> Result<TestReport> {
    if clients.is_empty() {
        return Err(Error::EmptyInput("clients"));
    }
    let m_sizes: Vec<usize> = clients.iter().map(|c| c.xs.len()).collect();
    let n_sizes: Vec<usize> = clients.iter().map(|c| c.ys.len()).collect();
    let weights = client_weights(&m_sizes, &n_sizes)?;

    let mut per_client = Vec::with_capacity(clients.len());
    let mut batches = Vec::with_capacity(clients.len());
    for client in clients {
        let w2sq = w2_squared(
            client.xs.points(),
            client.xs.weights(),
            client.ys.points(),
            client.ys.weights(),
        )?;
        per_client.push(ClientDistance { client_id: client.client_id, w2_squared: w2sq });

        let client_seed = seed::derive(params.root_seed, client.client_id);
        let mut rng = seed::rng(client_seed);
        batches.push(local_permuted_stats(
            client,
            params.local_permutations,
            &mut rng,
            client_seed,
        )?);
    }
    let observed = aggregate_itd2(per_client, &weights);

    let mut coord_rng = seed::rng(seed::derive(params.root_seed, seed::COORDINATOR_STREAM));
    let sample =
        aggregate_permuted_itd(&batches, &weights, params.aggregate_rounds, &mut coord_rng)?;

    let config = RunConfig {
        clients: clients.len(),
        m_sizes,
        n_sizes,
        local_permutations: params.local_permutations,
        aggregate_rounds: params.aggregate_rounds,
        alpha: params.alpha,
        root_seed: params.root_seed,
    };
    decide(&observed, &weights, &sample, &batches, params.alpha, config)
}

/// Builds a `ClientSample` from raw point lists with uniform weights.
pub fn client_from_points(
    client_id: u64,
    xs: Vec<Vec<f64>>,
    ys: Vec<Vec<f64>>,
) -> Result<ClientSample> {
    ClientSample::new(client_id, PointCloud::uniform(xs)?, PointCloud::uniform(ys)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn sample(values: Vec<f64>) -> PermutedITDSample {
        PermutedITDSample { values }
    }

    #[test]
    fn critical_value_quartile_example() {
        let s = sample(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(critical_value(&s, 0.25).unwrap(), 4.0);
    }

    #[test]
    fn critical_value_hundred_example() {
        let s = sample((1..=100).map(f64::from).collect());
        assert_eq!(critical_value(&s, 0.05).unwrap(), 96.0);
    }

    #[test]
    fn critical_value_top_ties_land_just_above_max() {
        // No sample value has enough mass strictly below it, so the feasible
        // thresholds are the open interval above the max.
        let s = sample(vec![5.0; 10]);
        assert_eq!(critical_value(&s, 0.05).unwrap(), 5.0_f64.next_up());
        let s = sample(vec![1.0, 2.0, 9.0, 9.0, 9.0, 9.0]);
        assert_eq!(critical_value(&s, 0.05).unwrap(), 9.0_f64.next_up());
    }

    #[test]
    fn degenerate_all_zero_run_fails_to_reject() {
        // Every point identical: observed and every permuted statistic are 0.
        let pts = vec![vec![0.0], vec![0.0]];
        let clients = vec![client_from_points(0, pts.clone(), pts).unwrap()];
        let params = TestParams {
            local_permutations: 10,
            aggregate_rounds: 50,
            alpha: 0.05,
            root_seed: 1,
        };
        let report = run_test(&clients, &params).unwrap();
        assert_eq!(report.observed.value, 0.0);
        assert!(!report.reject);
        assert_eq!(report.p_value, 1.0);
    }

    #[test]
    fn critical_value_order_invariant() {
        let s1 = sample(vec![3.0, 1.0, 4.0, 2.0]);
        let s2 = sample(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(
            critical_value(&s1, 0.25).unwrap(),
            critical_value(&s2, 0.25).unwrap()
        );
    }

    #[test]
    fn critical_value_rejects_bad_alpha() {
        let s = sample(vec![1.0]);
        assert!(critical_value(&s, 0.0).is_err());
        assert!(critical_value(&s, 1.0).is_err());
    }

    #[test]
    fn p_value_example() {
        let s = sample(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(p_value(&s, 2.5).unwrap(), 3.0 / 5.0);
        assert_eq!(p_value(&s, 0.0).unwrap(), 1.0);
        assert_eq!(p_value(&s, 5.0).unwrap(), 1.0 / 5.0);
    }

    #[test]
    fn local_stats_are_nonnegative_and_seeded() {
        let client = client_from_points(
            0,
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![2.0, 2.0], vec![3.0, 2.0], vec![2.0, 3.0]],
        )
        .unwrap();
        let s = seed::derive(42, 0);
        let mut rng1 = seed::rng(s);
        let mut rng2 = seed::rng(s);
        let b1 = local_permuted_stats(&client, 20, &mut rng1, s).unwrap();
        let b2 = local_permuted_stats(&client, 20, &mut rng2, s).unwrap();
        assert_eq!(b1, b2);
        assert_eq!(b1.stats.len(), 20);
        assert!(b1.stats.iter().all(|v| *v >= 0.0 && v.is_finite()));
    }

    #[test]
    fn permutations_are_uniform_over_splits() {
        // m=n=2: four pooled points, C(4,2)=6 equally likely first-half sets.
        let client = client_from_points(
            0,
            vec![vec![0.0], vec![1.0]],
            vec![vec![10.0], vec![100.0]],
        )
        .unwrap();
        // Enumerate the 6 possible first-half index sets, each with
        // probability 1/6, and group them by the statistic value they yield.
        let pooled: Vec<Vec<f64>> = client
            .xs
            .points()
            .iter()
            .chain(client.ys.points())
            .cloned()
            .collect();
        let w = vec![0.5, 0.5];
        let mut expected: HashMap<u64, f64> = HashMap::new();
        for a in 0..4 {
            for b in (a + 1)..4 {
                let xs = vec![pooled[a].clone(), pooled[b].clone()];
                let ys: Vec<Vec<f64>> = (0..4)
                    .filter(|i| *i != a && *i != b)
                    .map(|i| pooled[i].clone())
                    .collect();
                let v = w2_squared(&xs, &w, &ys, &w).unwrap();
                *expected.entry(v.to_bits()).or_default() += 1.0 / 6.0;
            }
        }

        let trials = 6000;
        let mut rng = seed::rng(7);
        let batch = local_permuted_stats(&client, trials, &mut rng, 7).unwrap();
        let mut counts: HashMap<u64, usize> = HashMap::new();
        for v in &batch.stats {
            *counts.entry(v.to_bits()).or_default() += 1;
        }
        assert_eq!(counts.len(), expected.len());
        for (bits, c) in counts {
            let freq = c as f64 / trials as f64;
            let want = expected[&bits];
            assert!((freq - want).abs() < 0.03, "split frequency {freq}, expected {want}");
        }
    }

    #[test]
    fn aggregate_constant_batches_give_constant_values() {
        let batches = vec![
            PermutationBatch { client_id: 0, stats: vec![2.0; 5], seed: 1 },
            PermutationBatch { client_id: 1, stats: vec![4.0; 5], seed: 2 },
        ];
        let w = ClientWeightVector::new(vec![0.25, 0.75]).unwrap();
        let mut rng = seed::rng(0);
        let s = aggregate_permuted_itd(&batches, &w, 50, &mut rng).unwrap();
        assert_eq!(s.values.len(), 50);
        for v in s.values {
            assert!((v - (0.25 * 2.0 + 0.75 * 4.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregate_draws_cover_each_batch() {
        let batches = vec![PermutationBatch {
            client_id: 0,
            stats: vec![1.0, 2.0, 3.0],
            seed: 0,
        }];
        let w = ClientWeightVector::uniform(1).unwrap();
        let mut rng = seed::rng(3);
        let s = aggregate_permuted_itd(&batches, &w, 300, &mut rng).unwrap();
        let distinct: std::collections::HashSet<u64> =
            s.values.iter().map(|v| v.to_bits()).collect();
        assert_eq!(distinct.len(), 3);
    }

    #[test]
    fn run_test_is_deterministic_in_root_seed() {
        let clients: Vec<ClientSample> = (0..3)
            .map(|k| {
                let mut rng = seed::rng(seed::derive(11, k));
                let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
                    (0..6)
                        .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                        .collect::<Vec<_>>()
                };
                client_from_points(k, draw(&mut rng), draw(&mut rng)).unwrap()
            })
            .collect();
        let params = TestParams {
            local_permutations: 25,
            aggregate_rounds: 80,
            alpha: 0.1,
            root_seed: 99,
        };
        let r1 = run_test(&clients, &params).unwrap();
        let r2 = run_test(&clients, &params).unwrap();
        assert_eq!(r1, r2);
        let r3 = run_test(&clients, &TestParams { root_seed: 100, ..params }).unwrap();
        assert_eq!(r1.observed, r3.observed); // data unchanged
        assert_ne!(r1.per_client_batches, r3.per_client_batches);
    }

    #[test]
    fn obvious_shift_is_rejected_and_null_is_usually_not() {
        let mut rng = seed::rng(21);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng, shift: f64| -> Vec<Vec<f64>> {
            (0..20)
                .map(|_| vec![rng.gen_range(-1.0..1.0) + shift])
                .collect()
        };
        let shifted: Vec<ClientSample> = (0..2)
            .map(|k| {
                client_from_points(k, draw(&mut rng, 0.0), draw(&mut rng, 5.0)).unwrap()
            })
            .collect();
        let params = TestParams {
            local_permutations: 50,
            aggregate_rounds: 200,
            alpha: 0.05,
            root_seed: 4,
        };
        let report = run_test(&shifted, &params).unwrap();
        assert!(report.reject);
        assert!(report.p_value <= 0.05);

        let null: Vec<ClientSample> = (0..2)
            .map(|k| {
                client_from_points(k, draw(&mut rng, 0.0), draw(&mut rng, 0.0)).unwrap()
            })
            .collect();
        let report = run_test(&null, &params).unwrap();
        assert!(report.p_value > 0.05);
    }
}
