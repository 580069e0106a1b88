//! Type I error and power grids: seeded replications of the full permutation
//! test over synthetic model cells.

use std::time::{Duration, Instant};

use itd_core::kernel::ClientSample;
use itd_core::permtest::TestReport;
use itd_core::seed;
use itd_core::synth::{sample_model, Dist, Model, ModelConfig};
use itd_protocol::coordinator::RunParams;
use itd_protocol::sim::{run_loopback, run_socket};

use crate::error::Result;
use crate::runner::{pool, rejection_rate};
use crate::table::{ResultRow, ResultTable, TableMeta};

/// One grid cell: a model configuration evaluated at some (K, d, m, n).
#[derive(Debug, Clone, Copy)]
pub struct CellSpec {
    pub model: Model,
    pub dist: Dist,
    pub k: usize,
    pub d: usize,
    pub m: usize,
    pub n: usize,
    /// Standard deviation of the per-client mean/variance shifts.
    pub shift_sd: f64,
}

/// Per-replication permutation-test budget.
#[derive(Debug, Clone, Copy)]
pub struct TestBudget {
    pub local_permutations: usize,
    pub aggregate_rounds: usize,
    pub alpha: f64,
}

/// Desk-scale defaults: the full design uses B_k=100, B=1000.
impl Default for TestBudget {
    fn default() -> Self {
        TestBudget { local_permutations: 50, aggregate_rounds: 500, alpha: 0.05 }
    }
}

/// How each replication's coordinator/client exchange is carried.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    Loopback,
    Socket,
}

/// One full distributed test over the given clients via the chosen transport.
pub fn execute_test(
    clients: Vec<ClientSample>,
    budget: &TestBudget,
    root_seed: u64,
    transport: Transport,
) -> Result<TestReport> {
    let params = RunParams {
        run_id: root_seed,
        select: clients.len(),
        order: 2.0,
        local_permutations: budget.local_permutations,
        aggregate_rounds: budget.aggregate_rounds,
        alpha: budget.alpha,
        root_seed,
        reply_timeout: Duration::from_secs(30),
    };
    Ok(match transport {
        Transport::Loopback => run_loopback(&params, clients, None)?,
        Transport::Socket => run_socket(&params, clients, None)?,
    })
}

pub fn model_name(model: Model) -> &'static str {
    match model {
        Model::A => "A",
        Model::B => "B",
        Model::C => "C",
        Model::D => "D",
    }
}

pub fn dist_name(dist: Dist) -> &'static str {
    match dist {
        Dist::Normal => "normal",
        Dist::LogNormal => "lognormal",
        Dist::T5 => "t5",
    }
}

/// One replication: fresh model parameters and samples, then the full test.
fn replicate(
    cell: &CellSpec,
    budget: &TestBudget,
    transport: Transport,
    rep_seed: u64,
) -> Result<bool> {
    let clients = sample_model(&ModelConfig {
        model: cell.model,
        dist: cell.dist,
        clients: cell.k,
        dim: cell.d,
        m: cell.m,
        n: cell.n,
        shift_sd: cell.shift_sd,
        seed: seed::derive(rep_seed, 0),
    })?;
    let report = execute_test(clients, budget, seed::derive(rep_seed, 1), transport)?;
    Ok(report.reject)
}

/// Rejection frequency per cell over seeded replications.
pub fn run_grid(
    command: &str,
    cells: &[CellSpec],
    budget: &TestBudget,
    transport: Transport,
    replications: usize,
    root_seed: u64,
    workers: usize,
) -> Result<ResultTable> {
    anyhow::ensure!(replications >= 1, "replications must be >= 1");
    let pool = pool(workers)?;
    let mut table = ResultTable::new(TableMeta::new(command, root_seed));
    for (index, cell) in cells.iter().enumerate() {
        let start = Instant::now();
        let cell_seed = seed::derive(root_seed, index as u64);
        let rate = rejection_rate(&pool, replications, cell_seed, |rep_seed| {
            replicate(cell, budget, transport, rep_seed)
        })?;
        table.push(
            ResultRow {
                model: model_name(cell.model).to_string(),
                dist: dist_name(cell.dist).to_string(),
                k: cell.k,
                d: cell.d,
                m: cell.m,
                n: cell.n,
                replications,
                rejection_rate: rate,
            },
            start.elapsed().as_secs_f64(),
        );
    }
    Ok(table)
}

/// Type I error grid; every cell must use the null model.
pub fn run_type1(
    cells: &[CellSpec],
    budget: &TestBudget,
    transport: Transport,
    replications: usize,
    root_seed: u64,
    workers: usize,
) -> Result<ResultTable> {
    anyhow::ensure!(
        cells.iter().all(|c| c.model == Model::A),
        "type1 cells must use the null model"
    );
    run_grid("type1", cells, budget, transport, replications, root_seed, workers)
}

/// Power grid; every cell must use an alternative model.
pub fn run_power(
    cells: &[CellSpec],
    budget: &TestBudget,
    transport: Transport,
    replications: usize,
    root_seed: u64,
    workers: usize,
) -> Result<ResultTable> {
    anyhow::ensure!(
        cells.iter().all(|c| c.model != Model::A),
        "power cells must use a shift model"
    );
    run_grid("power", cells, budget, transport, replications, root_seed, workers)
}
