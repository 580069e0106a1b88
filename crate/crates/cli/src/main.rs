use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use itd_core::synth::{Dist, Model};
use itd_protocol::coordinator::RunParams;

use itd_cli::clt::{render as render_clt, run_clt_check};
use itd_cli::concentration::{render as render_concentration, run_concentration_check};
use itd_cli::drift::{render as render_drift, run_drift};
use itd_cli::error::Result;
use itd_cli::experiments::{run_power, run_type1, CellSpec, TestBudget, Transport};
use itd_cli::net::{coordinate, serve_client_csv, ClientSpec};
use itd_cli::table::ResultTable;

/// Distributed two-sample testing via integrated transportation distances.
#[derive(Parser)]
#[command(name = "itd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Null-model rejection rates (level check).
    Type1(GridArgs),
    /// Shift-model rejection rates.
    Power(GridArgs),
    /// Asymptotic-normality diagnostic for the aggregated statistic.
    Clt(CltArgs),
    /// Tail-bound diagnostic on bounded-support data.
    Concentration(ConcentrationArgs),
    /// Mixture-drift comparison: aggregated test vs each client alone.
    Drift(DriftArgs),
    /// Serve one client's CSV sample on a socket.
    ServeClient(ServeArgs),
    /// Coordinate a test across remote socket clients.
    Coordinate(CoordinateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DistArg {
    Normal,
    Lognormal,
    T5,
}

impl From<DistArg> for Dist {
    fn from(d: DistArg) -> Dist {
        match d {
            DistArg::Normal => Dist::Normal,
            DistArg::Lognormal => Dist::LogNormal,
            DistArg::T5 => Dist::T5,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    A,
    B,
    C,
    D,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Model {
        match m {
            ModelArg::A => Model::A,
            ModelArg::B => Model::B,
            ModelArg::C => Model::C,
            ModelArg::D => Model::D,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TransportArg {
    Loopback,
    Socket,
}

impl From<TransportArg> for Transport {
    fn from(t: TransportArg) -> Transport {
        match t {
            TransportArg::Loopback => Transport::Loopback,
            TransportArg::Socket => Transport::Socket,
        }
    }
}

/// Flags shared by the experiment subcommands; every flag has an ITD_*
/// environment variable mirror.
#[derive(Args)]
struct CommonArgs {
    #[arg(long, env = "ITD_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "ITD_ALPHA", default_value_t = 0.05)]
    alpha: f64,
    /// Local sample size per client (first sample).
    #[arg(long, env = "ITD_M", default_value_t = 100)]
    m: usize,
    /// Local sample size per client (second sample).
    #[arg(long, env = "ITD_N", default_value_t = 100)]
    n: usize,
    /// Permuted statistics per client.
    #[arg(long = "Bk", env = "ITD_BK", default_value_t = 50)]
    bk: usize,
    /// Aggregated permuted statistics at the coordinator.
    #[arg(long = "B", env = "ITD_B", default_value_t = 500)]
    b: usize,
    #[arg(long, env = "ITD_REPS", default_value_t = 200)]
    reps: usize,
    #[arg(long, env = "ITD_TRANSPORT", value_enum, default_value_t = TransportArg::Loopback)]
    transport: TransportArg,
    /// Worker threads; 0 uses all logical CPUs.
    #[arg(long, env = "ITD_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Base path for output files (writes <out>.csv and <out>.json).
    #[arg(long, env = "ITD_OUT")]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn budget(&self) -> TestBudget {
        TestBudget {
            local_permutations: self.bk,
            aggregate_rounds: self.b,
            alpha: self.alpha,
        }
    }
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of clients; omit (with --d) to run the default (K, d) grid.
    #[arg(long = "K", env = "ITD_K")]
    k: Option<usize>,
    /// Data dimension.
    #[arg(long = "d", env = "ITD_D")]
    d: Option<usize>,
    #[arg(long, env = "ITD_DIST", value_enum, default_value_t = DistArg::Normal)]
    dist: DistArg,
    /// Shift model (power only; type1 always runs the null model).
    #[arg(long, env = "ITD_MODEL", value_enum, default_value_t = ModelArg::C)]
    model: ModelArg,
    /// Standard deviation of per-client mean/variance shifts.
    #[arg(long, env = "ITD_SHIFT_SD", default_value_t = 0.25)]
    shift_sd: f64,
    /// Fail (exit nonzero) if any rejection rate is below this.
    #[arg(long)]
    gate_min: Option<f64>,
    /// Fail (exit nonzero) if any rejection rate is above this.
    #[arg(long)]
    gate_max: Option<f64>,
}

impl GridArgs {
    fn cells(&self, model: Model) -> Vec<CellSpec> {
        let grid: Vec<(usize, usize)> = match (self.k, self.d) {
            (Some(k), Some(d)) => vec![(k, d)],
            (Some(k), None) => vec![(k, 2)],
            (None, Some(d)) => vec![(5, d)],
            (None, None) => vec![(1, 2), (5, 2), (10, 10)],
        };
        grid.into_iter()
            .map(|(k, d)| CellSpec {
                model,
                dist: self.dist.into(),
                k,
                d,
                m: self.common.m,
                n: self.common.n,
                shift_sd: self.shift_sd,
            })
            .collect()
    }

    fn gate(&self, table: &ResultTable) -> bool {
        table.rows.iter().all(|row| {
            self.gate_min.map_or(true, |lo| row.rejection_rate >= lo)
                && self.gate_max.map_or(true, |hi| row.rejection_rate <= hi)
        })
    }
}

#[derive(Args)]
struct CltArgs {
    #[arg(long, env = "ITD_SEED", default_value_t = 0)]
    seed: u64,
    /// Client counts to check (repeatable).
    #[arg(long = "K", env = "ITD_K", value_delimiter = ',', default_values_t = [500usize])]
    k: Vec<usize>,
    #[arg(long, env = "ITD_REPS", default_value_t = 500)]
    reps: usize,
    #[arg(long, env = "ITD_WORKERS", default_value_t = 0)]
    workers: usize,
    #[arg(long, env = "ITD_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConcentrationArgs {
    #[arg(long, env = "ITD_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long = "K", env = "ITD_K", default_value_t = 5)]
    k: usize,
    #[arg(long = "d", env = "ITD_D", default_value_t = 2)]
    d: usize,
    #[arg(long, env = "ITD_M", default_value_t = 100)]
    m: usize,
    #[arg(long, env = "ITD_N", default_value_t = 100)]
    n: usize,
    #[arg(long, env = "ITD_REPS", default_value_t = 1000)]
    reps: usize,
    /// Tail thresholds t (repeatable).
    #[arg(long = "t", value_delimiter = ',', default_values_t = [0.05, 0.1, 0.2])]
    thresholds: Vec<f64>,
    #[arg(long, env = "ITD_WORKERS", default_value_t = 0)]
    workers: usize,
    #[arg(long, env = "ITD_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DriftArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long = "K", env = "ITD_K", default_value_t = 10)]
    k: usize,
    /// Probability that a drifted draw stays in the client's own component.
    #[arg(long, env = "ITD_EPSILON", default_value_t = 0.8)]
    epsilon: f64,
    /// Fail (exit nonzero) unless ITD power >= max per-client power.
    #[arg(long)]
    gate: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "ITD_LISTEN", default_value = "127.0.0.1:9400")]
    listen: String,
    #[arg(long, env = "ITD_CLIENT_ID", default_value_t = 0)]
    client_id: u64,
    /// CSV with the first sample, one point per row, header row included.
    #[arg(long)]
    xs: PathBuf,
    /// CSV with the second sample.
    #[arg(long)]
    ys: PathBuf,
    #[arg(long, default_value_t = 30)]
    timeout_secs: u64,
    /// Exit after this many runs; 0 serves forever.
    #[arg(long, default_value_t = 0)]
    max_runs: usize,
}

#[derive(Args)]
struct CoordinateArgs {
    /// Remote client as id:host:port:m:n (repeatable).
    #[arg(long = "client", required = true)]
    clients: Vec<ClientSpec>,
    #[arg(long, env = "ITD_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "ITD_ALPHA", default_value_t = 0.05)]
    alpha: f64,
    #[arg(long = "Bk", env = "ITD_BK", default_value_t = 50)]
    bk: usize,
    #[arg(long = "B", env = "ITD_B", default_value_t = 500)]
    b: usize,
    /// Cohort size; 0 selects every listed client.
    #[arg(long, default_value_t = 0)]
    select: usize,
    #[arg(long, default_value_t = 0)]
    run_id: u64,
    #[arg(long, default_value_t = 30)]
    timeout_secs: u64,
    /// Write a frame-level transcript to this path.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Write the full report as JSON to this path.
    #[arg(long, env = "ITD_OUT")]
    out: Option<PathBuf>,
}

fn emit_table(table: &ResultTable, out: &Option<PathBuf>) -> Result<()> {
    print!("{}", table.render());
    if let Some(base) = out {
        table.write_files(base)?;
    }
    Ok(())
}

fn write_json(value: &impl serde::Serialize, path: &PathBuf) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes)?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Type1(args) => {
            let table = run_type1(
                &args.cells(Model::A),
                &args.common.budget(),
                args.common.transport.into(),
                args.common.reps,
                args.common.seed,
                args.common.workers,
            )?;
            emit_table(&table, &args.common.out)?;
            Ok(args.gate(&table))
        }
        Command::Power(args) => {
            let table = run_power(
                &args.cells(args.model.into()),
                &args.common.budget(),
                args.common.transport.into(),
                args.common.reps,
                args.common.seed,
                args.common.workers,
            )?;
            emit_table(&table, &args.common.out)?;
            Ok(args.gate(&table))
        }
        Command::Clt(args) => {
            let reports = run_clt_check(&args.k, args.reps, args.seed, args.workers)?;
            print!("{}", render_clt(&reports));
            if let Some(path) = &args.out {
                write_json(&reports, path)?;
            }
            Ok(reports.iter().all(|r| r.pass))
        }
        Command::Concentration(args) => {
            let report = run_concentration_check(
                args.k,
                args.d,
                args.m,
                args.n,
                args.reps,
                &args.thresholds,
                args.seed,
                args.workers,
            )?;
            print!("{}", render_concentration(&report));
            if let Some(path) = &args.out {
                write_json(&report, path)?;
            }
            Ok(report.pass)
        }
        Command::Drift(args) => {
            let report = run_drift(
                args.k,
                args.epsilon,
                args.common.m,
                &args.common.budget(),
                args.common.transport.into(),
                args.common.reps,
                args.common.seed,
                args.common.workers,
            )?;
            print!("{}", render_drift(&report));
            if let Some(base) = &args.common.out {
                write_json(&report, &base.with_extension("json"))?;
            }
            Ok(!args.gate || report.itd_power >= report.max_client_power())
        }
        Command::ServeClient(args) => {
            serve_client_csv(
                &args.listen,
                args.client_id,
                &args.xs,
                &args.ys,
                Duration::from_secs(args.timeout_secs),
                args.max_runs,
            )?;
            Ok(true)
        }
        Command::Coordinate(args) => {
            let select = if args.select == 0 { args.clients.len() } else { args.select };
            let params = RunParams {
                run_id: args.run_id,
                select,
                order: 2.0,
                local_permutations: args.bk,
                aggregate_rounds: args.b,
                alpha: args.alpha,
                root_seed: args.seed,
                reply_timeout: Duration::from_secs(args.timeout_secs),
            };
            let report = coordinate(&params, &args.clients, args.transcript.as_ref())?;
            println!(
                "observed={:.6} critical={:.6} p={:.4} reject={}",
                report.observed.value, report.critical_value, report.p_value, report.reject
            );
            if let Some(path) = &args.out {
                write_json(&report, path)?;
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("gated check failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
