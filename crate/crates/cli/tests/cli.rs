use std::process::Command;

use itd_core::synth::{Dist, Model};

use itd_cli::clt::run_clt_check;
use itd_cli::concentration::run_concentration_check;
use itd_cli::drift::run_drift;
use itd_cli::experiments::{run_power, run_type1, CellSpec, TestBudget, Transport};
use itd_cli::table::ResultTable;

fn tiny_budget() -> TestBudget {
    TestBudget { local_permutations: 10, aggregate_rounds: 50, alpha: 0.05 }
}

fn cell(model: Model, k: usize, d: usize, m: usize, shift_sd: f64) -> CellSpec {
    CellSpec { model, dist: Dist::Normal, k, d, m, n: m, shift_sd }
}

#[test]
fn result_table_round_trips_through_files() {
    let table = run_type1(
        &[cell(Model::A, 2, 2, 15, 0.25)],
        &tiny_budget(),
        Transport::Loopback,
        5,
        3,
        1,
    )
    .unwrap();
    let dir = std::env::temp_dir().join("itd_cli_table_test");
    std::fs::create_dir_all(&dir).unwrap();
    let base = dir.join("out");
    table.write_files(&base).unwrap();
    let parsed = ResultTable::read_json(&base.with_extension("json")).unwrap();
    assert_eq!(parsed, table);
    let rows = table.read_csv(&base.with_extension("csv")).unwrap();
    assert_eq!(rows, table.rows);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn same_seed_gives_byte_identical_files() {
    let dir = std::env::temp_dir().join("itd_cli_repro_test");
    std::fs::create_dir_all(&dir).unwrap();
    let run = |base: &std::path::Path| {
        run_type1(
            &[cell(Model::A, 2, 2, 15, 0.25)],
            &tiny_budget(),
            Transport::Loopback,
            5,
            11,
            1,
        )
        .unwrap()
        .write_files(base)
        .unwrap();
    };
    run(&dir.join("a"));
    run(&dir.join("b"));
    for ext in ["csv", "json"] {
        let a = std::fs::read(dir.join("a").with_extension(ext)).unwrap();
        let b = std::fs::read(dir.join("b").with_extension(ext)).unwrap();
        assert_eq!(a, b, "{ext} files differ across identical runs");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn worker_count_does_not_change_results() {
    let cells = [cell(Model::C, 2, 2, 15, 0.5)];
    let one = run_power(&cells, &tiny_budget(), Transport::Loopback, 8, 5, 1).unwrap();
    let four = run_power(&cells, &tiny_budget(), Transport::Loopback, 8, 5, 4).unwrap();
    assert_eq!(one, four);
}

#[test]
fn transports_agree_on_the_grid() {
    let cells = [cell(Model::C, 2, 2, 12, 0.5)];
    let loopback = run_power(&cells, &tiny_budget(), Transport::Loopback, 4, 6, 1).unwrap();
    let socket = run_power(&cells, &tiny_budget(), Transport::Socket, 4, 6, 1).unwrap();
    assert_eq!(loopback, socket);
}

#[test]
fn single_replication_rate_is_zero_or_one() {
    let table = run_type1(
        &[cell(Model::A, 1, 1, 10, 0.25)],
        &tiny_budget(),
        Transport::Loopback,
        1,
        2,
        1,
    )
    .unwrap();
    let rate = table.rows[0].rejection_rate;
    assert!(rate == 0.0 || rate == 1.0);
}

#[test]
fn zero_shift_alternative_reduces_to_null_level() {
    // Model C with no shift is the null model; the rate stays near alpha.
    let table = run_power(
        &[cell(Model::C, 2, 2, 30, 0.0)],
        &TestBudget { local_permutations: 20, aggregate_rounds: 100, alpha: 0.05 },
        Transport::Loopback,
        100,
        7,
        1,
    )
    .unwrap();
    let rate = table.rows[0].rejection_rate;
    assert!(rate <= 0.15, "null-equivalent rate {rate} far above alpha");
}

#[test]
fn type1_rejects_alternative_models_and_power_rejects_null() {
    assert!(run_type1(
        &[cell(Model::B, 1, 1, 10, 0.25)],
        &tiny_budget(),
        Transport::Loopback,
        1,
        0,
        1
    )
    .is_err());
    assert!(run_power(
        &[cell(Model::A, 1, 1, 10, 0.25)],
        &tiny_budget(),
        Transport::Loopback,
        1,
        0,
        1
    )
    .is_err());
}

#[test]
fn clt_skips_single_client_and_reports_sane_variance() {
    let reports = run_clt_check(&[1, 100], 300, 2, 1).unwrap();
    assert!(reports[0].pass);
    assert!(reports[0].note.is_some());
    assert!(reports[1].note.is_none());
    assert!((0.7..=1.3).contains(&reports[1].variance_ratio));
}

#[test]
fn concentration_bound_shrinks_when_samples_double() {
    let small = run_concentration_check(2, 2, 20, 20, 50, &[0.1], 3, 1).unwrap();
    let large = run_concentration_check(2, 2, 40, 40, 50, &[0.1], 3, 1).unwrap();
    assert!(large.rows[0].bound < small.rows[0].bound);
}

#[test]
fn drift_single_client_itd_column_equals_solo_column() {
    let report = run_drift(1, 0.5, 15, &tiny_budget(), Transport::Loopback, 20, 9, 1).unwrap();
    assert_eq!(report.itd_power, report.per_client_power[0]);
}

#[test]
fn drift_without_drift_stays_near_level() {
    let report = run_drift(
        3,
        1.0,
        30,
        &TestBudget { local_permutations: 20, aggregate_rounds: 100, alpha: 0.05 },
        Transport::Loopback,
        60,
        13,
        1,
    )
    .unwrap();
    assert!(report.itd_power <= 0.2, "no-drift power {}", report.itd_power);
}

#[test]
fn binary_gates_exit_code_on_failed_check() {
    let exe = env!("CARGO_BIN_EXE_itd");
    let ok = Command::new(exe)
        .args([
            "type1", "--K", "1", "--d", "1", "--m", "10", "--n", "10", "--Bk", "5", "--B", "20",
            "--reps", "3", "--gate-max", "1.0",
        ])
        .output()
        .unwrap();
    assert!(ok.status.success(), "stderr: {}", String::from_utf8_lossy(&ok.stderr));

    let gated = Command::new(exe)
        .args([
            "type1", "--K", "1", "--d", "1", "--m", "10", "--n", "10", "--Bk", "5", "--B", "20",
            "--reps", "3", "--gate-min", "0.9",
        ])
        .output()
        .unwrap();
    assert!(!gated.status.success());
}

#[test]
fn binary_env_vars_mirror_flags() {
    let exe = env!("CARGO_BIN_EXE_itd");
    let dir = std::env::temp_dir().join("itd_cli_env_test");
    std::fs::create_dir_all(&dir).unwrap();
    let flag_base = dir.join("flag");
    let env_base = dir.join("env");
    let flag = Command::new(exe)
        .args([
            "type1", "--K", "1", "--d", "1", "--m", "12", "--n", "12", "--Bk", "5", "--B", "20",
            "--reps", "4", "--seed", "21", "--out",
        ])
        .arg(&flag_base)
        .output()
        .unwrap();
    let env = Command::new(exe)
        .args(["type1", "--Bk", "5", "--B", "20", "--reps", "4"])
        .env("ITD_K", "1")
        .env("ITD_D", "1")
        .env("ITD_M", "12")
        .env("ITD_N", "12")
        .env("ITD_SEED", "21")
        .env("ITD_OUT", &env_base)
        .output()
        .unwrap();
    assert!(flag.status.success() && env.status.success());
    // Output files are wall-time free, so the two runs match byte for byte.
    for ext in ["csv", "json"] {
        let a = std::fs::read(flag_base.with_extension(ext)).unwrap();
        let b = std::fs::read(env_base.with_extension(ext)).unwrap();
        assert_eq!(a, b);
    }
    std::fs::remove_dir_all(&dir).ok();
}
