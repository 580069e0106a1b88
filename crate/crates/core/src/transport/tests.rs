use super::*;
use crate::seed;
use rand::Rng;

fn pts1(xs: &[f64]) -> Vec<Vec<f64>> {
    xs.iter().map(|&x| vec![x]).collect()
}

fn cloud1(xs: &[f64]) -> PointCloud {
    PointCloud::uniform(pts1(xs)).unwrap()
}

/// Independent oracle: minimum over all n! permutation couplings. Valid for
/// uniform equal-size marginals, where the optimum is attained at a
/// permutation matrix (Birkhoff).
pub fn brute_force_value(cost: &CostMatrix) -> f64 {
    assert_eq!(cost.rows(), cost.cols());
    let n = cost.rows();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let total: f64 = p.iter().enumerate().map(|(i, &j)| cost.get(i, j)).sum();
        if total < best {
            best = total;
        }
    });
    best / n as f64
}

fn permute(items: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, visit);
        items.swap(start, i);
    }
}

fn random_cloud(rng: &mut impl Rng, n: usize, d: usize) -> PointCloud {
    let pts = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    PointCloud::uniform(pts).unwrap()
}

#[test]
fn cost_matrix_single_pair() {
    let c = cost_matrix(&pts1(&[0.0]), &pts1(&[3.0]), 2.0).unwrap();
    assert_eq!(c.entries(), &[9.0]);
}

#[test]
fn cost_matrix_zero_diagonal_for_identical_supports() {
    let xs = vec![vec![1.0, 2.0], vec![-0.5, 0.25]];
    for p in [1.0, 2.0, 3.5] {
        let c = cost_matrix(&xs, &xs, p).unwrap();
        assert_eq!(c.get(0, 0), 0.0);
        assert_eq!(c.get(1, 1), 0.0);
    }
}

#[test]
fn cost_matrix_hand_checked_l1() {
    let xs = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
    let ys = vec![vec![0.0, 1.0]];
    let c = cost_matrix(&xs, &ys, 1.0).unwrap();
    assert!((c.get(0, 0) - 1.0).abs() < 1e-15);
    assert!((c.get(1, 0) - 2.0_f64.sqrt()).abs() < 1e-15);
}

#[test]
fn cost_matrix_rejects_bad_input() {
    assert!(cost_matrix(&pts1(&[]), &pts1(&[1.0]), 2.0).is_err());
    assert!(cost_matrix(&pts1(&[0.0]), &[vec![0.0, 1.0]], 2.0).is_err());
    assert!(cost_matrix(&[vec![f64::NAN]], &pts1(&[1.0]), 2.0).is_err());
    assert!(cost_matrix(&pts1(&[0.0]), &pts1(&[1.0]), 0.5).is_err());
}

#[test]
fn solve_exact_forced_coupling() {
    let c = cost_matrix(&pts1(&[0.0]), &pts1(&[3.0]), 2.0).unwrap();
    let plan = solve_exact(&c, &[1.0], &[1.0]).unwrap();
    assert!((plan.value - 9.0).abs() < 1e-12);
    assert!((plan.get(0, 0) - 1.0).abs() < 1e-12);
}

#[test]
fn solve_exact_two_point_instance() {
    // {0,1} vs {0.5,1.5}: monotone matching costs (0.25 + 0.25)/2.
    let c = cost_matrix(&pts1(&[0.0, 1.0]), &pts1(&[0.5, 1.5]), 2.0).unwrap();
    let plan = solve_exact(&c, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
    assert!((plan.value - 0.25).abs() < 1e-12, "value {}", plan.value);
    assert!((plan.value - brute_force_value(&c)).abs() < 1e-12);
}

#[test]
fn solve_exact_identical_clouds_zero() {
    let a = cloud1(&[0.3, -1.0, 2.0]);
    let c = cost_matrix(a.points(), a.points(), 2.0).unwrap();
    let plan = solve_exact(&c, a.weights(), a.weights()).unwrap();
    assert!(plan.value.abs() < 1e-12);
}

#[test]
fn solve_exact_rejects_mismatched_mass() {
    let c = cost_matrix(&pts1(&[0.0]), &pts1(&[1.0]), 2.0).unwrap();
    assert!(matches!(
        solve_exact(&c, &[1.0], &[0.5]),
        Err(crate::Error::InfeasibleMarginals(_))
    ));
}

#[test]
fn plan_marginals_are_feasible() {
    let mut rng = seed::rng(11);
    for _ in 0..50 {
        let m = rng.gen_range(1..6);
        let n = rng.gen_range(1..6);
        let a = random_cloud(&mut rng, m, 2);
        let b = random_cloud(&mut rng, n, 2);
        let c = cost_matrix(a.points(), b.points(), 2.0).unwrap();
        let plan = solve_exact(&c, a.weights(), b.weights()).unwrap();
        for (sum, w) in plan.row_sums().iter().zip(a.weights()) {
            assert!((sum - w).abs() < MARGINAL_TOL);
        }
        for (sum, w) in plan.col_sums().iter().zip(b.weights()) {
            assert!((sum - w).abs() < MARGINAL_TOL);
        }
        assert!(plan.plan.iter().all(|&p| p >= 0.0));
    }
}

#[test]
fn optimality_matches_brute_force_small() {
    let mut rng = seed::rng(7);
    for _ in 0..60 {
        let n = rng.gen_range(1..=4);
        let d = rng.gen_range(1..=3);
        let a = random_cloud(&mut rng, n, d);
        let b = random_cloud(&mut rng, n, d);
        let c = cost_matrix(a.points(), b.points(), 2.0).unwrap();
        let plan = solve_exact(&c, a.weights(), b.weights()).unwrap();
        let oracle = brute_force_value(&c);
        assert!(
            (plan.value - oracle).abs() < 1e-9,
            "solver {} vs brute force {}",
            plan.value,
            oracle
        );
    }
}

#[test]
fn wasserstein_identity_and_point_masses() {
    let a = cloud1(&[0.0, 1.0, 5.0]);
    assert!(wasserstein_p(&a, &a, 2.0).unwrap().abs() < 1e-9);

    let d0 = cloud1(&[0.0]);
    let d3 = cloud1(&[3.0]);
    assert!((wasserstein_p(&d0, &d3, 2.0).unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn wasserstein_two_point_instance() {
    let a = cloud1(&[0.0, 1.0]);
    let b = cloud1(&[0.5, 1.5]);
    assert!((wasserstein_p(&a, &b, 2.0).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn sorted_oracle_examples() {
    let a = cloud1(&[0.0, 1.0]);
    let b = cloud1(&[0.5, 1.5]);
    assert!((wasserstein_1d_sorted(&a, &b, 2.0).unwrap() - 0.5).abs() < 1e-12);
    assert!(wasserstein_1d_sorted(&a, &a, 2.0).unwrap().abs() < 1e-12);
    let d0 = cloud1(&[0.0]);
    let d5 = cloud1(&[5.0]);
    assert!((wasserstein_1d_sorted(&d0, &d5, 1.0).unwrap() - 5.0).abs() < 1e-12);
}

#[test]
fn sorted_oracle_rejects_mismatches() {
    let a = cloud1(&[0.0, 1.0]);
    let b = cloud1(&[0.5]);
    assert!(wasserstein_1d_sorted(&a, &b, 2.0).is_err());
    let c2 = PointCloud::uniform(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
    assert!(wasserstein_1d_sorted(&c2, &c2, 2.0).is_err());
}

#[test]
fn lp_matches_sorted_oracle_on_random_1d() {
    let mut rng = seed::rng(23);
    for _ in 0..40 {
        let n = rng.gen_range(1..12);
        let a = random_cloud(&mut rng, n, 1);
        let b = random_cloud(&mut rng, n, 1);
        let lp = wasserstein_p(&a, &b, 2.0).unwrap();
        let sorted = wasserstein_1d_sorted(&a, &b, 2.0).unwrap();
        assert!((lp - sorted).abs() < 1e-9, "lp {lp} vs sorted {sorted}");
    }
}

#[test]
fn metric_axioms_sampled() {
    let mut rng = seed::rng(31);
    for _ in 0..25 {
        let n = rng.gen_range(2..6);
        let a = random_cloud(&mut rng, n, 2);
        let b = random_cloud(&mut rng, n, 2);
        let c = random_cloud(&mut rng, n, 2);
        let ab = wasserstein_p(&a, &b, 2.0).unwrap();
        let ba = wasserstein_p(&b, &a, 2.0).unwrap();
        let ac = wasserstein_p(&a, &c, 2.0).unwrap();
        let bc = wasserstein_p(&b, &c, 2.0).unwrap();
        assert!(ab >= 0.0);
        assert!((ab - ba).abs() < 1e-9);
        assert!(ac <= ab + bc + 1e-9);
    }
}

#[test]
fn order_monotonicity_w1_le_w2() {
    let mut rng = seed::rng(41);
    for _ in 0..20 {
        let n = rng.gen_range(2..6);
        let a = random_cloud(&mut rng, n, 2);
        let b = random_cloud(&mut rng, n, 2);
        let w1 = wasserstein_p(&a, &b, 1.0).unwrap();
        let w2 = wasserstein_p(&a, &b, 2.0).unwrap();
        assert!(w1 <= w2 + 1e-9, "w1 {w1} > w2 {w2}");
    }
}

#[test]
fn sinkhorn_large_epsilon_gives_product_coupling() {
    let a = cloud1(&[0.0, 1.0]);
    let b = cloud1(&[0.5, 1.5]);
    let c = cost_matrix(a.points(), b.points(), 2.0).unwrap();
    let res = solve_sinkhorn(&c, a.weights(), b.weights(), 1e3, 1e-9, 10_000).unwrap();
    assert!(res.converged);
    for i in 0..2 {
        for j in 0..2 {
            let product = a.weights()[i] * b.weights()[j];
            assert!((res.plan[i * 2 + j] - product).abs() < 1e-3);
        }
    }
}

#[test]
fn sinkhorn_small_epsilon_near_exact() {
    let a = cloud1(&[0.0, 1.0]);
    let b = cloud1(&[0.5, 1.5]);
    let c = cost_matrix(a.points(), b.points(), 2.0).unwrap();
    let res = solve_sinkhorn(&c, a.weights(), b.weights(), 0.01, 1e-6, 600_000).unwrap();
    assert!(res.converged);
    assert!((res.transport_cost(&c) - 0.25).abs() < 0.05);
}

#[test]
fn sinkhorn_symmetric_instance_symmetric_plan() {
    let a = cloud1(&[0.0, 1.0]);
    let c = cost_matrix(a.points(), a.points(), 2.0).unwrap();
    for eps in [1.0, 0.1] {
        let res = solve_sinkhorn(&c, a.weights(), a.weights(), eps, 1e-10, 20_000).unwrap();
        assert!((res.plan[1] - res.plan[2]).abs() < 1e-9);
    }
}

#[test]
fn sinkhorn_marginals_within_tolerance() {
    let mut rng = seed::rng(53);
    let a = random_cloud(&mut rng, 4, 2);
    let b = random_cloud(&mut rng, 5, 2);
    let c = cost_matrix(a.points(), b.points(), 2.0).unwrap();
    let tol = 1e-8;
    let res = solve_sinkhorn(&c, a.weights(), b.weights(), 0.1, tol, 50_000).unwrap();
    assert!(res.converged);
    let mut row_violation = 0.0_f64;
    for i in 0..4 {
        let row: f64 = (0..5).map(|j| res.plan[i * 5 + j]).sum();
        row_violation += (row - a.weights()[i]).abs();
    }
    assert!(row_violation < tol);
}

#[test]
fn sinkhorn_rejects_bad_parameters() {
    let c = cost_matrix(&pts1(&[0.0]), &pts1(&[1.0]), 2.0).unwrap();
    assert!(solve_sinkhorn(&c, &[1.0], &[1.0], 0.0, 1e-9, 10).is_err());
    assert!(solve_sinkhorn(&c, &[1.0], &[1.0], 1.0, 0.0, 10).is_err());
}

#[test]
fn divergence_identity_and_symmetry() {
    let a = cloud1(&[0.0, 1.0, 2.5]);
    let b = cloud1(&[0.5, 1.5, 3.0]);
    assert!(sinkhorn_divergence(&a, &a, 0.5).unwrap().abs() < 1e-6);
    let ab = sinkhorn_divergence(&a, &b, 0.5).unwrap();
    let ba = sinkhorn_divergence(&b, &a, 0.5).unwrap();
    assert!((ab - ba).abs() < 1e-9);
}

#[test]
fn divergence_approaches_exact_as_epsilon_shrinks() {
    let a = cloud1(&[0.0, 1.0]);
    let b = cloud1(&[0.5, 1.5]);
    let exact = 0.25;
    let mut previous_gap = f64::INFINITY;
    for eps in [1.0, 0.1, 0.01] {
        let value = sinkhorn_divergence(&a, &b, eps).unwrap();
        let gap = (value - exact).abs();
        assert!(gap <= previous_gap + 1e-4, "gap {gap} grew at eps {eps}");
        previous_gap = gap;
    }
    assert!(previous_gap < 0.01);
}

#[test]
fn point_cloud_validation() {
    assert!(PointCloud::uniform(vec![]).is_err());
    assert!(PointCloud::new(vec![vec![0.0]], vec![0.7]).is_err());
    assert!(PointCloud::new(vec![vec![0.0], vec![1.0]], vec![1.5, -0.5]).is_err());
    assert!(PointCloud::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]).is_err());
}

mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn small_instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let point = proptest::collection::vec(-3.0..3.0f64, 2);
        (1usize..5).prop_flat_map(move |n| {
            (
                proptest::collection::vec(proptest::collection::vec(-3.0..3.0f64, 2), n),
                proptest::collection::vec(point.clone(), n),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exact_value_never_beats_brute_force((xs, ys) in small_instance()) {
            let a = PointCloud::uniform(xs).unwrap();
            let b = PointCloud::uniform(ys).unwrap();
            let c = cost_matrix(a.points(), b.points(), 2.0).unwrap();
            let plan = solve_exact(&c, a.weights(), b.weights()).unwrap();
            let oracle = brute_force_value(&c);
            prop_assert!((plan.value - oracle).abs() < 1e-9);
        }

        #[test]
        fn wasserstein_is_symmetric((xs, ys) in small_instance()) {
            let a = PointCloud::uniform(xs).unwrap();
            let b = PointCloud::uniform(ys).unwrap();
            let ab = wasserstein_p(&a, &b, 2.0).unwrap();
            let ba = wasserstein_p(&b, &a, 2.0).unwrap();
            prop_assert!((ab - ba).abs() < 1e-9);
        }
    }
}
