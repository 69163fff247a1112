mod common;

use common::{brute_force_optimal, dense_mdp, dense_policy_value};
use rtdp_core::{
    bandit_chain_mdp, bellman_backup, build_known_mdp, evaluate_policy, finite_horizon_value, greedy_policy,
    value_iteration, ActionValues, EnvState, KnownSet, Mdp, Policy, RewardNoise,
};

// value from state 0 of pulling arm j forever: a / (1 - b)
fn arm_value(j: i32, gamma: f64) -> f64 {
    let a = gamma * 1.5f64.powi(j) / j as f64;
    let b = gamma * (1.0 - (1.0 - gamma) / j as f64);
    a / (1.0 - b)
}

#[test]
fn value_iteration_matches_dense_solve() {
    for seed in 0..100 {
        let gamma = 0.5 + 0.45 * (seed as f64 / 100.0);
        let mdp = dense_mdp(seed, 5, 3, gamma);
        let solved = value_iteration(&mdp, 1e-9 * (1.0 - gamma), &ActionValues::constant(5, 3, 0.0)).unwrap();
        let exact = dense_policy_value(&mdp, greedy_policy(&solved.values).actions());
        let brute = brute_force_optimal(&mdp);
        for s in 0..5 {
            assert!((solved.values.value(s) - exact[s]).abs() < 1e-6, "seed {seed}");
            assert!((exact[s] - brute[s]).abs() < 1e-9, "seed {seed}");
        }
    }
}

#[test]
fn value_iteration_residual_within_tolerance() {
    for seed in 0..20 {
        let mdp = dense_mdp(1000 + seed, 6, 4, 0.9);
        let tol = 1e-4;
        let q = value_iteration(&mdp, tol, &ActionValues::constant(6, 4, 10.0)).unwrap().values;
        for s in 0..6 {
            for a in 0..4 {
                assert!((bellman_backup(&mdp, &q, s, a).unwrap() - q.get(s, a)).abs() <= tol);
            }
        }
    }
}

#[test]
fn warm_start_needs_fewer_backups() {
    let mdp = dense_mdp(3, 8, 3, 0.95);
    let cold = value_iteration(&mdp, 1e-6, &ActionValues::constant(8, 3, 0.0)).unwrap();
    let warm = value_iteration(&mdp, 1e-6, &cold.values).unwrap();
    assert!(warm.backups < cold.backups / 10);
    assert!(warm.values.max_abs_diff(&cold.values) < 1e-4);
}

#[test]
fn bandit_chain_optimum() {
    let mdp = bandit_chain_mdp(0.95).unwrap();
    let solved = value_iteration(&mdp, 1e-10, &ActionValues::constant(7, 6, 0.0)).unwrap();
    assert_eq!(solved.values.greedy_action(0), 5);
    let v0 = solved.values.value(0);
    assert!((v0 - 31.14).abs() < 0.005, "{v0}");
    assert!((v0 - arm_value(6, 0.95)).abs() < 1e-8);
    // arm 6 beats every other arm in closed form as well
    for j in 1..6 {
        assert!(arm_value(j, 0.95) < arm_value(6, 0.95));
    }
}

#[test]
fn bandit_chain_first_arm_policy() {
    let mdp = bandit_chain_mdp(0.95).unwrap();
    let pi = Policy::constant(7, 0);
    let v = evaluate_policy(&mdp, &pi, 1e-12).unwrap();
    assert!((v[0] - 1.425 / 0.0975).abs() < 1e-8);
    assert!((v[0] - arm_value(1, 0.95)).abs() < 1e-8);

    // arm 1 is deterministic, so one long rollout is the exact return
    let mut env = EnvState::new(&mdp, 0, RewardNoise::Deterministic, 0).unwrap();
    let mut ret = 0.0;
    let mut discount = 1.0;
    for _ in 0..2000 {
        let (r, _) = env.step(0).unwrap();
        ret += discount * r;
        discount *= 0.95;
    }
    assert!((ret - 14.615).abs() < 1e-3);
}

#[test]
fn known_mdp_matches_brute_force() {
    let base = Mdp::new(
        2,
        2,
        0.9,
        vec![0.2, 0.7, 1.0, 0.0],
        vec![vec![(0, 0.3), (1, 0.7)], vec![(0, 1.0)], vec![(1, 0.5), (0, 0.5)], vec![(1, 1.0)]],
    )
    .unwrap();
    let q = ActionValues::from_vec(2, 2, vec![3.0, 1.5, 4.0, 2.5]).unwrap();
    let mut known = KnownSet::empty(2, 2);
    known.insert(0, 0);
    let mk = build_known_mdp(&base, &q, &known).unwrap();
    assert_eq!(mk.num_states(), 3);
    let solved = value_iteration(&mk, 1e-12, &ActionValues::constant(3, 2, 0.0)).unwrap();
    let oracle = brute_force_optimal(&mk);
    for (s, v) in oracle.iter().enumerate() {
        assert!((solved.values.value(s) - v).abs() < 1e-9);
    }
    // unknown pairs are worth exactly their stored Q
    assert!((solved.values.get(0, 1) - 1.5).abs() < 1e-9);
    assert!((solved.values.get(1, 0) - 4.0).abs() < 1e-9);
}

#[test]
fn finite_horizon_tail_is_bounded() {
    for seed in 0..10 {
        let gamma = 0.9;
        let mdp = dense_mdp(50 + seed, 4, 2, gamma);
        let pi = Policy::new(vec![0, 1, 1, 0], 2).unwrap();
        let v = dense_policy_value(&mdp, pi.actions());
        for horizon in [0usize, 1, 5, 20, 80] {
            let vt = finite_horizon_value(&mdp, &pi, 2, horizon).unwrap();
            let tail = gamma.powi(horizon as i32) / (1.0 - gamma);
            assert!(vt <= v[2] + 1e-12);
            assert!(v[2] - vt <= tail + 1e-12);
        }
    }
}
