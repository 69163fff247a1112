use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtdp_core::{
    bandit_chain_mdp, generate_random_mdp, run_trial_observed, value_iteration, ActionValues, EnvSpec, EnvState,
    ExperimentConfig, Learner, LearnerConfig, LearnerKind, Mdp, RandomMdpParams, RewardNoise, UpdateMode,
};

fn config(kind: LearnerKind, gamma: f64) -> LearnerConfig {
    let mut c = LearnerConfig::new(kind);
    c.gamma = gamma;
    c
}

// 0 --a1--> 1 --a1--> 0, a0 stays; rewards favour staying in 1
fn two_state_chain() -> Mdp {
    Mdp::new(
        2,
        2,
        0.9,
        vec![0.1, 0.0, 1.0, 0.2],
        vec![vec![(0, 1.0)], vec![(1, 1.0)], vec![(1, 1.0)], vec![(0, 1.0)]],
    )
    .unwrap()
}

fn feed_every_pair(learner: &mut Learner, mdp: &Mdp, times: usize) {
    for _ in 0..times {
        for s in 0..mdp.num_states() {
            for a in 0..mdp.num_actions() {
                let next = mdp.successors(s, a)[0].0;
                learner.observe(s, a, mdp.reward(s, a), next).unwrap();
            }
        }
    }
}

fn q_star(mdp: &Mdp) -> ActionValues {
    value_iteration(mdp, 1e-12, &ActionValues::constant(mdp.num_states(), mdp.num_actions(), 0.0)).unwrap().values
}

#[test]
fn rmax_learns_deterministic_chain_in_one_pass() {
    let mdp = two_state_chain();
    let mut c = config(LearnerKind::Rmax, 0.9);
    c.m = 1;
    c.model_cap = 1;
    let mut learner = Learner::new(&c, 2, 2, None, 0).unwrap();
    feed_every_pair(&mut learner, &mdp, 1);
    let tol = c.vi_tol / (1.0 - 0.9);
    assert!(learner.values().max_abs_diff(&q_star(&mdp)) <= tol);
}

#[test]
fn mbie_without_bonus_learns_deterministic_chain() {
    let mdp = two_state_chain();
    let mut c = config(LearnerKind::Mbie, 0.9);
    c.beta = 0.0;
    c.model_cap = 4;
    let mut learner = Learner::new(&c, 2, 2, None, 0).unwrap();
    feed_every_pair(&mut learner, &mdp, 4);
    assert!(learner.values().max_abs_diff(&q_star(&mdp)) <= c.vi_tol / (1.0 - 0.9));
}

#[test]
fn mbie_bonus_is_pointwise_optimistic() {
    let mdp = generate_random_mdp(8, &RandomMdpParams { num_states: 6, num_actions: 2, gamma: 0.9, ..Default::default() }).unwrap();
    let mut plain = Learner::new(&{ let mut c = config(LearnerKind::Mbie, 0.9); c.vi_tol = 1e-9; c }, 6, 2, None, 0).unwrap();
    let mut bonus = Learner::new(&{ let mut c = config(LearnerKind::Mbie, 0.9); c.vi_tol = 1e-9; c.beta = 0.4; c }, 6, 2, None, 0).unwrap();
    let mut env = EnvState::new(&mdp, 0, RewardNoise::Deterministic, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..400 {
        let s = env.current();
        let a = rng.gen_range(0..2);
        let (r, next) = env.step(a).unwrap();
        plain.observe(s, a, r, next).unwrap();
        bonus.observe(s, a, r, next).unwrap();
    }
    for s in 0..6 {
        for a in 0..2 {
            assert!(bonus.values().get(s, a) >= plain.values().get(s, a) - 1e-6);
        }
    }
}

#[test]
fn rmax_with_frozen_model_solves_at_most_once_per_pair() {
    let mdp = generate_random_mdp(4, &RandomMdpParams { num_states: 8, num_actions: 3, gamma: 0.9, ..Default::default() }).unwrap();
    let mut c = config(LearnerKind::Rmax, 0.9);
    c.m = 3;
    c.model_cap = 3;
    let mut cfg = ExperimentConfig::new(EnvSpec::Fixed(mdp), c, 1e9);
    cfg.max_timesteps = 5000;
    let mut solves = 0;
    run_trial_observed(&cfg, 0, |step, _| {
        if step.outcome.backups > 0 {
            solves += 1;
        }
    })
    .unwrap();
    assert!(solves > 0 && solves <= 24, "{solves}");
}

#[test]
fn adaptive_is_rtdp_rmax_with_m_one() {
    let run = |kind: LearnerKind, m: u64, trial: u64| {
        let mut c = LearnerConfig::new(kind);
        c.m = m;
        let mut cfg = ExperimentConfig::new(EnvSpec::Random(RandomMdpParams::default()), c, 200.0);
        cfg.base_seed = 11;
        let mut actions = Vec::new();
        let mut values = None;
        run_trial_observed(&cfg, trial, |step, learner| {
            actions.push(step.action);
            values = Some(learner.values().clone());
        })
        .unwrap();
        (actions, values)
    };
    for trial in 0..5 {
        // the m of an adaptive learner is ignored
        assert_eq!(run(LearnerKind::AdaptiveRtdp, 7, trial), run(LearnerKind::RtdpRmax, 1, trial));
    }
}

#[test]
fn random_agent_is_uniform() {
    let mut learner = Learner::new(&LearnerConfig::new(LearnerKind::Random), 3, 5, None, 42).unwrap();
    let n = 100_000;
    let mut counts = [0u64; 5];
    for i in 0..n {
        counts[learner.select_action(i % 3)] += 1;
    }
    let p = 0.2;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    for c in counts {
        assert!((c as f64 - n as f64 * p).abs() < 3.0 * sigma, "{counts:?}");
    }
}

#[test]
fn optimal_agent_pulls_the_longest_arm() {
    let mdp = bandit_chain_mdp(0.95).unwrap();
    let mut learner = Learner::new(&LearnerConfig::new(LearnerKind::Optimal), 7, 6, Some(&mdp), 0).unwrap();
    assert_eq!(learner.select_action(0), 5);
    assert_eq!(learner.select_action(3), 0);
    assert_eq!(learner.backups(), 0);
}

fn lowest_argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &q) in row.iter().enumerate() {
        if q > row[best] {
            best = i;
        }
    }
    best
}

#[test]
fn greedy_choice_matches_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for seq in 0..1000 {
        let (ns, na) = (rng.gen_range(1..5), rng.gen_range(1..9));
        let kind = if seq % 2 == 0 { LearnerKind::RtdpRmax } else { LearnerKind::RtdpIe };
        let mut c = config(kind, 0.9);
        c.beta = 0.3;
        let mut learner = Learner::new(&c, ns, na, None, 0).unwrap();
        for _ in 0..30 {
            let (s, a) = (rng.gen_range(0..ns), rng.gen_range(0..na));
            // coarse rewards make ties common
            let r = rng.gen_range(0..3) as f64 / 2.0;
            learner.observe(s, a, r, rng.gen_range(0..ns)).unwrap();
            for st in 0..ns {
                assert_eq!(learner.select_action(st), lowest_argmax(learner.values().row(st)));
            }
        }
    }
}

#[test]
fn rtdp_touches_only_the_visited_pair() {
    for kind in [LearnerKind::RtdpRmax, LearnerKind::RtdpIe, LearnerKind::AdaptiveRtdp] {
        let mut c = LearnerConfig::new(kind);
        c.m = 2;
        c.beta = 0.5;
        let mut cfg = ExperimentConfig::new(EnvSpec::Random(RandomMdpParams::default()), c, 300.0);
        cfg.base_seed = 3;
        let mut before = ActionValues::constant(50, 5, cfg.learner.optimistic_value());
        run_trial_observed(&cfg, 0, |step, learner| {
            let after = learner.values();
            for s in 0..50 {
                for a in 0..5 {
                    if (s, a) != (step.state, step.action) {
                        assert_eq!(after.get(s, a), before.get(s, a));
                    }
                }
            }
            if after.get(step.state, step.action) != before.get(step.state, step.action) {
                assert!(step.outcome.applied);
            }
            before = after.clone();
        })
        .unwrap();
    }
}

#[test]
fn action_values_stay_in_range() {
    let beta = 0.7;
    for kind in [LearnerKind::RtdpRmax, LearnerKind::RtdpIe, LearnerKind::Rmax, LearnerKind::Mbie, LearnerKind::AdaptiveRtdp] {
        let mut c = LearnerConfig::new(kind);
        c.m = 2;
        c.beta = beta;
        let upper = (c.rmax_reward + beta) / (1.0 - c.gamma);
        let mut cfg = ExperimentConfig::new(EnvSpec::Random(RandomMdpParams { num_states: 10, ..Default::default() }), c, 1e9);
        cfg.max_timesteps = 3000;
        run_trial_observed(&cfg, 0, |_, learner| {
            for &q in learner.values().as_slice() {
                assert!((0.0..=upper + 1e-9).contains(&q), "{kind}: {q}");
            }
        })
        .unwrap();
    }
}

#[test]
fn modified_updates_per_pair_are_bounded() {
    for trial in 0..5 {
        let mut c = config(LearnerKind::RtdpRmax, 0.9);
        c.mode = UpdateMode::Modified;
        c.epsilon_one = 0.02;
        c.m = 1;
        let bound = rtdp_core::theory::max_updates_per_pair(c.epsilon_one, c.gamma);
        let params = RandomMdpParams { num_states: 5, num_actions: 3, gamma: 0.9, ..Default::default() };
        let mut cfg = ExperimentConfig::new(EnvSpec::Random(params), c, 1e9);
        cfg.max_timesteps = 20_000;
        let mut last = ActionValues::constant(5, 3, cfg.learner.optimistic_value());
        run_trial_observed(&cfg, trial, |step, learner| {
            let (s, a) = (step.state, step.action);
            let q = learner.values().get(s, a);
            assert!(q <= last.get(s, a));
            if step.outcome.applied {
                assert!(last.get(s, a) - q >= 0.02);
            }
            assert!(learner.updates_applied(s, a) <= bound);
            last = learner.values().clone();
        })
        .unwrap();
    }
}

#[test]
fn known_set_moves_only_on_updates_and_escapes() {
    for trial in 0..3 {
        let mut c = config(LearnerKind::RtdpRmax, 0.9);
        c.mode = UpdateMode::Modified;
        c.epsilon_one = 0.01;
        c.m = 3;
        c.model_cap = 3;
        let params = RandomMdpParams { num_states: 6, num_actions: 3, gamma: 0.9, ..Default::default() };
        let mut cfg = ExperimentConfig::new(EnvSpec::Random(params), c.clone(), 1e9);
        cfg.max_timesteps = 4000;
        let mut known = Learner::new(&c, 6, 3, None, 0).unwrap().known_set().unwrap();
        assert!(known.is_empty());
        let mut changes = 0;
        run_trial_observed(&cfg, trial, |step, learner| {
            let next = learner.known_set().unwrap();
            let escape = !known.contains(step.state, step.action);
            if next != known {
                changes += 1;
                assert!(step.outcome.applied || escape, "K changed at t={}", step.timestep);
            }
            known = next;
        })
        .unwrap();
        assert!(changes > 0);
    }
}

#[test]
fn optimism_holds_for_a_fresh_learner() {
    let mdp = generate_random_mdp(1, &RandomMdpParams { num_states: 5, num_actions: 3, gamma: 0.9, ..Default::default() }).unwrap();
    let learner = Learner::new(&config(LearnerKind::RtdpRmax, 0.9), 5, 3, None, 0).unwrap();
    let q = q_star(&mdp);
    assert!(learner.check_optimism(&q, 0.0));
    assert!(learner.check_optimism(&ActionValues::constant(5, 3, 1e6), f64::INFINITY));
}
