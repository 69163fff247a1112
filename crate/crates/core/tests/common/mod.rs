#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtdp_core::Mdp;

/// A dense random MDP: every pair reaches every state with positive mass.
pub fn dense_mdp(seed: u64, ns: usize, na: usize, gamma: f64) -> Mdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rewards = Vec::new();
    let mut rows = Vec::new();
    for _ in 0..ns * na {
        rewards.push(rng.gen::<f64>());
        let weights: Vec<f64> = (0..ns).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let total: f64 = weights.iter().sum();
        rows.push(weights.iter().enumerate().map(|(s, w)| (s, w / total)).collect());
    }
    Mdp::new(ns, na, gamma, rewards, rows).unwrap()
}

/// `V = (I - γ P_π)⁻¹ R_π` by a dense LU solve.
pub fn dense_policy_value(mdp: &Mdp, actions: &[usize]) -> Vec<f64> {
    let n = mdp.num_states();
    let gamma = mdp.discount();
    let mut m = nalgebra::DMatrix::<f64>::identity(n, n);
    let mut r = nalgebra::DVector::<f64>::zeros(n);
    for s in 0..n {
        let a = actions[s];
        r[s] = mdp.reward(s, a);
        for &(next, p) in mdp.successors(s, a) {
            m[(s, next)] -= gamma * p;
        }
    }
    let v = m.lu().solve(&r).expect("I - γP is nonsingular for γ < 1");
    v.iter().copied().collect()
}

/// Optimal state values by enumerating every deterministic policy.
pub fn brute_force_optimal(mdp: &Mdp) -> Vec<f64> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut best = vec![f64::NEG_INFINITY; ns];
    let mut actions = vec![0usize; ns];
    loop {
        let v = dense_policy_value(mdp, &actions);
        for s in 0..ns {
            best[s] = best[s].max(v[s]);
        }
        // odometer over action tuples
        let mut i = 0;
        while i < ns {
            actions[i] += 1;
            if actions[i] < na {
                break;
            }
            actions[i] = 0;
            i += 1;
        }
        if i == ns {
            return best;
        }
    }
}
