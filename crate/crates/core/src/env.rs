//! Environment simulation and the two benchmark MDPs.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::powi;
use crate::mdp::{Mdp, MdpError};

/// How rewards are emitted around their mean `R(s, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RewardNoise {
    /// The mean itself.
    #[default]
    Deterministic,
    /// 1 with probability `R(s, a)`, else 0. Needs means in `[0, 1]`.
    Bernoulli,
}

/// A simulated MDP with a current state.
#[derive(Debug, Clone)]
pub struct EnvState<'a> {
    mdp: &'a Mdp,
    current: usize,
    noise: RewardNoise,
    rng: ChaCha8Rng,
}

impl<'a> EnvState<'a> {
    pub fn new(mdp: &'a Mdp, start: usize, noise: RewardNoise, seed: u64) -> Result<Self, MdpError> {
        mdp.check_pair(start, 0)?;
        if noise == RewardNoise::Bernoulli && mdp.max_reward() > 1.0 {
            return Err(MdpError::InvalidReward { state: 0, action: 0, reward: mdp.max_reward(), bound: 1.0 });
        }
        Ok(Self { mdp, current: start, noise, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn current(&self) -> usize {
        self.current
    }

    /// Moves to `state` without taking an action.
    pub fn reset(&mut self, state: usize) -> Result<(), MdpError> {
        self.mdp.check_pair(state, 0)?;
        self.current = state;
        Ok(())
    }

    pub fn mdp(&self) -> &Mdp {
        self.mdp
    }

    /// Takes action `a`: returns the reward and the next state, which becomes
    /// current.
    pub fn step(&mut self, a: usize) -> Result<(f64, usize), MdpError> {
        let s = self.current;
        self.mdp.check_pair(s, a)?;
        let mean = self.mdp.reward(s, a);
        let reward = match self.noise {
            RewardNoise::Deterministic => mean,
            RewardNoise::Bernoulli => {
                if self.rng.gen::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
        };
        let successors = self.mdp.successors(s, a);
        let u: f64 = self.rng.gen();
        let mut acc = 0.0;
        // the last successor absorbs rounding in the cumulative sum
        let mut next = successors[successors.len() - 1].0;
        for &(state, p) in successors {
            acc += p;
            if u < acc {
                next = state;
                break;
            }
        }
        self.current = next;
        Ok((reward, next))
    }
}

/// Parameters of the random benchmark MDPs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomMdpParams {
    pub num_states: usize,
    pub num_actions: usize,
    pub gamma: f64,
    /// Probability on each Hamiltonian-circuit edge.
    pub circuit_prob: f64,
    /// Extra successors drawn per pair.
    pub extra_successors: usize,
    /// Mass spread over the extra successors.
    pub extra_mass: f64,
}

impl Default for RandomMdpParams {
    fn default() -> Self {
        Self {
            num_states: 50,
            num_actions: 5,
            gamma: 0.95,
            circuit_prob: 0.1,
            extra_successors: 4,
            extra_mass: 0.9,
        }
    }
}

/// Draws a random MDP.
///
/// Each action gets a uniformly random Hamiltonian circuit whose edges carry
/// `circuit_prob`, so every state is reachable from every other under any
/// single action. Each pair also gets `extra_successors` distinct states
/// (drawn from all states, merged with the circuit edge on collision) whose
/// masses are uniform on the simplex scaled to `extra_mass`. The mean reward
/// is `u · s / (S - 1)` with `u ~ U[0, 1]`.
pub fn generate_random_mdp(seed: u64, params: &RandomMdpParams) -> Result<Mdp, MdpError> {
    let RandomMdpParams { num_states: ns, num_actions: na, .. } = *params;
    if ns == 0 || na == 0 {
        return Err(MdpError::Empty);
    }
    if params.extra_successors > ns.saturating_sub(1) {
        return Err(MdpError::DimensionMismatch { expected: ns.saturating_sub(1), actual: params.extra_successors });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<usize> = (0..ns).collect();

    // circuit[a][s] is the successor of s on action a's circuit
    let mut circuit = vec![vec![0usize; ns]; na];
    for succ in circuit.iter_mut() {
        let mut order = states.clone();
        order.shuffle(&mut rng);
        for i in 0..ns {
            succ[order[i]] = order[(i + 1) % ns];
        }
    }

    let mut rewards = Vec::with_capacity(ns * na);
    let mut rows = Vec::with_capacity(ns * na);
    let scale = if ns > 1 { (ns - 1) as f64 } else { 1.0 };
    for s in 0..ns {
        for succ in &circuit {
            let mut row: Vec<(usize, f64)> = vec![(succ[s], params.circuit_prob)];
            let k = params.extra_successors;
            if k > 0 && params.extra_mass > 0.0 {
                let picks: Vec<usize> = states.choose_multiple(&mut rng, k).copied().collect();
                let mut cuts: Vec<f64> = (0..k - 1).map(|_| rng.gen::<f64>()).collect();
                cuts.sort_by(f64::total_cmp);
                let mut prev = 0.0;
                for (i, &next) in picks.iter().enumerate() {
                    let cut = if i + 1 < k { cuts[i] } else { 1.0 };
                    let mass = (cut - prev) * params.extra_mass;
                    prev = cut;
                    if mass > 0.0 {
                        row.push((next, mass));
                    }
                }
            }
            let total: f64 = row.iter().map(|&(_, p)| p).sum();
            for entry in row.iter_mut() {
                entry.1 /= total;
            }
            rows.push(row);
            let u: f64 = rng.gen();
            rewards.push(u * s as f64 / scale);
        }
    }
    Mdp::new(ns, na, params.gamma, rewards, rows)
}

/// The 7-state, 6-action bandit chain.
///
/// From state 0, action `j` (index `j - 1`) moves to state `j` with
/// probability `1/j` and stays otherwise, earning nothing. From a state
/// `i > 0` every action returns to 0; action 1 (index 0) earns `(3/2)^i`.
pub fn bandit_chain_mdp(gamma: f64) -> Result<Mdp, MdpError> {
    const ARMS: usize = 6;
    let ns = ARMS + 1;
    let mut rewards = Vec::with_capacity(ns * ARMS);
    let mut rows = Vec::with_capacity(ns * ARMS);
    for j in 1..=ARMS {
        let p = 1.0 / j as f64;
        rewards.push(0.0);
        rows.push(if j == 1 { vec![(1, 1.0)] } else { vec![(0, 1.0 - p), (j, p)] });
    }
    for i in 1..ns {
        for action in 0..ARMS {
            rewards.push(if action == 0 { powi(1.5, i as i32) } else { 0.0 });
            rows.push(vec![(0, 1.0)]);
        }
    }
    Mdp::with_reward_bound(ns, ARMS, gamma, rewards, rows, powi(1.5, ARMS as i32))
}
