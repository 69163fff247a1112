//! Capped maximum-likelihood models built from experience.

use alloc::vec;
use alloc::vec::Vec;

use crate::mdp::{ActionValues, Mdp, MdpError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("reward {reward} outside [0, {bound}] observed at ({state}, {action})")]
    RewardOutOfRange { state: usize, action: usize, reward: f64, bound: f64 },
    #[error("pair ({state}, {action}) has no experience yet")]
    NoExperience { state: usize, action: usize },
    #[error("index out of range: state {state}, action {action}")]
    OutOfRange { state: usize, action: usize },
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// Per-pair experience counts and the statistics of the first `cap` samples.
///
/// `count` keeps growing past the cap; the reward sum and successor counts
/// freeze once `cap` samples have been stored.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalModel {
    num_states: usize,
    num_actions: usize,
    discount: f64,
    cap: u64,
    reward_bound: f64,
    counts: Vec<u64>,
    reward_sums: Vec<f64>,
    // sorted by next state
    transitions: Vec<Vec<(usize, u64)>>,
}

impl EmpiricalModel {
    /// A model accepting rewards in `[0, reward_bound]`.
    pub fn new(num_states: usize, num_actions: usize, discount: f64, cap: u64, reward_bound: f64) -> Self {
        let pairs = num_states * num_actions;
        Self {
            num_states,
            num_actions,
            discount,
            cap: cap.max(1),
            reward_bound,
            counts: vec![0; pairs],
            reward_sums: vec![0.0; pairs],
            transitions: vec![Vec::new(); pairs],
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    #[inline]
    fn index(&self, s: usize, a: usize) -> Result<usize, ModelError> {
        if s >= self.num_states || a >= self.num_actions {
            return Err(ModelError::OutOfRange { state: s, action: a });
        }
        Ok(s * self.num_actions + a)
    }

    /// Experience count `n(s, a)`, uncapped.
    #[inline]
    pub fn count(&self, s: usize, a: usize) -> u64 {
        self.counts[s * self.num_actions + a]
    }

    /// Samples backing the statistics: `min(n, cap)`.
    #[inline]
    pub fn stored(&self, s: usize, a: usize) -> u64 {
        self.count(s, a).min(self.cap)
    }

    pub fn reward_sum(&self, s: usize, a: usize) -> f64 {
        self.reward_sums[s * self.num_actions + a]
    }

    /// Stored successor counts of `(s, a)`, sorted by state.
    pub fn transition_counts(&self, s: usize, a: usize) -> &[(usize, u64)] {
        &self.transitions[s * self.num_actions + a]
    }

    /// `R̂(s, a)`, if the pair has been experienced.
    pub fn mean_reward(&self, s: usize, a: usize) -> Option<f64> {
        let n = self.stored(s, a);
        (n > 0).then(|| self.reward_sum(s, a) / n as f64)
    }

    /// `T̂(next | s, a)`, if the pair has been experienced.
    pub fn transition_prob(&self, s: usize, a: usize, next: usize) -> Option<f64> {
        let n = self.stored(s, a);
        (n > 0).then(|| {
            self.transition_counts(s, a)
                .iter()
                .find(|&&(x, _)| x == next)
                .map_or(0.0, |&(_, c)| c as f64 / n as f64)
        })
    }

    /// Records one transition. Returns whether the stored statistics changed
    /// (false once the pair already holds `cap` samples).
    pub fn record(&mut self, s: usize, a: usize, reward: f64, next: usize) -> Result<bool, ModelError> {
        let idx = self.index(s, a)?;
        if next >= self.num_states {
            return Err(ModelError::OutOfRange { state: next, action: a });
        }
        if !(reward >= 0.0 && reward <= self.reward_bound) {
            return Err(ModelError::RewardOutOfRange { state: s, action: a, reward, bound: self.reward_bound });
        }
        let before = self.counts[idx];
        self.counts[idx] += 1;
        if before >= self.cap {
            return Ok(false);
        }
        self.reward_sums[idx] += reward;
        let row = &mut self.transitions[idx];
        match row.binary_search_by_key(&next, |&(x, _)| x) {
            Ok(pos) => row[pos].1 += 1,
            Err(pos) => row.insert(pos, (next, 1)),
        }
        Ok(true)
    }

    /// `R̂(s, a) + γ Σ T̂(s' | s, a) V(s') + bonus`.
    ///
    /// The caller accounts for the backup.
    pub fn empirical_backup(&self, values: &ActionValues, s: usize, a: usize, bonus: f64) -> Result<f64, ModelError> {
        let idx = self.index(s, a)?;
        let n = self.stored(s, a);
        if n == 0 {
            return Err(ModelError::NoExperience { state: s, action: a });
        }
        let n = n as f64;
        let expected: f64 =
            self.transitions[idx].iter().map(|&(next, c)| (c as f64 / n) * values.value(next)).sum();
        Ok(self.reward_sums[idx] / n + self.discount * expected + bonus)
    }

    /// The model as an MDP with one extra absorbing, zero-reward state at
    /// index `S`.
    ///
    /// Pairs with `count >= min_count` get their empirical dynamics and
    /// reward `R̂ + reward_bonus(s, a)`. Every other pair earns
    /// `default_value` and moves to the absorbing state, so its optimal
    /// action value is exactly `default_value`.
    pub fn as_mdp(
        &self,
        default_value: f64,
        min_count: u64,
        reward_bonus: impl Fn(usize, usize) -> f64,
    ) -> Result<Mdp, ModelError> {
        let (ns, na) = (self.num_states, self.num_actions);
        let absorbing = ns;
        let mut rewards = Vec::with_capacity((ns + 1) * na);
        let mut rows = Vec::with_capacity((ns + 1) * na);
        let mut bound = default_value.max(self.reward_bound);
        for s in 0..ns {
            for a in 0..na {
                let idx = s * na + a;
                let n = self.stored(s, a);
                if self.counts[idx] >= min_count.max(1) && n > 0 {
                    let nf = n as f64;
                    let reward = self.reward_sums[idx] / nf + reward_bonus(s, a);
                    bound = bound.max(reward);
                    rewards.push(reward);
                    rows.push(self.transitions[idx].iter().map(|&(next, c)| (next, c as f64 / nf)).collect());
                } else {
                    rewards.push(default_value);
                    rows.push(vec![(absorbing, 1.0)]);
                }
            }
        }
        for _ in 0..na {
            rewards.push(0.0);
            rows.push(vec![(absorbing, 1.0)]);
        }
        Ok(Mdp::with_reward_bound(ns + 1, na, self.discount, rewards, rows, bound)?)
    }
}
