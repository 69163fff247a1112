//! Finite MDPs, action-value tables, greedy policies and known state-action
//! MDP construction.

use alloc::vec;
use alloc::vec::Vec;

/// Tolerance on the sum of every transition row.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MdpError {
    #[error("state {state} out of range (num_states = {num_states})")]
    StateOutOfRange { state: usize, num_states: usize },
    #[error("action {action} out of range (num_actions = {num_actions})")]
    ActionOutOfRange { action: usize, num_actions: usize },
    #[error("discount {0} is outside [0, 1)")]
    InvalidDiscount(f64),
    #[error("expected {expected} entries, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("pair ({state}, {action}) has no successors")]
    EmptyRow { state: usize, action: usize },
    #[error("pair ({state}, {action}) has probability {prob} outside (0, 1]")]
    InvalidProbability { state: usize, action: usize, prob: f64 },
    #[error("pair ({state}, {action}) probabilities sum to {sum}")]
    RowSum { state: usize, action: usize, sum: f64 },
    #[error("pair ({state}, {action}) has reward {reward} outside [0, {bound}]")]
    InvalidReward { state: usize, action: usize, reward: f64, bound: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("MDP needs at least one state and one action")]
    Empty,
}

/// A finite MDP with sparse transitions and mean rewards.
///
/// Successor lists are stored in one flat array (sorted by state within each
/// pair), indexed by `s * num_actions + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    num_states: usize,
    num_actions: usize,
    discount: f64,
    rewards: Vec<f64>,
    offsets: Vec<usize>,
    successors: Vec<(usize, f64)>,
    branching: usize,
}

impl Mdp {
    /// Builds an MDP whose mean rewards lie in `[0, 1]`.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        discount: f64,
        rewards: Vec<f64>,
        rows: Vec<Vec<(usize, f64)>>,
    ) -> Result<Self, MdpError> {
        Self::with_reward_bound(num_states, num_actions, discount, rewards, rows, 1.0)
    }

    /// Builds an MDP whose mean rewards lie in `[0, reward_bound]`.
    ///
    /// Rows may list a successor more than once; duplicates are merged and
    /// the row is sorted by state.
    pub fn with_reward_bound(
        num_states: usize,
        num_actions: usize,
        discount: f64,
        rewards: Vec<f64>,
        rows: Vec<Vec<(usize, f64)>>,
        reward_bound: f64,
    ) -> Result<Self, MdpError> {
        if num_states == 0 || num_actions == 0 {
            return Err(MdpError::Empty);
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(MdpError::InvalidDiscount(discount));
        }
        let pairs = num_states * num_actions;
        if rewards.len() != pairs {
            return Err(MdpError::DimensionMismatch { expected: pairs, actual: rewards.len() });
        }
        if rows.len() != pairs {
            return Err(MdpError::DimensionMismatch { expected: pairs, actual: rows.len() });
        }

        let mut offsets = Vec::with_capacity(pairs + 1);
        let mut successors: Vec<(usize, f64)> = Vec::new();
        let mut branching = 0;
        offsets.push(0);
        for (idx, mut row) in rows.into_iter().enumerate() {
            let (state, action) = (idx / num_actions, idx % num_actions);
            let reward = rewards[idx];
            if !reward.is_finite() || reward < 0.0 || reward > reward_bound {
                return Err(MdpError::InvalidReward { state, action, reward, bound: reward_bound });
            }
            if row.is_empty() {
                return Err(MdpError::EmptyRow { state, action });
            }
            row.sort_by_key(|&(next, _)| next);
            let start = successors.len();
            let mut sum = 0.0;
            for (next, prob) in row {
                if next >= num_states {
                    return Err(MdpError::StateOutOfRange { state: next, num_states });
                }
                if !(prob > 0.0 && prob <= 1.0) {
                    return Err(MdpError::InvalidProbability { state, action, prob });
                }
                sum += prob;
                let merge = successors.len() > start && successors[successors.len() - 1].0 == next;
                if merge {
                    let last = successors.len() - 1;
                    successors[last].1 += prob;
                } else {
                    successors.push((next, prob));
                }
            }
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(MdpError::RowSum { state, action, sum });
            }
            branching = branching.max(successors.len() - start);
            offsets.push(successors.len());
        }

        Ok(Self { num_states, num_actions, discount, rewards, offsets, successors, branching })
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

    /// Maximum successor-list length over all pairs.
    pub fn branching(&self) -> usize {
        self.branching
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.num_actions + a]
    }

    /// Successors of `(s, a)` as `(next_state, probability)`, sorted by state.
    #[inline]
    pub fn successors(&self, s: usize, a: usize) -> &[(usize, f64)] {
        let idx = s * self.num_actions + a;
        &self.successors[self.offsets[idx]..self.offsets[idx + 1]]
    }

    pub fn max_reward(&self) -> f64 {
        self.rewards.iter().copied().fold(0.0, f64::max)
    }

    pub fn check_pair(&self, s: usize, a: usize) -> Result<(), MdpError> {
        if s >= self.num_states {
            return Err(MdpError::StateOutOfRange { state: s, num_states: self.num_states });
        }
        if a >= self.num_actions {
            return Err(MdpError::ActionOutOfRange { action: a, num_actions: self.num_actions });
        }
        Ok(())
    }

    /// Predecessor pairs of every state: `result[s']` lists `(s, a)` with
    /// `T(s' | s, a) > 0`.
    pub fn predecessors(&self) -> Vec<Vec<(usize, usize)>> {
        let mut preds = vec![Vec::new(); self.num_states];
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                for &(next, _) in self.successors(s, a) {
                    preds[next].push((s, a));
                }
            }
        }
        preds
    }

    /// One-step Bellman backup without bounds checks.
    #[inline]
    pub(crate) fn backup(&self, values: &ActionValues, s: usize, a: usize) -> f64 {
        let expected: f64 =
            self.successors(s, a).iter().map(|&(next, p)| p * values.value(next)).sum();
        self.reward(s, a) + self.discount * expected
    }

    /// Backup using a precomputed state-value vector.
    #[inline]
    pub(crate) fn backup_with(&self, state_values: &[f64], s: usize, a: usize) -> f64 {
        let expected: f64 =
            self.successors(s, a).iter().map(|&(next, p)| p * state_values[next]).sum();
        self.reward(s, a) + self.discount * expected
    }
}

/// The action-value table `Q(s, a)`; `V(s)` is the row maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionValues {
    num_states: usize,
    num_actions: usize,
    q: Vec<f64>,
}

impl ActionValues {
    /// Every entry set to `value`.
    pub fn constant(num_states: usize, num_actions: usize, value: f64) -> Self {
        Self { num_states, num_actions, q: vec![value; num_states * num_actions] }
    }

    pub fn from_vec(num_states: usize, num_actions: usize, q: Vec<f64>) -> Result<Self, MdpError> {
        let expected = num_states * num_actions;
        if q.len() != expected {
            return Err(MdpError::DimensionMismatch { expected, actual: q.len() });
        }
        Ok(Self { num_states, num_actions, q })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.q[s * self.num_actions + a]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, value: f64) {
        self.q[s * self.num_actions + a] = value;
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[f64] {
        &self.q[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    /// `V(s) = max_a Q(s, a)`.
    #[inline]
    pub fn value(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn state_values(&self) -> Vec<f64> {
        (0..self.num_states).map(|s| self.value(s)).collect()
    }

    /// Greedy action at `s`, lowest index on ties.
    pub fn greedy_action(&self, s: usize) -> usize {
        argmax(self.row(s))
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &ActionValues) -> f64 {
        self.q.iter().zip(&other.q).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }
}

/// Index of the largest entry, lowest index on ties.
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (a, &q) in row.iter().enumerate().skip(1) {
        if q > row[best] {
            best = a;
        }
    }
    best
}

/// A deterministic stationary policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    actions: Vec<usize>,
}

impl Policy {
    pub fn new(actions: Vec<usize>, num_actions: usize) -> Result<Self, MdpError> {
        if let Some(&action) = actions.iter().find(|&&a| a >= num_actions) {
            return Err(MdpError::ActionOutOfRange { action, num_actions });
        }
        Ok(Self { actions })
    }

    /// The same action in every state.
    pub fn constant(num_states: usize, action: usize) -> Self {
        Self { actions: vec![action; num_states] }
    }

    #[inline]
    pub fn action(&self, s: usize) -> usize {
        self.actions[s]
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Membership of state-action pairs in a known set `K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnownSet {
    num_actions: usize,
    members: Vec<bool>,
}

impl KnownSet {
    pub fn empty(num_states: usize, num_actions: usize) -> Self {
        Self { num_actions, members: vec![false; num_states * num_actions] }
    }

    pub fn full(num_states: usize, num_actions: usize) -> Self {
        Self { num_actions, members: vec![true; num_states * num_actions] }
    }

    #[inline]
    pub fn contains(&self, s: usize, a: usize) -> bool {
        self.members[s * self.num_actions + a]
    }

    pub fn insert(&mut self, s: usize, a: usize) {
        self.members[s * self.num_actions + a] = true;
    }

    pub fn remove(&mut self, s: usize, a: usize) {
        self.members[s * self.num_actions + a] = false;
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&k| k).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_states(&self) -> usize {
        self.members.len() / self.num_actions
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }
}

/// `R(s, a) + γ Σ T(s' | s, a) V(s')`. Does not mutate `values`.
pub fn bellman_backup(mdp: &Mdp, values: &ActionValues, s: usize, a: usize) -> Result<f64, MdpError> {
    mdp.check_pair(s, a)?;
    if values.num_states() < mdp.num_states() || values.num_actions() != mdp.num_actions() {
        return Err(MdpError::DimensionMismatch {
            expected: mdp.num_states() * mdp.num_actions(),
            actual: values.as_slice().len(),
        });
    }
    Ok(mdp.backup(values, s, a))
}

/// Greedy policy of `values`, ties broken by lowest action index.
pub fn greedy_policy(values: &ActionValues) -> Policy {
    Policy { actions: (0..values.num_states()).map(|s| values.greedy_action(s)).collect() }
}

/// The known state-action MDP of `base` with respect to `values` and `known`.
///
/// The result has `S + 1` states. State `S` is absorbing with zero reward.
/// Pairs in `known` copy the dynamics of `base`; every other pair earns
/// `Q(s, a)` once and moves to the absorbing state.
pub fn build_known_mdp(base: &Mdp, values: &ActionValues, known: &KnownSet) -> Result<Mdp, MdpError> {
    let (ns, na) = (base.num_states(), base.num_actions());
    if values.num_states() != ns || values.num_actions() != na {
        return Err(MdpError::DimensionMismatch { expected: ns * na, actual: values.as_slice().len() });
    }
    if known.num_states() != ns || known.num_actions() != na {
        return Err(MdpError::DimensionMismatch { expected: ns * na, actual: known.members.len() });
    }
    let absorbing = ns;
    let mut rewards = Vec::with_capacity((ns + 1) * na);
    let mut rows = Vec::with_capacity((ns + 1) * na);
    let mut bound = base.max_reward();
    for s in 0..ns {
        for a in 0..na {
            if known.contains(s, a) {
                rewards.push(base.reward(s, a));
                rows.push(base.successors(s, a).to_vec());
            } else {
                let q = values.get(s, a).max(0.0);
                bound = bound.max(q);
                rewards.push(q);
                rows.push(vec![(absorbing, 1.0)]);
            }
        }
    }
    for _ in 0..na {
        rewards.push(0.0);
        rows.push(vec![(absorbing, 1.0)]);
    }
    Mdp::with_reward_bound(ns + 1, na, base.discount(), rewards, rows, bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn self_loop(reward: f64, gamma: f64) -> Mdp {
        Mdp::new(1, 1, gamma, vec![reward], vec![vec![(0, 1.0)]]).unwrap()
    }

    #[test]
    fn backup_on_self_loop() {
        let mdp = self_loop(0.0, 0.95);
        let v = ActionValues::constant(1, 1, 20.0);
        assert!((bellman_backup(&mdp, &v, 0, 0).unwrap() - 19.0).abs() < 1e-12);
    }

    #[test]
    fn backup_without_discount_is_reward() {
        let mdp = Mdp::new(2, 1, 0.0, vec![0.3, 0.7], vec![vec![(1, 1.0)], vec![(0, 1.0)]]).unwrap();
        let v = ActionValues::constant(2, 1, 5.0);
        assert_eq!(bellman_backup(&mdp, &v, 1, 0).unwrap(), 0.7);
    }

    #[test]
    fn backup_two_state_mix() {
        let mdp = Mdp::new(
            2,
            1,
            0.9,
            vec![0.3, 0.0],
            vec![vec![(0, 0.5), (1, 0.5)], vec![(1, 1.0)]],
        )
        .unwrap();
        let v = ActionValues::from_vec(2, 1, vec![1.0, 2.0]).unwrap();
        assert!((bellman_backup(&mdp, &v, 0, 0).unwrap() - 1.65).abs() < 1e-12);
        // values untouched
        assert_eq!(v.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn backup_rejects_bad_indices() {
        let mdp = self_loop(0.0, 0.5);
        let v = ActionValues::constant(1, 1, 0.0);
        assert!(matches!(bellman_backup(&mdp, &v, 1, 0), Err(MdpError::StateOutOfRange { .. })));
        assert!(matches!(bellman_backup(&mdp, &v, 0, 3), Err(MdpError::ActionOutOfRange { .. })));
    }

    #[test]
    fn construction_validates_rows() {
        let bad_sum = Mdp::new(2, 1, 0.9, vec![0.0, 0.0], vec![vec![(0, 0.5)], vec![(1, 1.0)]]);
        assert!(matches!(bad_sum, Err(MdpError::RowSum { .. })));
        let zero_prob =
            Mdp::new(2, 1, 0.9, vec![0.0, 0.0], vec![vec![(0, 1.0), (1, 0.0)], vec![(1, 1.0)]]);
        assert!(matches!(zero_prob, Err(MdpError::InvalidProbability { .. })));
        let big_reward = Mdp::new(1, 1, 0.9, vec![1.5], vec![vec![(0, 1.0)]]);
        assert!(matches!(big_reward, Err(MdpError::InvalidReward { .. })));
        assert!(Mdp::with_reward_bound(1, 1, 0.9, vec![1.5], vec![vec![(0, 1.0)]], 2.0).is_ok());
        assert!(matches!(self_loop_discount(1.0), Err(MdpError::InvalidDiscount(_))));
    }

    fn self_loop_discount(gamma: f64) -> Result<Mdp, MdpError> {
        Mdp::new(1, 1, gamma, vec![0.0], vec![vec![(0, 1.0)]])
    }

    #[test]
    fn duplicate_successors_merge_and_branching() {
        let mdp = Mdp::new(
            3,
            1,
            0.9,
            vec![0.0; 3],
            vec![vec![(2, 0.25), (0, 0.5), (2, 0.25)], vec![(1, 1.0)], vec![(0, 1.0)]],
        )
        .unwrap();
        assert_eq!(mdp.successors(0, 0), &[(0, 0.5), (2, 0.5)]);
        assert_eq!(mdp.branching(), 2);
    }

    #[test]
    fn greedy_ties_and_argmax() {
        let v = ActionValues::constant(3, 4, 1.0);
        assert_eq!(greedy_policy(&v).actions(), &[0, 0, 0]);
        let v = ActionValues::from_vec(1, 3, vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(greedy_policy(&v).action(0), 1);
    }

    #[test]
    fn known_mdp_with_everything_known_copies_base() {
        let base = Mdp::new(
            2,
            2,
            0.9,
            vec![0.1, 0.2, 0.3, 0.4],
            vec![vec![(0, 0.5), (1, 0.5)], vec![(1, 1.0)], vec![(0, 1.0)], vec![(1, 1.0)]],
        )
        .unwrap();
        let q = ActionValues::constant(2, 2, 7.0);
        let known = build_known_mdp(&base, &q, &KnownSet::full(2, 2)).unwrap();
        assert_eq!(known.num_states(), 3);
        for s in 0..2 {
            for a in 0..2 {
                assert_eq!(known.reward(s, a), base.reward(s, a));
                assert_eq!(known.successors(s, a), base.successors(s, a));
                assert!(known.successors(s, a).iter().all(|&(n, _)| n != 2));
            }
        }
        for a in 0..2 {
            assert_eq!(known.reward(2, a), 0.0);
            assert_eq!(known.successors(2, a), &[(2, 1.0)]);
        }
    }

    #[test]
    fn known_mdp_with_nothing_known_absorbs() {
        let base = Mdp::new(2, 2, 0.9, vec![0.0; 4], vec![vec![(1, 1.0)]; 4]).unwrap();
        let q = ActionValues::from_vec(2, 2, vec![3.0, 8.0, 9.5, 1.0]).unwrap();
        let known = build_known_mdp(&base, &q, &KnownSet::empty(2, 2)).unwrap();
        assert_eq!(known.reward(0, 1), 8.0);
        assert_eq!(known.successors(1, 0), &[(2, 1.0)]);
    }
}
