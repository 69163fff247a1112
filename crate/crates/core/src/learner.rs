//! Greedy model-based agents.
//!
//! Every agent keeps an optimistic action-value table, acts greedily on it
//! (lowest action index on ties) and reports how many Bellman backups each
//! timestep cost:
//!
//! * `RtdpRmax`: one backup of the visited pair on the empirical model once
//!   the pair has `m` samples; unknown pairs keep the optimistic value.
//! * `RtdpIe`: one backup of the visited pair with an exploration bonus
//!   `β / √n` added.
//! * `Rmax` / `Mbie`: the same models, solved whenever they change.
//! * `AdaptiveRtdp`: `RtdpRmax` with `m = 1`.
//! * `Optimal` / `Random`: references that never back up.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::heap::ActionHeaps;
use crate::math::sqrt;
use crate::mdp::{greedy_policy, ActionValues, KnownSet, Mdp, MdpError, Policy};
use crate::model::{EmpiricalModel, ModelError};
use crate::solve::value_iteration;

/// Residual tolerance used to precompute the optimal reference policy.
const REFERENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearnerError {
    #[error("the optimal agent needs the true MDP")]
    MissingTrueMdp,
    #[error("invalid learner configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("{0} is only defined for RTDP-RMAX learners")]
    Unsupported(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LearnerKind {
    RtdpRmax,
    RtdpIe,
    Rmax,
    Mbie,
    AdaptiveRtdp,
    Optimal,
    Random,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 7] = [
        LearnerKind::RtdpRmax,
        LearnerKind::RtdpIe,
        LearnerKind::Rmax,
        LearnerKind::Mbie,
        LearnerKind::AdaptiveRtdp,
        LearnerKind::Optimal,
        LearnerKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::RtdpRmax => "rtdp-rmax",
            LearnerKind::RtdpIe => "rtdp-ie",
            LearnerKind::Rmax => "rmax",
            LearnerKind::Mbie => "mbie",
            LearnerKind::AdaptiveRtdp => "adaptive-rtdp",
            LearnerKind::Optimal => "optimal",
            LearnerKind::Random => "random",
        }
    }

    /// Whether the agent's exploration is controlled by `m` (otherwise `β`).
    pub fn uses_m(self) -> bool {
        matches!(self, LearnerKind::RtdpRmax | LearnerKind::Rmax | LearnerKind::AdaptiveRtdp)
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.trim().to_ascii_lowercase().replace('_', "-");
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.name() == normalized)
            .ok_or("expected one of rtdp-rmax, rtdp-ie, rmax, mbie, adaptive-rtdp, optimal, random")
    }
}

/// `Classic` is the algorithm as usually run. `Modified` applies an update
/// only when it lowers the entry by at least `epsilon_one`, and RTDP-IE
/// replaces its bonus by `epsilon_one` once a pair has `m` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateMode {
    Classic,
    Modified,
}

impl UpdateMode {
    pub fn name(self) -> &'static str {
        match self {
            UpdateMode::Classic => "classic",
            UpdateMode::Modified => "modified",
        }
    }
}

impl fmt::Display for UpdateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UpdateMode {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "classic" => Ok(UpdateMode::Classic),
            "modified" => Ok(UpdateMode::Modified),
            _ => Err("expected classic or modified"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    /// Samples before a pair counts as known (RMAX family).
    pub m: u64,
    /// Exploration bonus scale (interval-estimation family).
    pub beta: f64,
    /// Minimum decrease for an update in modified mode.
    pub epsilon_one: f64,
    pub mode: UpdateMode,
    /// Samples per pair kept in the empirical model.
    pub model_cap: u64,
    /// Residual tolerance of the RMAX/MBIE model solves.
    pub vi_tol: f64,
    pub gamma: f64,
    /// Largest reward the environment can emit. Action values start at
    /// `rmax_reward / (1 - gamma)`.
    pub rmax_reward: f64,
    /// Skip RTDP backups whose inputs (model row, bonus and successor
    /// values) are unchanged since the pair's previous backup. The skipped
    /// backup would reproduce the stored result exactly.
    pub skip_redundant: bool,
}

impl LearnerConfig {
    pub fn new(kind: LearnerKind) -> Self {
        Self {
            kind,
            m: 1,
            beta: 0.0,
            epsilon_one: 0.0,
            mode: UpdateMode::Classic,
            model_cap: 100,
            vi_tol: 0.01,
            gamma: 0.95,
            rmax_reward: 1.0,
            skip_redundant: true,
        }
    }

    /// The optimistic initial action value.
    pub fn optimistic_value(&self) -> f64 {
        self.rmax_reward / (1.0 - self.gamma)
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(LearnerError::InvalidConfig("gamma must lie in [0, 1)"));
        }
        if self.kind.uses_m() && self.kind != LearnerKind::AdaptiveRtdp && self.m == 0 {
            return Err(LearnerError::InvalidConfig("m must be at least 1"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(LearnerError::InvalidConfig("beta must be finite and non-negative"));
        }
        if !(self.epsilon_one >= 0.0 && self.epsilon_one.is_finite()) {
            return Err(LearnerError::InvalidConfig("epsilon_one must be finite and non-negative"));
        }
        if self.mode == UpdateMode::Modified && self.epsilon_one <= 0.0 {
            return Err(LearnerError::InvalidConfig("modified mode needs epsilon_one > 0"));
        }
        if self.model_cap == 0 {
            return Err(LearnerError::InvalidConfig("model_cap must be at least 1"));
        }
        if !(self.vi_tol > 0.0 && self.vi_tol.is_finite()) {
            return Err(LearnerError::InvalidConfig("vi_tol must be positive"));
        }
        if !(self.rmax_reward > 0.0 && self.rmax_reward.is_finite()) {
            return Err(LearnerError::InvalidConfig("rmax_reward must be positive"));
        }
        Ok(())
    }
}

/// What one learner step did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UpdateOutcome {
    /// An action value was assigned.
    pub applied: bool,
    /// Bellman backups evaluated during the step.
    pub backups: u64,
}

// Bookkeeping for skipping RTDP backups whose inputs did not change. Stamps
// come from one counter, so "changed after the last backup" is a comparison.
#[derive(Debug, Clone)]
struct Freshness {
    clock: u64,
    value_changed: Vec<u64>,
    model_changed: Vec<u64>,
    backed_up: Vec<u64>,
    last_bonus: Vec<f64>,
}

impl Freshness {
    fn new(num_states: usize, pairs: usize) -> Self {
        Self {
            clock: 0,
            value_changed: vec![0; num_states],
            model_changed: vec![0; pairs],
            backed_up: vec![0; pairs],
            last_bonus: vec![0.0; pairs],
        }
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }
}


/// A learning agent and its state.
#[derive(Debug, Clone)]
pub struct Learner {
    config: LearnerConfig,
    m: u64,
    num_states: usize,
    num_actions: usize,
    values: ActionValues,
    model: EmpiricalModel,
    heaps: ActionHeaps,
    backups: u64,
    updates_applied: Vec<u64>,
    rng: ChaCha8Rng,
    reference_policy: Option<Policy>,
    // RMAX/MBIE: solution of the model MDP, S + 1 rows (the last is its
    // absorbing state)
    model_values: Option<ActionValues>,
    freshness: Freshness,
}

impl Learner {
    /// Builds a learner for an MDP with the given dimensions.
    ///
    /// `true_mdp` is required by the optimal reference agent only. `seed`
    /// drives the random reference agent.
    pub fn new(
        config: &LearnerConfig,
        num_states: usize,
        num_actions: usize,
        true_mdp: Option<&Mdp>,
        seed: u64,
    ) -> Result<Self, LearnerError> {
        config.validate()?;
        if num_states == 0 || num_actions == 0 {
            return Err(LearnerError::Mdp(MdpError::Empty));
        }
        let m = if config.kind == LearnerKind::AdaptiveRtdp { 1 } else { config.m };
        let init = config.optimistic_value();
        let values = ActionValues::constant(num_states, num_actions, init);
        let pairs = num_states * num_actions;

        let reference_policy = match config.kind {
            LearnerKind::Optimal => {
                let mdp = true_mdp.ok_or(LearnerError::MissingTrueMdp)?;
                let solved = value_iteration(mdp, REFERENCE_TOL, &ActionValues::constant(mdp.num_states(), mdp.num_actions(), 0.0))?;
                Some(greedy_policy(&solved.values))
            }
            _ => None,
        };
        let model_values = match config.kind {
            LearnerKind::Rmax | LearnerKind::Mbie => {
                let mut model_values = ActionValues::constant(num_states + 1, num_actions, init);
                for a in 0..num_actions {
                    model_values.set(num_states, a, 0.0);
                }
                Some(model_values)
            }
            _ => None,
        };

        Ok(Self {
            heaps: ActionHeaps::new(&values),
            model: EmpiricalModel::new(num_states, num_actions, config.gamma, config.model_cap, config.rmax_reward),
            config: config.clone(),
            m,
            num_states,
            num_actions,
            values,
            backups: 0,
            updates_applied: vec![0; pairs],
            rng: ChaCha8Rng::seed_from_u64(seed),
            reference_policy,
            model_values,
            freshness: Freshness::new(num_states, pairs),
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn kind(&self) -> LearnerKind {
        self.config.kind
    }

    pub fn values(&self) -> &ActionValues {
        &self.values
    }

    pub fn model(&self) -> &EmpiricalModel {
        &self.model
    }

    /// Cumulative backups reported so far.
    pub fn backups(&self) -> u64 {
        self.backups
    }

    pub fn updates_applied(&self, s: usize, a: usize) -> u64 {
        self.updates_applied[s * self.num_actions + a]
    }

    /// The greedy action at `s` (ties by lowest index). The random agent
    /// draws uniformly instead; the optimal agent follows its precomputed
    /// policy.
    pub fn select_action(&mut self, s: usize) -> usize {
        match self.config.kind {
            LearnerKind::Optimal => self.reference_policy.as_ref().map_or(0, |p| p.action(s)),
            LearnerKind::Random => self.rng.gen_range(0..self.num_actions),
            _ => self.heaps.top(s),
        }
    }

    /// Feeds the transition just experienced to the agent.
    pub fn observe(&mut self, s: usize, a: usize, reward: f64, next: usize) -> Result<UpdateOutcome, LearnerError> {
        let outcome = match self.config.kind {
            LearnerKind::RtdpRmax | LearnerKind::AdaptiveRtdp => self.step_rtdp_rmax(s, a, reward, next)?,
            LearnerKind::RtdpIe => self.step_rtdp_ie(s, a, reward, next)?,
            LearnerKind::Rmax => self.step_rmax(s, a, reward, next)?,
            LearnerKind::Mbie => self.step_mbie(s, a, reward, next)?,
            LearnerKind::Optimal | LearnerKind::Random => UpdateOutcome::default(),
        };
        self.backups += outcome.backups;
        Ok(outcome)
    }

    fn record(&mut self, s: usize, a: usize, reward: f64, next: usize) -> Result<bool, LearnerError> {
        let changed = self.model.record(s, a, reward, next)?;
        if changed {
            self.freshness.model_changed[s * self.num_actions + a] = self.freshness.tick();
        }
        Ok(changed)
    }

    fn set_value(&mut self, s: usize, a: usize, q: f64) {
        let before = self.values.get(s, self.heaps.top(s));
        self.values.set(s, a, q);
        self.heaps.update(&self.values, s, a);
        let after = self.values.get(s, self.heaps.top(s));
        if after != before {
            self.freshness.value_changed[s] = self.freshness.tick();
        }
    }

    fn needs_backup(&self, s: usize, a: usize, bonus: f64) -> bool {
        if !self.config.skip_redundant {
            return true;
        }
        let idx = s * self.num_actions + a;
        let f = &self.freshness;
        let last = f.backed_up[idx];
        last == 0
            || f.model_changed[idx] > last
            || f.last_bonus[idx] != bonus
            || self.model.transition_counts(s, a).iter().any(|&(next, _)| f.value_changed[next] > last)
    }

    // One empirical backup of (s, a), applied unless the modified-mode gate
    // rejects it.
    fn rtdp_update(&mut self, s: usize, a: usize, bonus: f64) -> Result<UpdateOutcome, LearnerError> {
        if !self.needs_backup(s, a, bonus) {
            return Ok(UpdateOutcome::default());
        }
        let candidate = self.model.empirical_backup(&self.values, s, a, bonus)?;
        let idx = s * self.num_actions + a;
        self.freshness.backed_up[idx] = self.freshness.tick();
        self.freshness.last_bonus[idx] = bonus;
        let apply = match self.config.mode {
            UpdateMode::Classic => true,
            UpdateMode::Modified => self.values.get(s, a) - candidate >= self.config.epsilon_one,
        };
        if apply {
            self.set_value(s, a, candidate);
            self.updates_applied[idx] += 1;
        }
        Ok(UpdateOutcome { applied: apply, backups: 1 })
    }

    /// RTDP-RMAX: records the sample, then backs up `(s, a)` once it has at
    /// least `m` samples.
    pub fn step_rtdp_rmax(&mut self, s: usize, a: usize, reward: f64, next: usize) -> Result<UpdateOutcome, LearnerError> {
        self.record(s, a, reward, next)?;
        if self.model.count(s, a) < self.m {
            return Ok(UpdateOutcome::default());
        }
        self.rtdp_update(s, a, 0.0)
    }

    /// The interval-estimation bonus for a pair with `n` samples.
    pub fn exploration_bonus(&self, n: u64) -> f64 {
        match self.config.mode {
            UpdateMode::Modified if n >= self.m => self.config.epsilon_one,
            _ => self.config.beta / sqrt(n.max(1) as f64),
        }
    }

    /// RTDP-IE: records the sample, then backs up `(s, a)` with the bonus
    /// `β / √n(s, a)`.
    pub fn step_rtdp_ie(&mut self, s: usize, a: usize, reward: f64, next: usize) -> Result<UpdateOutcome, LearnerError> {
        self.record(s, a, reward, next)?;
        let bonus = self.exploration_bonus(self.model.count(s, a));
        self.rtdp_update(s, a, bonus)
    }

    /// RMAX: re-solves the model whenever a known pair's statistics change
    /// or a pair becomes known.
    pub fn step_rmax(&mut self, s: usize, a: usize, reward: f64, next: usize) -> Result<UpdateOutcome, LearnerError> {
        let changed = self.record(s, a, reward, next)?;
        let n = self.model.count(s, a);
        let m = self.m;
        if n < m || !(n == m || changed) {
            return Ok(UpdateOutcome::default());
        }
        let mdp = self.model.as_mdp(self.config.optimistic_value(), m, |_, _| 0.0)?;
        self.solve_model(&mdp)
    }

    /// MBIE: the bonus `β / √n` is folded into the model's rewards; the
    /// model is re-solved whenever its statistics or a bonus change.
    pub fn step_mbie(&mut self, s: usize, a: usize, reward: f64, next: usize) -> Result<UpdateOutcome, LearnerError> {
        let changed = self.record(s, a, reward, next)?;
        let beta = self.config.beta;
        if !changed && beta == 0.0 {
            return Ok(UpdateOutcome::default());
        }
        let model = &self.model;
        let mdp = model.as_mdp(self.config.optimistic_value(), 1, |ps, pa| {
            let n = model.count(ps, pa);
            if n == 0 {
                0.0
            } else {
                beta / sqrt(n as f64)
            }
        })?;
        self.solve_model(&mdp)
    }

    fn solve_model(&mut self, mdp: &Mdp) -> Result<UpdateOutcome, LearnerError> {
        let stored = self.model_values.as_ref().ok_or(LearnerError::InvalidConfig("learner has no model solution"))?;
        let solved = value_iteration(mdp, self.config.vi_tol, stored)?;
        let mut applied = false;
        for st in 0..self.num_states {
            let mut touched = false;
            for ac in 0..self.num_actions {
                let q = solved.values.get(st, ac);
                if q != self.values.get(st, ac) {
                    self.values.set(st, ac, q);
                    self.updates_applied[st * self.num_actions + ac] += 1;
                    touched = true;
                }
            }
            if touched {
                self.heaps.rebuild(&self.values, st);
                applied = true;
            }
        }
        self.model_values = Some(solved.values);
        Ok(UpdateOutcome { applied, backups: solved.backups })
    }

    /// The known set `K_t`: pairs with at least `m` samples whose current
    /// value exceeds their empirical backup by at most `epsilon_one`.
    /// The backups evaluated here are not reported.
    pub fn known_set(&self) -> Result<KnownSet, LearnerError> {
        if !matches!(self.config.kind, LearnerKind::RtdpRmax | LearnerKind::AdaptiveRtdp) {
            return Err(LearnerError::Unsupported("known_set"));
        }
        let mut known = KnownSet::empty(self.num_states, self.num_actions);
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                if self.model.count(s, a) < self.m {
                    continue;
                }
                let backup = self.model.empirical_backup(&self.values, s, a, 0.0)?;
                if self.values.get(s, a) - backup <= self.config.epsilon_one {
                    known.insert(s, a);
                }
            }
        }
        Ok(known)
    }

    /// Whether `Q(s, a) >= Q*(s, a) - slack` holds for every pair.
    pub fn check_optimism(&self, q_star: &ActionValues, slack: f64) -> bool {
        (0..self.num_states)
            .all(|s| (0..self.num_actions).all(|a| self.values.get(s, a) >= q_star.get(s, a) - slack))
    }
}
