//! Trials, checkpointed metrics and their aggregation.

use alloc::vec::Vec;

use crate::env::{bandit_chain_mdp, generate_random_mdp, EnvState, RandomMdpParams, RewardNoise};
use crate::learner::{Learner, LearnerConfig, LearnerError, LearnerKind, UpdateOutcome};
use crate::math::sqrt;
use crate::mdp::{Mdp, MdpError};

/// Default safety cap on trial length.
pub const DEFAULT_MAX_TIMESTEPS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// Which environment a trial runs in.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    BanditChain { gamma: f64 },
    /// A fresh random MDP per trial.
    Random(RandomMdpParams),
    /// The same MDP in every trial.
    Fixed(Mdp),
}

impl EnvSpec {
    /// The MDP of trial `trial_index`.
    pub fn build(&self, base_seed: u64, trial_index: u64) -> Result<Mdp, MdpError> {
        match self {
            EnvSpec::BanditChain { gamma } => bandit_chain_mdp(*gamma),
            EnvSpec::Random(params) => generate_random_mdp(derive_seed(base_seed, trial_index, STREAM_MDP), params),
            EnvSpec::Fixed(mdp) => Ok(mdp.clone()),
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            EnvSpec::BanditChain { gamma } => *gamma,
            EnvSpec::Random(params) => params.gamma,
            EnvSpec::Fixed(mdp) => mdp.discount(),
        }
    }

    /// Largest reward the environment can emit, at least 1. Learners use it
    /// as `rmax_reward`.
    pub fn reward_bound(&self) -> f64 {
        match self {
            EnvSpec::BanditChain { .. } => BANDIT_REWARD_BOUND,
            EnvSpec::Random(_) => 1.0,
            EnvSpec::Fixed(mdp) => mdp.max_reward().max(1.0),
        }
    }
}

// (3/2)^6, the payoff of the longest arm
const BANDIT_REWARD_BOUND: f64 = 11.390625;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub learner: LearnerConfig,
    pub repetitions: u64,
    /// Record a checkpoint every this many units of cumulative reward. The
    /// target itself is always the last checkpoint.
    pub checkpoint_interval: Option<f64>,
    /// Trials stop once their cumulative reward reaches this.
    pub reward_target: f64,
    pub max_timesteps: u64,
    pub base_seed: u64,
    pub reward_noise: RewardNoise,
    pub start_state: usize,
}

impl ExperimentConfig {
    pub fn new(env: EnvSpec, learner: LearnerConfig, reward_target: f64) -> Self {
        Self {
            env,
            learner,
            repetitions: 1,
            checkpoint_interval: None,
            reward_target,
            max_timesteps: DEFAULT_MAX_TIMESTEPS,
            base_seed: 0,
            reward_noise: RewardNoise::Deterministic,
            start_state: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.repetitions == 0 {
            return Err(ExperimentError::InvalidConfig("repetitions must be at least 1"));
        }
        if !(self.reward_target > 0.0 && self.reward_target.is_finite()) {
            return Err(ExperimentError::InvalidConfig("reward target must be positive"));
        }
        if let Some(interval) = self.checkpoint_interval {
            if !(interval > 0.0 && interval.is_finite()) {
                return Err(ExperimentError::InvalidConfig("checkpoint interval must be positive"));
            }
        }
        if self.learner.gamma != self.env.gamma() {
            return Err(ExperimentError::InvalidConfig("learner gamma differs from the environment's"));
        }
        self.learner.validate()?;
        Ok(())
    }

    /// Checkpoint levels in reward units, ascending.
    pub fn checkpoint_levels(&self) -> Vec<f64> {
        match self.checkpoint_interval {
            None => alloc::vec![self.reward_target],
            Some(interval) => {
                let mut levels = Vec::new();
                let mut k = 1u64;
                loop {
                    let level = k as f64 * interval;
                    if level > self.reward_target {
                        break;
                    }
                    levels.push(level);
                    k += 1;
                }
                if levels.last() != Some(&self.reward_target) {
                    levels.push(self.reward_target);
                }
                levels
            }
        }
    }
}

const STREAM_MDP: u64 = 0;
const STREAM_ENV: u64 = 1;
const STREAM_AGENT: u64 = 2;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of stream `stream` for trial `trial_index`.
pub fn derive_seed(base_seed: u64, trial_index: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ trial_index) ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    /// Cumulative-reward level crossed.
    pub reward: f64,
    pub timestep: u64,
    pub backups: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    pub checkpoints: Vec<Checkpoint>,
    pub total_reward: f64,
    pub total_timesteps: u64,
    pub total_backups: u64,
    /// The step cap was hit before the reward target.
    pub truncated: bool,
}

/// One timestep as seen by a trial observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// 1-based timestep.
    pub timestep: u64,
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    pub outcome: UpdateOutcome,
}

/// Runs trial `trial_index` of `config`.
pub fn run_trial(config: &ExperimentConfig, trial_index: u64) -> Result<TrialTrace, ExperimentError> {
    run_trial_observed(config, trial_index, |_, _| {})
}

/// Runs a trial, calling `observer` after every learner update.
pub fn run_trial_observed(
    config: &ExperimentConfig,
    trial_index: u64,
    mut observer: impl FnMut(&StepRecord, &Learner),
) -> Result<TrialTrace, ExperimentError> {
    config.validate()?;
    let mdp = config.env.build(config.base_seed, trial_index)?;
    let true_mdp = (config.learner.kind == LearnerKind::Optimal).then_some(&mdp);
    let mut learner = Learner::new(
        &config.learner,
        mdp.num_states(),
        mdp.num_actions(),
        true_mdp,
        derive_seed(config.base_seed, trial_index, STREAM_AGENT),
    )?;
    let mut env = EnvState::new(
        &mdp,
        config.start_state,
        config.reward_noise,
        derive_seed(config.base_seed, trial_index, STREAM_ENV),
    )?;

    let levels = config.checkpoint_levels();
    let mut next_level = 0;
    let mut checkpoints = Vec::with_capacity(levels.len());
    let mut total_reward = 0.0;
    let mut total_backups = 0u64;
    let mut t = 0u64;
    while total_reward < config.reward_target && t < config.max_timesteps {
        let s = env.current();
        let a = learner.select_action(s);
        let (reward, next) = env.step(a)?;
        let outcome = learner.observe(s, a, reward, next)?;
        t += 1;
        total_reward += reward;
        total_backups += outcome.backups;
        observer(
            &StepRecord { timestep: t, state: s, action: a, reward, next_state: next, outcome },
            &learner,
        );
        while next_level < levels.len() && total_reward >= levels[next_level] {
            checkpoints.push(Checkpoint { reward: levels[next_level], timestep: t, backups: total_backups });
            next_level += 1;
        }
    }

    Ok(TrialTrace {
        checkpoints,
        total_reward,
        total_timesteps: t,
        total_backups,
        truncated: total_reward < config.reward_target,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub checkpoint_reward: f64,
    pub mean_timesteps: f64,
    pub se_timesteps: f64,
    pub mean_backups: f64,
    pub se_backups: f64,
    /// Trials that reached this checkpoint.
    pub n_trials: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AggregateRecord {
    pub rows: Vec<AggregateRow>,
    pub repetitions: u64,
    /// Trials that hit the step cap.
    pub truncated_trials: u64,
}

impl AggregateRecord {
    /// The row at the highest checkpoint.
    pub fn final_row(&self) -> Option<&AggregateRow> {
        self.rows.last()
    }

    pub fn row_at(&self, reward: f64) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.checkpoint_reward == reward)
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, sqrt(var / n))
}

/// Averages traces checkpoint by checkpoint. A truncated trace contributes
/// only to the checkpoints it reached.
pub fn aggregate(traces: &[TrialTrace]) -> AggregateRecord {
    let depth = traces.iter().map(|t| t.checkpoints.len()).max().unwrap_or(0);
    let mut rows = Vec::with_capacity(depth);
    for k in 0..depth {
        let reached: Vec<&Checkpoint> = traces.iter().filter_map(|t| t.checkpoints.get(k)).collect();
        let steps: Vec<f64> = reached.iter().map(|c| c.timestep as f64).collect();
        let backups: Vec<f64> = reached.iter().map(|c| c.backups as f64).collect();
        let (mean_timesteps, se_timesteps) = mean_and_se(&steps);
        let (mean_backups, se_backups) = mean_and_se(&backups);
        rows.push(AggregateRow {
            checkpoint_reward: reached[0].reward,
            mean_timesteps,
            se_timesteps,
            mean_backups,
            se_backups,
            n_trials: reached.len() as u64,
        });
    }
    AggregateRecord {
        rows,
        repetitions: traces.len() as u64,
        truncated_trials: traces.iter().filter(|t| t.truncated).count() as u64,
    }
}

/// Runs every repetition in order and aggregates.
pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateRecord, ExperimentError> {
    let traces = (0..config.repetitions).map(|i| run_trial(config, i)).collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(&traces))
}

/// The learner parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// `m`; with `cap_follows_m` the model cap is set to `m` as well.
    M { cap_follows_m: bool },
    Beta,
}

impl SweepParam {
    /// The natural parameter of `kind`.
    pub fn for_kind(kind: LearnerKind, cap_follows_m: bool) -> Self {
        if kind.uses_m() {
            SweepParam::M { cap_follows_m }
        } else {
            SweepParam::Beta
        }
    }

    pub fn apply(&self, learner: &mut LearnerConfig, value: f64) {
        match *self {
            SweepParam::M { cap_follows_m } => {
                learner.m = value as u64;
                if cap_follows_m {
                    learner.model_cap = learner.m;
                }
            }
            SweepParam::Beta => learner.beta = value,
        }
    }
}

/// Index of the best sweep entry: fewest mean timesteps at the final
/// checkpoint, then fewest backups, then the smaller parameter. Entries
/// where some trial was truncated are ranked last.
pub fn select_best(results: &[(f64, AggregateRecord)]) -> Option<usize> {
    let key = |(param, record): &(f64, AggregateRecord)| {
        let complete = record.truncated_trials == 0 && record.final_row().is_some();
        let (steps, backups) = record.final_row().map_or((f64::INFINITY, f64::INFINITY), |r| (r.mean_timesteps, r.mean_backups));
        (!complete, steps, backups, *param)
    };
    (0..results.len()).min_by(|&i, &j| {
        let (a, b) = (key(&results[i]), key(&results[j]));
        a.0.cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
            .then(a.3.total_cmp(&b.3))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn trace(points: &[(f64, u64, u64)]) -> TrialTrace {
        TrialTrace {
            checkpoints: points.iter().map(|&(reward, timestep, backups)| Checkpoint { reward, timestep, backups }).collect(),
            total_reward: points.last().map_or(0.0, |p| p.0),
            total_timesteps: points.last().map_or(0, |p| p.1),
            total_backups: points.last().map_or(0, |p| p.2),
            truncated: false,
        }
    }

    #[test]
    fn single_trace_aggregates_to_itself() {
        let t = trace(&[(20.0, 30, 5), (40.0, 70, 9)]);
        let agg = aggregate(std::slice::from_ref(&t));
        assert_eq!(agg.rows.len(), 2);
        for (row, c) in agg.rows.iter().zip(&t.checkpoints) {
            assert_eq!(row.mean_timesteps, c.timestep as f64);
            assert_eq!(row.mean_backups, c.backups as f64);
            assert_eq!(row.se_timesteps, 0.0);
            assert_eq!(row.n_trials, 1);
        }
    }

    #[test]
    fn identical_traces_have_zero_spread() {
        let t = trace(&[(20.0, 30, 5)]);
        let agg = aggregate(&[t.clone(), t]);
        assert_eq!(agg.rows[0].se_timesteps, 0.0);
        assert_eq!(agg.rows[0].se_backups, 0.0);
        assert_eq!(agg.rows[0].n_trials, 2);
    }

    #[test]
    fn ragged_traces() {
        let mut short = trace(&[(20.0, 10, 1)]);
        short.truncated = true;
        let long = trace(&[(20.0, 30, 3), (40.0, 50, 5)]);
        let agg = aggregate(&[short, long]);
        assert_eq!(agg.rows[0].n_trials, 2);
        assert_eq!(agg.rows[0].mean_timesteps, 20.0);
        assert_eq!(agg.rows[1].n_trials, 1);
        assert_eq!(agg.truncated_trials, 1);
        assert!(aggregate(&[]).rows.is_empty());
    }

    #[test]
    fn seeds_differ_by_trial_and_stream() {
        assert_eq!(derive_seed(1, 2, 0), derive_seed(1, 2, 0));
        assert_ne!(derive_seed(1, 2, 0), derive_seed(1, 3, 0));
        assert_ne!(derive_seed(1, 2, 0), derive_seed(1, 2, 1));
        assert_ne!(derive_seed(1, 2, 0), derive_seed(2, 2, 0));
    }

    #[test]
    fn checkpoint_levels() {
        let mut c = ExperimentConfig::new(EnvSpec::BanditChain { gamma: 0.95 }, LearnerConfig::new(LearnerKind::Random), 100.0);
        assert_eq!(c.checkpoint_levels(), vec![100.0]);
        c.checkpoint_interval = Some(30.0);
        assert_eq!(c.checkpoint_levels(), vec![30.0, 60.0, 90.0, 100.0]);
    }

    #[test]
    fn best_of_one_and_tie_breaks() {
        let rec = |steps: f64, backups: f64| AggregateRecord {
            rows: vec![AggregateRow {
                checkpoint_reward: 1.0,
                mean_timesteps: steps,
                se_timesteps: 0.0,
                mean_backups: backups,
                se_backups: 0.0,
                n_trials: 1,
            }],
            repetitions: 1,
            truncated_trials: 0,
        };
        assert_eq!(select_best(&[(3.0, rec(10.0, 1.0))]), Some(0));
        assert_eq!(select_best(&[(3.0, rec(10.0, 5.0)), (4.0, rec(10.0, 2.0))]), Some(1));
        assert_eq!(select_best(&[(5.0, rec(10.0, 2.0)), (4.0, rec(10.0, 2.0))]), Some(1));
        assert_eq!(select_best(&[(5.0, rec(9.0, 2.0)), (4.0, rec(10.0, 2.0))]), Some(0));
        assert_eq!(select_best(&[]), None);
    }

    #[test]
    fn sweep_param_application() {
        let mut l = LearnerConfig::new(LearnerKind::Rmax);
        SweepParam::M { cap_follows_m: true }.apply(&mut l, 6.0);
        assert_eq!((l.m, l.model_cap), (6, 6));
        SweepParam::Beta.apply(&mut l, 0.7);
        assert_eq!(l.beta, 0.7);
        assert_eq!(SweepParam::for_kind(LearnerKind::RtdpIe, true), SweepParam::Beta);
    }
}
