//! Tabular model-based reinforcement learning on finite MDPs.
//!
//! The crate provides the incremental learners RTDP-RMAX and RTDP-IE, which
//! perform a single Bellman backup on their empirical model per timestep,
//! together with the fully-solving baselines RMAX and MBIE, Adaptive-RTDP and
//! two reference agents (optimal and uniformly random). Computation is
//! measured in Bellman backups, experience in timesteps.
//!
//! Everything here is `no_std` + `alloc`; file formats, CSV output, parallel
//! experiment execution and the command-line front-end live in `rtdp-bench`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod heap;
mod math;

pub mod env;
pub mod experiment;
pub mod learner;
pub mod mdp;
pub mod model;
pub mod solve;
pub mod theory;

pub use env::{bandit_chain_mdp, generate_random_mdp, EnvState, RandomMdpParams, RewardNoise};
pub use experiment::{
    aggregate, derive_seed, run_experiment, run_trial, run_trial_observed, select_best, AggregateRecord,
    AggregateRow, Checkpoint, EnvSpec, ExperimentConfig, ExperimentError, StepRecord, SweepParam, TrialTrace,
};
pub use learner::{Learner, LearnerConfig, LearnerError, LearnerKind, UpdateMode, UpdateOutcome};
pub use mdp::{bellman_backup, build_known_mdp, greedy_policy, ActionValues, KnownSet, Mdp, MdpError, Policy};
pub use model::{EmpiricalModel, ModelError};
pub use theory::{BetaForm, TheoryError, TheoryInputs};
pub use solve::{evaluate_policy, finite_horizon_value, value_iteration, Solved};
