//! Multi-threaded experiments and parameter sweeps.
//!
//! Trials are keyed by index and aggregated in index order, so the result
//! does not depend on the thread count.

use rayon::prelude::*;
use rtdp_core::{aggregate, run_trial, select_best, AggregateRecord, ExperimentConfig, ExperimentError, SweepParam};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("empty sweep grid")]
    EmptyGrid,
}

/// `run_experiment` on up to `threads` worker threads.
pub fn run_experiment_parallel(config: &ExperimentConfig, threads: usize) -> Result<AggregateRecord, RunError> {
    config.validate()?;
    let run = || (0..config.repetitions).into_par_iter().map(|i| run_trial(config, i)).collect::<Result<Vec<_>, _>>();
    let traces = if threads <= 1 {
        (0..config.repetitions).map(|i| run_trial(config, i)).collect::<Result<Vec<_>, _>>()?
    } else {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build()?.install(run)?
    };
    Ok(aggregate(&traces))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub entries: Vec<(f64, AggregateRecord)>,
    pub best: usize,
}

impl SweepOutcome {
    pub fn best_value(&self) -> f64 {
        self.entries[self.best].0
    }
}

/// Runs `config` once per grid value of `param`.
pub fn sweep(config: &ExperimentConfig, param: SweepParam, grid: &[f64], threads: usize) -> Result<SweepOutcome, RunError> {
    let mut entries = Vec::with_capacity(grid.len());
    for &value in grid {
        let mut c = config.clone();
        param.apply(&mut c.learner, value);
        entries.push((value, run_experiment_parallel(&c, threads)?));
    }
    let best = select_best(&entries).ok_or(RunError::EmptyGrid)?;
    Ok(SweepOutcome { entries, best })
}
