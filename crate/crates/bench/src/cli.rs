//! The `rtdp` command line.
//!
//! Exit status: 0 on success, 2 on usage errors, 1 on runtime failures.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use clap::{ArgAction, Args, Parser, Subcommand};
use rtdp_core::theory::{self, BetaForm, TheoryInputs};
use rtdp_core::{
    derive_seed, generate_random_mdp, run_trial, AggregateRecord, EnvSpec, ExperimentConfig, LearnerConfig,
    LearnerKind, RandomMdpParams, RewardNoise, SweepParam, UpdateMode,
};

use crate::meta::{self, KeyValues};
use crate::records::{format_g, record_to_string};
use crate::{mdp_file, plot, runner};

#[derive(Debug, Parser)]
#[command(name = "rtdp", version, about = "Model-based RL experiments: RTDP-RMAX, RTDP-IE, RMAX and MBIE on finite MDPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a random MDP and write it in the text format.
    GenMdp(GenMdpArgs),
    /// Run one trial.
    Run(RunArgs),
    /// Run and aggregate repeated trials.
    Experiment(ExperimentArgs),
    /// Run an experiment per value of m (RMAX family) or beta (IE family).
    Sweep(SweepArgs),
    /// Print the closed-form parameter choices and bounds.
    Theory(TheoryArgs),
    /// Merge record CSVs into plot data and a gnuplot script.
    PlotData(PlotArgs),
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvArg {
    Bandit,
    Random,
    File(PathBuf),
}

impl FromStr for EnvArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bandit" => Ok(EnvArg::Bandit),
            "random" => Ok(EnvArg::Random),
            _ => match s.strip_prefix("file:") {
                Some(path) if !path.is_empty() => Ok(EnvArg::File(path.into())),
                _ => Err(format!("unknown environment {s:?} (expected bandit, random or file:<path>)")),
            },
        }
    }
}

/// A model cap, or `m` to follow the known threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapArg {
    Fixed(u64),
    FollowM,
}

impl FromStr for CapArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "m" {
            return Ok(CapArg::FollowM);
        }
        s.parse().map(CapArg::Fixed).map_err(|_| format!("expected a count or `m`, found {s:?}"))
    }
}

impl std::fmt::Display for CapArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CapArg::Fixed(n) => write!(f, "{n}"),
            CapArg::FollowM => f.write_str("m"),
        }
    }
}

fn parse_noise(s: &str) -> Result<RewardNoise, String> {
    match s {
        "deterministic" => Ok(RewardNoise::Deterministic),
        "bernoulli" => Ok(RewardNoise::Bernoulli),
        _ => Err(format!("unknown noise {s:?} (expected deterministic or bernoulli)")),
    }
}

fn noise_name(n: RewardNoise) -> &'static str {
    match n {
        RewardNoise::Deterministic => "deterministic",
        RewardNoise::Bernoulli => "bernoulli",
    }
}

#[derive(Debug, Args)]
pub struct GenMdpArgs {
    #[arg(long = "S", default_value_t = 50)]
    pub states: usize,
    #[arg(long = "A", default_value_t = 5)]
    pub actions: usize,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// key=value file with flag names as keys; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// bandit, random or file:<path>.
    #[arg(long, default_value = "bandit")]
    pub env: EnvArg,
    #[arg(long)]
    pub agent: LearnerKind,
    #[arg(long, default_value_t = 1)]
    pub m: u64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long = "epsilon-one", default_value_t = 0.0)]
    pub epsilon_one: f64,
    #[arg(long, default_value = "classic")]
    pub mode: UpdateMode,
    /// Samples kept per pair; `m` follows the known threshold.
    #[arg(long = "model-cap", default_value = "100")]
    pub model_cap: CapArg,
    #[arg(long = "vi-tol", default_value_t = 0.01)]
    pub vi_tol: f64,
    /// Discount of the bandit and random environments (default 0.95).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Reward scale of the optimistic initialisation; defaults to the
    /// environment's largest reward (at least 1).
    #[arg(long = "rmax-reward")]
    pub rmax_reward: Option<f64>,
    #[arg(long = "skip-redundant", default_value_t = true, action = ArgAction::Set)]
    pub skip_redundant: bool,
    #[arg(long, default_value = "deterministic", value_parser = parse_noise)]
    pub noise: RewardNoise,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "max-steps", default_value_t = rtdp_core::experiment::DEFAULT_MAX_TIMESTEPS)]
    pub max_steps: u64,
    #[arg(long = "reward-target", default_value_t = 15000.0)]
    pub reward_target: f64,
    /// Reward units between checkpoints; only the target when absent.
    #[arg(long = "checkpoint-interval")]
    pub checkpoint_interval: Option<f64>,
    /// Destination of the CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = 1)]
    pub reps: u64,
    /// Worker threads; the output does not depend on it.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long = "S")]
    pub states: u64,
    #[arg(long = "A")]
    pub actions: u64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub delta: f64,
    /// Known threshold for the m-dependent quantities; `m_required` when absent.
    #[arg(long)]
    pub m: Option<u64>,
    #[arg(long = "lead-constant", default_value_t = 1.0)]
    pub lead_constant: f64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long = "in", value_delimiter = ',', required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

/// Splices `--config` entries into `args` right after the subcommand,
/// dropping keys that are also given as flags.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let strings: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strings.iter().enumerate() {
        if a == "--config" {
            path = strings.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path).map_err(|e| Failure::Runtime(anyhow::anyhow!("{path}: {e}")))?;
    let pairs = meta::parse(&text).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
    let given = |key: &str| {
        let flag = format!("--{key}");
        strings.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let mut injected = Vec::new();
    for (key, value) in pairs {
        if key == "config" {
            return Err(Failure::Usage(format!("{path}: config files cannot include other config files")));
        }
        if !given(&key) {
            injected.push(OsString::from(format!("--{key}={value}")));
        }
    }
    let at = 2.min(args.len());
    let mut out = args[..at].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let result = expand_config(args).and_then(|args| match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(cli.command),
        Err(e) => {
            let _ = e.print();
            Err(Failure::Usage(String::new())).or_else(|f| if e.use_stderr() { Err(f) } else { Ok(()) })
        }
    });
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            if !msg.is_empty() {
                eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            }
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::GenMdp(a) => gen_mdp(&a),
        Command::Run(a) => run_one(&a),
        Command::Experiment(a) => experiment(&a),
        Command::Sweep(a) => sweep(&a),
        Command::Theory(a) => theory_cmd(&a),
        Command::PlotData(a) => plot_data(&a),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

fn gen_mdp(a: &GenMdpArgs) -> Result<(), Failure> {
    let params = RandomMdpParams {
        num_states: a.states,
        num_actions: a.actions,
        gamma: a.gamma,
        extra_successors: 4.min(a.states.saturating_sub(1)),
        ..RandomMdpParams::default()
    };
    let mdp = generate_random_mdp(a.seed, &params).map_err(|e| Failure::Usage(e.to_string()))?;
    write_output(a.out.as_deref(), &mdp_file::to_text(&mdp))?;
    Ok(())
}

fn build_env(a: &RunArgs) -> Result<EnvSpec, Failure> {
    let gamma = a.gamma.unwrap_or(0.95);
    Ok(match &a.env {
        EnvArg::Bandit => EnvSpec::BanditChain { gamma },
        EnvArg::Random => EnvSpec::Random(RandomMdpParams { gamma, ..RandomMdpParams::default() }),
        EnvArg::File(path) => {
            let mdp = mdp_file::load(path).map_err(|e| Failure::Runtime(e.into()))?;
            if let Some(g) = a.gamma {
                if g != mdp.discount() {
                    return Err(Failure::Usage(format!("--gamma {g} conflicts with the discount {} of {}", mdp.discount(), path.display())));
                }
            }
            EnvSpec::Fixed(mdp)
        }
    })
}

fn build_config(a: &RunArgs, reps: u64) -> Result<ExperimentConfig, Failure> {
    let env = build_env(a)?;
    let mut learner = LearnerConfig::new(a.agent);
    learner.m = a.m;
    learner.beta = a.beta;
    learner.epsilon_one = a.epsilon_one;
    learner.mode = a.mode;
    learner.model_cap = match a.model_cap {
        CapArg::Fixed(n) => n,
        CapArg::FollowM => a.m,
    };
    learner.vi_tol = a.vi_tol;
    learner.gamma = env.gamma();
    learner.rmax_reward = a.rmax_reward.unwrap_or_else(|| env.reward_bound());
    learner.skip_redundant = a.skip_redundant;
    let mut config = ExperimentConfig::new(env, learner, a.reward_target);
    config.repetitions = reps;
    config.checkpoint_interval = a.checkpoint_interval;
    config.max_timesteps = a.max_steps;
    config.base_seed = a.seed;
    config.reward_noise = a.noise;
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(config)
}

fn describe(a: &RunArgs, config: &ExperimentConfig) -> KeyValues {
    let l = &config.learner;
    let mut kv = KeyValues::new();
    kv.comment(format!("rtdp {}", env!("CARGO_PKG_VERSION")));
    let env = match &a.env {
        EnvArg::Bandit => "bandit".to_string(),
        EnvArg::Random => "random".to_string(),
        EnvArg::File(p) => format!("file:{}", p.display()),
    };
    kv.set("env", env)
        .set("agent", l.kind)
        .set("m", l.m)
        .set("beta", l.beta)
        .set("epsilon-one", l.epsilon_one)
        .set("mode", l.mode)
        .set("model-cap", a.model_cap)
        .set("vi-tol", l.vi_tol)
        .set("gamma", l.gamma)
        .set("rmax-reward", l.rmax_reward)
        .set("skip-redundant", l.skip_redundant)
        .set("noise", noise_name(config.reward_noise))
        .set("seed", config.base_seed)
        .set("max-steps", config.max_timesteps)
        .set("reward-target", config.reward_target);
    if let Some(i) = config.checkpoint_interval {
        kv.set("checkpoint-interval", i);
    }
    kv
}

fn trial_seeds(kv: &mut KeyValues, config: &ExperimentConfig) {
    kv.comment("per-trial seeds: mdp env agent");
    for i in 0..config.repetitions {
        let s = |stream| derive_seed(config.base_seed, i, stream);
        kv.comment(format!("trial {i}: {} {} {}", s(0), s(1), s(2)));
    }
}

fn summary(record: &AggregateRecord) -> String {
    match record.final_row() {
        Some(r) => format!(
            "checkpoint_reward={} mean_timesteps={} mean_backups={} n_trials={} truncated={}",
            format_g(r.checkpoint_reward),
            format_g(r.mean_timesteps),
            format_g(r.mean_backups),
            r.n_trials,
            record.truncated_trials
        ),
        None => format!("no checkpoint reached; truncated={}", record.truncated_trials),
    }
}

fn run_one(a: &RunArgs) -> Result<(), Failure> {
    let config = build_config(a, 1)?;
    let trace = run_trial(&config, 0).map_err(|e| Failure::Runtime(e.into()))?;
    let record = rtdp_core::aggregate(std::slice::from_ref(&trace));
    if let Some(out) = &a.out {
        write_output(Some(out), &record_to_string(&record))?;
        let mut kv = describe(a, &config);
        trial_seeds(&mut kv, &config);
        write_output(Some(&sidecar(out)), &kv.render())?;
    }
    println!(
        "total_reward={} timesteps={} backups={} truncated={}",
        format_g(trace.total_reward),
        trace.total_timesteps,
        trace.total_backups,
        trace.truncated
    );
    Ok(())
}

fn experiment(a: &ExperimentArgs) -> Result<(), Failure> {
    let config = build_config(&a.run, a.reps)?;
    let record = runner::run_experiment_parallel(&config, a.parallel).map_err(|e| Failure::Runtime(e.into()))?;
    let csv = record_to_string(&record);
    match &a.run.out {
        Some(out) => {
            write_output(Some(out), &csv)?;
            let mut kv = describe(&a.run, &config);
            kv.set("reps", a.reps);
            trial_seeds(&mut kv, &config);
            write_output(Some(&sidecar(out)), &kv.render())?;
            eprintln!("{}", summary(&record));
        }
        None => write_output(None, &csv)?,
    }
    Ok(())
}

fn sweep(a: &SweepArgs) -> Result<(), Failure> {
    let run = &a.experiment.run;
    let config = build_config(run, a.experiment.reps)?;
    let param = SweepParam::for_kind(run.agent, run.model_cap == CapArg::FollowM);
    if matches!(run.agent, LearnerKind::Optimal | LearnerKind::Random | LearnerKind::AdaptiveRtdp) {
        return Err(Failure::Usage(format!("agent {} has no sweep parameter", run.agent)));
    }
    if param != SweepParam::Beta && a.grid.iter().any(|&v| v < 1.0 || v.fract() != 0.0) {
        return Err(Failure::Usage("grid values for m must be positive integers".into()));
    }
    let outcome = runner::sweep(&config, param, &a.grid, a.experiment.parallel).map_err(|e| Failure::Runtime(e.into()))?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let name = if param == SweepParam::Beta { "beta" } else { "m" };
    w.write_record([name, "mean_timesteps", "se_timesteps", "mean_backups", "se_backups", "n_trials", "truncated_trials"])
        .map_err(anyhow::Error::from)?;
    for (value, record) in &outcome.entries {
        let row = record.final_row();
        let g = |f: fn(&rtdp_core::AggregateRow) -> f64| row.map_or("nan".to_string(), |r| format_g(f(r)));
        w.write_record([
            format_g(*value),
            g(|r| r.mean_timesteps),
            g(|r| r.se_timesteps),
            g(|r| r.mean_backups),
            g(|r| r.se_backups),
            row.map_or(0, |r| r.n_trials).to_string(),
            record.truncated_trials.to_string(),
        ])
        .map_err(anyhow::Error::from)?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?).map_err(anyhow::Error::from)?;
    match &run.out {
        Some(out) => {
            write_output(Some(out), &csv)?;
            let mut kv = describe(run, &config);
            kv.set("reps", a.experiment.reps);
            kv.set("grid", a.grid.iter().map(|v| format_g(*v)).collect::<Vec<_>>().join(","));
            kv.comment(format!("best {name}={}", format_g(outcome.best_value())));
            trial_seeds(&mut kv, &config);
            write_output(Some(&sidecar(out)), &kv.render())?;
        }
        None => write_output(None, &csv)?,
    }
    println!("best_{name}={}", format_g(outcome.best_value()));
    Ok(())
}

fn theory_cmd(a: &TheoryArgs) -> Result<(), Failure> {
    let inputs = TheoryInputs {
        num_states: a.states,
        num_actions: a.actions,
        epsilon: a.epsilon,
        delta: a.delta,
        gamma: a.gamma,
        lead_constant: a.lead_constant,
    };
    let usage = |e: theory::TheoryError| Failure::Usage(e.to_string());
    inputs.validate().map_err(usage)?;
    let eps1 = theory::epsilon_one(a.epsilon, a.gamma);
    let m_required = theory::m_required(&inputs).map_err(usage)?;
    let m = a.m.unwrap_or(m_required);
    let mut kv = KeyValues::new();
    kv.set("S", a.states)
        .set("A", a.actions)
        .set("gamma", format_g(a.gamma))
        .set("epsilon", format_g(a.epsilon))
        .set("delta", format_g(a.delta))
        .set("lead_constant", format_g(a.lead_constant))
        .set("m", m)
        .set("epsilon_one", format_g(eps1))
        .set("horizon_T", theory::horizon(a.epsilon, a.gamma).map_err(usage)?)
        .set("m_required", m_required)
        .set("beta_required", format_g(theory::beta_required(a.states, a.actions, m, a.delta, a.gamma, BetaForm::AsPrinted).map_err(usage)?))
        .set("beta_required_hoeffding", format_g(theory::beta_required(a.states, a.actions, m, a.delta, a.gamma, BetaForm::Hoeffding).map_err(usage)?))
        .set("max_updates_per_pair", theory::max_updates_per_pair(eps1, a.gamma))
        .set("learning_complexity", format_g(theory::learning_complexity(a.states, a.actions, m, eps1, a.gamma)))
        .set("sample_complexity_bound", format_g(theory::sample_complexity_bound(a.states, a.actions, m, a.epsilon, a.gamma)))
        .set("sample_complexity_order", format_g(theory::sample_complexity_order(a.states, a.actions, a.epsilon, a.gamma)))
        .set("log_factors", format_g(theory::log_factors(&inputs).map_err(usage)?));
    print!("{}", kv.render());
    Ok(())
}

fn plot_data(a: &PlotArgs) -> Result<(), Failure> {
    let script = plot::emit(&a.inputs, &a.out).map_err(|e| Failure::Runtime(e.into()))?;
    println!("data={} script={}", a.out.display(), script.display());
    Ok(())
}
