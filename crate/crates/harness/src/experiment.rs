//! Replication management: seeding, parallel dispatch and aggregation.
//!
//! Replications run on a rayon pool and are joined in replication order, so
//! results do not depend on the worker count or on completion order.

use mpmab_core::dynamics::{run_dynamic, sample_population, PlayerId, RatioTrace};
use mpmab_core::policy::Policy;
use mpmab_core::sim::{run_static, BernoulliEnvironment, RunTrace};
use mpmab_core::stream_from_seed;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, PopulationSpec, SweepParameter};
use crate::error::{Error, Result};
use crate::seeds::{ReplicationSeeds, Role};
use crate::stats::Summary;

/// Execution knobs that never change results.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; `None` uses one per logical core.
    pub workers: Option<usize>,
}

/// Per-checkpoint statistics of cumulative pseudo-regret across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretAggregate {
    pub checkpoints: Vec<u64>,
    pub per_checkpoint: Vec<Summary>,
    /// Total regret of each run, in run order.
    pub totals: Vec<f64>,
    pub total: Summary,
    pub max_total: f64,
}

impl RegretAggregate {
    fn from_curves(checkpoints: &[u64], curves: &[&[f64]], totals: Vec<f64>) -> Self {
        let per_checkpoint = (0..checkpoints.len())
            .map(|j| {
                let column: Vec<f64> = curves.iter().map(|c| c[j]).collect();
                Summary::of(&column)
            })
            .collect();
        let max_total = totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            checkpoints: checkpoints.to_vec(),
            per_checkpoint,
            total: Summary::of(&totals),
            totals,
            max_total,
        }
    }

    /// Mean cumulative regret at the last checkpoint.
    pub fn final_mean(&self) -> &Summary {
        self.per_checkpoint.last().expect("at least one checkpoint")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioAggregate {
    pub ratio: Summary,
    pub mean_achieved_rate: f64,
    pub mean_oracle_rate: f64,
}

#[derive(Debug, Clone)]
pub struct StaticResult {
    pub runs: Vec<RunTrace>,
    /// Arm means each run used.
    pub means: Vec<Vec<f64>>,
    pub regret: RegretAggregate,
}

#[derive(Debug, Clone)]
pub struct DynamicResult {
    pub runs: Vec<RatioTrace>,
    pub means: Vec<Vec<f64>>,
    pub regret: RegretAggregate,
    pub ratio: RatioAggregate,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub points: Vec<(f64, StaticResult)>,
}

fn pool(opts: RunOptions) -> Result<rayon::ThreadPool> {
    if opts.workers == Some(0) {
        return Err(Error::config("workers", "must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))
}

fn parallel_runs<T, F>(cfg: &ExperimentConfig, opts: RunOptions, one: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    pool(opts)?.install(|| (0..cfg.replications).into_par_iter().map(one).collect())
}

fn run_means(cfg: &ExperimentConfig, seeds: &ReplicationSeeds) -> Result<Vec<f64>> {
    let mut rng = stream_from_seed(seeds.get(Role::Means)?);
    cfg.environment.means(&mut rng)
}

/// One static replication; `replication` selects the seeds.
pub fn static_replication(cfg: &ExperimentConfig, replication: u64) -> Result<(Vec<f64>, RunTrace)> {
    let PopulationSpec::Static { players } = cfg.population else {
        return Err(Error::config("population", "this run needs a static population"));
    };
    let seeds = ReplicationSeeds::new(cfg.seed, replication);
    let means = run_means(cfg, &seeds)?;
    let arms = means.len();
    let env = BernoulliEnvironment::new(means.clone(), seeds.get(Role::Environment)?, cfg.sensing)?;
    let policies = (0..players)
        .map(|i| {
            let seed = seeds.get(Role::Player(i as u64))?;
            Ok(cfg.policy_for(i).kind().build(arms, seed, cfg.horizon, cfg.sensing)?)
        })
        .collect::<Result<Vec<Box<dyn Policy>>>>()?;
    let trace = run_static(env, policies, cfg.horizon, &cfg.checkpoint_steps())?;
    Ok((means, trace))
}

/// One dynamic replication.
pub fn dynamic_replication(cfg: &ExperimentConfig, replication: u64) -> Result<(Vec<f64>, RatioTrace)> {
    let policy = cfg
        .policy
        .as_ref()
        .ok_or_else(|| Error::config("policy", "dynamic runs need one shared policy"))?
        .kind();
    let seeds = ReplicationSeeds::new(cfg.seed, replication);
    let means = run_means(cfg, &seeds)?;
    let arms = means.len();
    let mut population_rng = stream_from_seed(seeds.get(Role::Population)?);
    let events = sample_population(&cfg.population.model(), arms, cfg.horizon, &mut population_rng)?;
    let env = BernoulliEnvironment::new(means.clone(), seeds.get(Role::Environment)?, cfg.sensing)?;
    let spawn = |PlayerId(id): PlayerId| -> mpmab_core::Result<Box<dyn Policy>> {
        let seed = seeds
            .get(Role::Player(id))
            .map_err(|e| mpmab_core::Error::Config(e.to_string()))?;
        policy.build(arms, seed, cfg.horizon, cfg.sensing)
    };
    let trace = run_dynamic(env, spawn, &events, cfg.horizon, &cfg.checkpoint_steps())?;
    Ok((means, trace))
}

/// All replications of a static experiment.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<StaticResult> {
    cfg.validate()?;
    if !cfg.population.is_static() {
        return Err(Error::config(
            "population",
            "`run` needs a static population; use `dynamic` for arrivals and departures",
        ));
    }
    let results = parallel_runs(cfg, opts, |r| static_replication(cfg, r))?;
    let (means, runs): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let curves: Vec<&[f64]> = runs.iter().map(|t| t.cumulative_regret.as_slice()).collect();
    let totals = runs.iter().map(|t| t.total_regret).collect();
    let regret = RegretAggregate::from_curves(&cfg.checkpoint_steps(), &curves, totals);
    Ok(StaticResult { runs, means, regret })
}

/// All replications of an experiment with a changing population.
pub fn run_dynamic_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<DynamicResult> {
    cfg.validate()?;
    if cfg.policy.is_none() {
        return Err(Error::config("players", "dynamic runs need one shared `policy`"));
    }
    let results = parallel_runs(cfg, opts, |r| dynamic_replication(cfg, r))?;
    let (means, runs): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let curves: Vec<&[f64]> = runs.iter().map(|t| t.cumulative_regret.as_slice()).collect();
    let totals: Vec<f64> = runs
        .iter()
        .map(|t| *t.cumulative_regret.last().expect("at least one checkpoint"))
        .collect();
    let regret = RegretAggregate::from_curves(&cfg.checkpoint_steps(), &curves, totals);
    let ratios: Vec<f64> = runs.iter().map(|t| t.ratio).collect();
    let ratio = RatioAggregate {
        ratio: Summary::of(&ratios),
        mean_achieved_rate: crate::stats::mean(&runs.iter().map(|t| t.achieved_rate).collect::<Vec<_>>()),
        mean_oracle_rate: crate::stats::mean(&runs.iter().map(|t| t.oracle_rate).collect::<Vec<_>>()),
    };
    Ok(DynamicResult {
        runs,
        means,
        regret,
        ratio,
    })
}

/// Runs the static experiment once per sweep value.
pub fn run_sweep(cfg: &ExperimentConfig, opts: RunOptions) -> Result<SweepResult> {
    cfg.validate()?;
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config("sweep", "missing; add a [sweep] table"))?;
    let points = sweep
        .values
        .iter()
        .map(|&v| {
            let point = cfg.with_sweep_value(sweep.parameter, v)?;
            Ok((v, run_experiment(&point, opts)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        parameter: sweep.parameter,
        points,
    })
}
