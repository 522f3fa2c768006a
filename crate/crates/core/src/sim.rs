//! Synchronous collision environment and static-population runs.
//!
//! Each step every active player picks an arm without seeing the others'
//! choices. Every arm draws a Bernoulli value, a player is paid the value of
//! its arm unless another player picked the same arm, and then each player
//! updates on its own reward.
//!
//! The environment always draws exactly `K` values per step, in arm order,
//! whatever the players do. With a fixed seed the arm-value tape is the same
//! for every policy configuration, which makes paired comparisons exact.
//!
//! Regret is recorded in expected form: the per-step loss is the oracle rate
//! (sum of the `M` largest means) minus the sum of the means of the arms
//! occupied by exactly one player.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{check_probability, Error, Result};
use crate::math;
use crate::policy::Policy;
use crate::{stream_from_seed, Stream};

/// Bernoulli arms with an optional collision-sensing channel.
#[derive(Debug, Clone)]
pub struct BernoulliEnvironment {
    means: Vec<f64>,
    rng: Stream,
    sensing: bool,
    // arms by decreasing mean, ties by index
    ranked: Vec<usize>,
    // prefix sums of ranked means
    oracle_prefix: Vec<f64>,
    draws: Vec<bool>,
}

/// Result of one environment step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOutcome {
    /// Reward of each player, 0 or 1.
    pub rewards: Vec<f64>,
    /// Whether each player's arm was chosen by two or more players.
    pub collided: Vec<bool>,
    /// Number of players on each arm.
    pub occupancy: Vec<u32>,
    /// `sum_m mu[choice_m] * (1 - collided_m)`.
    pub expected_reward: f64,
}

impl BernoulliEnvironment {
    pub fn new(means: Vec<f64>, seed: u64, sensing: bool) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::config("environment needs at least one arm"));
        }
        for &m in &means {
            check_probability("mu", m)?;
        }
        let arms = means.len();
        let mut ranked: Vec<usize> = (0..arms).collect();
        ranked.sort_by(|&a, &b| means[b].total_cmp(&means[a]));
        let mut oracle_prefix = Vec::with_capacity(means.len() + 1);
        let mut acc = 0.0;
        oracle_prefix.push(acc);
        for &k in &ranked {
            acc += means[k];
            oracle_prefix.push(acc);
        }
        Ok(Self {
            means,
            rng: stream_from_seed(seed),
            sensing,
            ranked,
            oracle_prefix,
            draws: vec![false; arms],
        })
    }

    pub fn arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sensing(&self) -> bool {
        self.sensing
    }

    /// Sum of the `players` largest means.
    pub fn oracle_rate(&self, players: usize) -> Result<f64> {
        self.oracle_prefix.get(players).copied().ok_or(Error::Domain {
            name: "m_active",
            value: players as f64,
            reason: "more active players than arms",
        })
    }

    /// Resolves one step for the given choices (one arm per player).
    pub fn step(&mut self, choices: &[usize]) -> Result<StepOutcome> {
        let mut out = StepOutcome::default();
        self.step_into(choices, &mut out)?;
        Ok(out)
    }

    /// Like [`step`](Self::step) but reuses the buffers of `out`.
    pub fn step_into(&mut self, choices: &[usize], out: &mut StepOutcome) -> Result<()> {
        let arms = self.arms();
        if let Some(&arm) = choices.iter().find(|&&a| a >= arms) {
            return Err(Error::ArmOutOfRange { arm, arms });
        }
        out.occupancy.clear();
        out.occupancy.resize(arms, 0);
        for &a in choices {
            out.occupancy[a] += 1;
        }

        // fixed draw discipline: one uniform per arm per step, in arm order
        for (v, &mu) in self.draws.iter_mut().zip(&self.means) {
            let u: f64 = self.rng.random();
            *v = u < mu;
        }

        out.rewards.clear();
        out.collided.clear();
        for &a in choices {
            let collided = out.occupancy[a] >= 2;
            out.collided.push(collided);
            out.rewards.push(if !collided && self.draws[a] { 1.0 } else { 0.0 });
        }
        out.expected_reward = self.expected_reward(&out.occupancy);
        Ok(())
    }

    /// Sum of the means of the arms holding exactly one player, accumulated
    /// in the same order as the oracle so that an oracle allocation gives
    /// exactly the oracle rate.
    pub fn expected_reward(&self, occupancy: &[u32]) -> f64 {
        self.ranked
            .iter()
            .filter(|&&k| occupancy[k] == 1)
            .fold(0.0, |acc, &k| acc + self.means[k])
    }
}

/// Sum of the `m_active` largest entries of `mu`.
pub fn oracle_rate(mu: &[f64], m_active: usize) -> Result<f64> {
    if m_active > mu.len() {
        return Err(Error::Domain {
            name: "m_active",
            value: m_active as f64,
            reason: "more active players than arms",
        });
    }
    let mut sorted = mu.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(sorted[..m_active].iter().sum())
}

/// Checkpointed outcome of one static run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    /// Steps after which the cumulative regret was recorded, increasing.
    pub checkpoints: Vec<u64>,
    /// Cumulative pseudo-regret after each checkpoint.
    pub cumulative_regret: Vec<f64>,
    /// Cumulative pseudo-regret at the horizon.
    pub total_regret: f64,
    /// Number of (step, arm) pairs with two or more players.
    pub total_collisions: u64,
    /// Final pull counts of each player.
    pub pull_counts: Vec<Vec<u64>>,
}

/// `count` log-spaced integer steps in `[1, horizon]`, deduplicated, always
/// ending at `horizon`.
pub fn log_spaced_checkpoints(horizon: u64, count: usize) -> Vec<u64> {
    if horizon == 0 || count == 0 {
        return Vec::new();
    }
    let mut out: Vec<u64> = Vec::with_capacity(count);
    let log_h = math::ln(horizon as f64);
    for i in 0..count {
        let frac = if count == 1 { 1.0 } else { i as f64 / (count - 1) as f64 };
        let t = (math::round(math::exp(frac * log_h)) as u64).clamp(1, horizon);
        if out.last() != Some(&t) {
            out.push(t);
        }
    }
    if out.last() != Some(&horizon) {
        out.push(horizon);
    }
    out
}

/// `count` evenly spaced steps `horizon * i / count`, `i = 1..=count`.
pub fn linear_checkpoints(horizon: u64, count: usize) -> Vec<u64> {
    let count = count as u64;
    let mut out: Vec<u64> = Vec::new();
    for i in 1..=count {
        let t = (horizon as u128 * i as u128 / count as u128) as u64;
        if t >= 1 && out.last() != Some(&t) {
            out.push(t);
        }
    }
    out
}

/// Checks that checkpoints are strictly increasing and within `[1, horizon]`.
pub fn validate_checkpoints(checkpoints: &[u64], horizon: u64) -> Result<()> {
    let increasing = checkpoints.windows(2).all(|w| w[0] < w[1]);
    let in_range = checkpoints.iter().all(|&t| (1..=horizon).contains(&t));
    if increasing && in_range {
        Ok(())
    } else {
        Err(Error::config(
            "checkpoints must be strictly increasing and lie in [1, horizon]",
        ))
    }
}

/// A static population stepping through the synchronous loop.
///
/// Useful on its own when a caller needs to inspect players between steps;
/// [`run_static`] wraps it for the checkpointed case.
pub struct StaticRun {
    env: BernoulliEnvironment,
    players: Vec<Box<dyn Policy>>,
    oracle: f64,
    elapsed: u64,
    cumulative_regret: f64,
    collisions: u64,
    choices: Vec<usize>,
    outcome: StepOutcome,
}

impl StaticRun {
    pub fn new(env: BernoulliEnvironment, players: Vec<Box<dyn Policy>>) -> Result<Self> {
        let arms = env.arms();
        if players.len() > arms {
            return Err(Error::config("static runs need at most as many players as arms"));
        }
        if players.iter().any(|p| p.state().arms() != arms) {
            return Err(Error::config("every policy must be built for the environment's arm count"));
        }
        let oracle = env.oracle_rate(players.len())?;
        Ok(Self {
            env,
            choices: Vec::with_capacity(players.len()),
            players,
            oracle,
            elapsed: 0,
            cumulative_regret: 0.0,
            collisions: 0,
            outcome: StepOutcome::default(),
        })
    }

    /// Runs one synchronous step.
    pub fn step(&mut self) -> Result<()> {
        self.choices.clear();
        self.choices.extend(self.players.iter_mut().map(|p| p.select()));
        self.env.step_into(&self.choices, &mut self.outcome)?;
        let sensing = self.env.sensing();
        for (m, player) in self.players.iter_mut().enumerate() {
            let flag = sensing.then_some(self.outcome.collided[m]);
            player.update(self.choices[m], self.outcome.rewards[m], flag)?;
        }
        self.collisions += self.outcome.occupancy.iter().filter(|&&c| c >= 2).count() as u64;
        self.cumulative_regret += (self.oracle - self.outcome.expected_reward).max(0.0);
        self.elapsed += 1;
        Ok(())
    }

    pub fn advance(&mut self, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    pub fn elapsed(&self) -> u64 {
        self.elapsed
    }

    pub fn cumulative_regret(&self) -> f64 {
        self.cumulative_regret
    }

    pub fn collisions(&self) -> u64 {
        self.collisions
    }

    pub fn players(&self) -> &[Box<dyn Policy>] {
        &self.players
    }

    pub fn environment(&self) -> &BernoulliEnvironment {
        &self.env
    }

    /// Choices and outcome of the most recent step.
    pub fn last_step(&self) -> (&[usize], &StepOutcome) {
        (&self.choices, &self.outcome)
    }
}

/// Runs `horizon` synchronous steps and records cumulative pseudo-regret at
/// each checkpoint.
pub fn run_static(
    env: BernoulliEnvironment,
    players: Vec<Box<dyn Policy>>,
    horizon: u64,
    checkpoints: &[u64],
) -> Result<RunTrace> {
    validate_checkpoints(checkpoints, horizon)?;
    let mut run = StaticRun::new(env, players)?;
    let mut cumulative_regret = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    while run.elapsed() < horizon {
        run.step()?;
        if next.peek() == Some(&&run.elapsed()) {
            next.next();
            cumulative_regret.push(run.cumulative_regret());
        }
    }
    Ok(RunTrace {
        checkpoints: checkpoints.to_vec(),
        cumulative_regret,
        total_regret: run.cumulative_regret(),
        total_collisions: run.collisions(),
        pull_counts: run.players().iter().map(|p| p.state().pull_counts().to_vec()).collect(),
    })
}
