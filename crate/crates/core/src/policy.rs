//! Per-player decision rules.
//!
//! Every policy owns a [`PlayerState`] (pull counts, reward sums, its
//! private clock and random stream) and exposes the same two operations:
//! [`Policy::select`] before a step and [`Policy::update`] after it. A
//! player only ever observes its own reward. The collision flag passed to
//! `update` is present only in environments that grant sensing, and only
//! [`MusicalChairs`] reads it.
//!
//! Time inside a policy is always the player's local time: at the `t`-th
//! step since its arrival, `local_clock == t - 1`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kl::{exploration_rate_unchecked, klucb_index_unchecked, KlSolverConfig};
use crate::{math, stream_from_seed, Stream};

/// Statistics a player accumulates about the arms, plus its private clock
/// and random stream.
///
/// `pull_counts` always sums to `local_clock`, and `reward_sums[k]` never
/// exceeds `pull_counts[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerState {
    pull_counts: Vec<u64>,
    reward_sums: Vec<f64>,
    local_clock: u64,
    rng: Stream,
}

impl PlayerState {
    /// A freshly arrived player: nothing observed, clock at 0.
    pub fn new(arms: usize, seed: u64) -> Self {
        Self {
            pull_counts: vec![0; arms],
            reward_sums: vec![0.0; arms],
            local_clock: 0,
            rng: stream_from_seed(seed),
        }
    }

    /// Builds a state from existing statistics; the clock is set to the
    /// total pull count.
    pub fn from_statistics(pull_counts: Vec<u64>, reward_sums: Vec<f64>, seed: u64) -> Result<Self> {
        if pull_counts.is_empty() || pull_counts.len() != reward_sums.len() {
            return Err(Error::config(
                "pull counts and reward sums must be nonempty and of equal length",
            ));
        }
        for (&n, &s) in pull_counts.iter().zip(&reward_sums) {
            if !(s >= 0.0 && s <= n as f64) {
                return Err(Error::config("each reward sum must lie in [0, pull count]"));
            }
        }
        let local_clock = pull_counts.iter().sum();
        Ok(Self {
            pull_counts,
            reward_sums,
            local_clock,
            rng: stream_from_seed(seed),
        })
    }

    pub fn arms(&self) -> usize {
        self.pull_counts.len()
    }

    pub fn pull_counts(&self) -> &[u64] {
        &self.pull_counts
    }

    pub fn reward_sums(&self) -> &[f64] {
        &self.reward_sums
    }

    pub fn local_clock(&self) -> u64 {
        self.local_clock
    }

    /// Time index of the next decision, `local_clock + 1`.
    pub fn next_time(&self) -> f64 {
        (self.local_clock + 1) as f64
    }

    /// `reward_sums[k] / max(pull_counts[k], 1)`.
    pub fn empirical_mean(&self, arm: usize) -> f64 {
        self.reward_sums[arm] / self.pull_counts[arm].max(1) as f64
    }

    pub fn rng_mut(&mut self) -> &mut Stream {
        &mut self.rng
    }

    /// Records one pull of `arm` with a 0/1 `reward` and advances the clock.
    pub fn record(&mut self, arm: usize, reward: f64) -> Result<()> {
        if arm >= self.arms() {
            return Err(Error::ArmOutOfRange {
                arm,
                arms: self.arms(),
            });
        }
        if reward != 0.0 && reward != 1.0 {
            return Err(Error::InvalidReward(reward));
        }
        self.pull_counts[arm] += 1;
        self.reward_sums[arm] += reward;
        self.local_clock += 1;
        Ok(())
    }
}

/// A single player's decision rule.
pub trait Policy: Send {
    /// Chooses the arm to pull at the next local step.
    fn select(&mut self) -> usize;

    /// Feeds back the outcome of the arm returned by the preceding
    /// [`select`](Policy::select).
    fn update(&mut self, arm: usize, reward: f64, collided: Option<bool>) -> Result<()>;

    fn state(&self) -> &PlayerState;

    fn name(&self) -> &'static str;
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn select(&mut self) -> usize {
        (**self).select()
    }
    fn update(&mut self, arm: usize, reward: f64, collided: Option<bool>) -> Result<()> {
        (**self).update(arm, reward, collided)
    }
    fn state(&self) -> &PlayerState {
        (**self).state()
    }
    fn name(&self) -> &'static str {
        (**self).name()
    }
}

/// How exact ties among maximal indices are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Lowest arm index wins; consumes no randomness.
    #[default]
    Lowest,
    /// Uniform among the tied arms, drawn from the player's stream only
    /// when more than one arm attains the maximum.
    Random,
}

/// Index of the largest score, lowest index on ties. Panics on an empty
/// slice.
pub fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = k;
        }
    }
    best
}

/// Argmax under the given tie rule.
pub fn argmax_with(scores: &[f64], tie_break: TieBreak, rng: &mut Stream) -> usize {
    let best = argmax_lowest(scores);
    if tie_break == TieBreak::Lowest {
        return best;
    }
    let top = scores[best];
    let tied = scores.iter().filter(|&&s| s == top).count();
    if tied == 1 {
        return best;
    }
    let pick = rng.random_range(0..tied);
    scores
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s == top)
        .nth(pick)
        .map(|(k, _)| k)
        .unwrap_or(best)
}

/// Argmax of `indices[k] + noise[k] / t`, lowest index on ties.
pub fn perturbed_argmax(indices: &[f64], noise: &[f64], t: f64) -> usize {
    debug_assert_eq!(indices.len(), noise.len());
    let mut best = 0;
    let mut best_score = indices[0] + noise[0] / t;
    for k in 1..indices.len() {
        let score = indices[k] + noise[k] / t;
        if score > best_score {
            best = k;
            best_score = score;
        }
    }
    best
}

/// Fills `out` with the KL-UCB index of every arm at the state's next time.
pub fn klucb_indices(state: &PlayerState, c: f64, solver: &KlSolverConfig, out: &mut Vec<f64>) {
    let f_t = exploration_rate_unchecked(state.next_time(), c);
    out.clear();
    out.extend((0..state.arms()).map(|k| {
        klucb_index_unchecked(state.empirical_mean(k), state.pull_counts[k], f_t, solver)
    }));
}

fn check_exploration_constant(c: f64) -> Result<()> {
    if c >= 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "c",
            value: c,
            reason: "exploration constant must be nonnegative",
        })
    }
}

fn check_arms(arms: usize) -> Result<()> {
    if arms == 0 {
        Err(Error::config("a policy needs at least one arm"))
    } else {
        Ok(())
    }
}

/// Selfish KL-UCB: every player runs single-player KL-UCB on its own
/// observations and ignores that other players exist.
#[derive(Debug, Clone)]
pub struct SelfishKlUcb {
    state: PlayerState,
    c: f64,
    solver: KlSolverConfig,
    tie_break: TieBreak,
    indices: Vec<f64>,
}

impl SelfishKlUcb {
    pub fn new(arms: usize, seed: u64, c: f64, tie_break: TieBreak) -> Result<Self> {
        check_arms(arms)?;
        Self::from_state(PlayerState::new(arms, seed), c, tie_break)
    }

    pub fn from_state(state: PlayerState, c: f64, tie_break: TieBreak) -> Result<Self> {
        check_exploration_constant(c)?;
        Ok(Self {
            indices: Vec::with_capacity(state.arms()),
            state,
            c,
            solver: KlSolverConfig::default(),
            tie_break,
        })
    }

    pub fn with_solver(mut self, solver: KlSolverConfig) -> Self {
        self.solver = solver;
        self
    }

    /// Indices computed by the last `select`.
    pub fn last_indices(&self) -> &[f64] {
        &self.indices
    }
}

impl Policy for SelfishKlUcb {
    fn select(&mut self) -> usize {
        klucb_indices(&self.state, self.c, &self.solver, &mut self.indices);
        argmax_with(&self.indices, self.tie_break, &mut self.state.rng)
    }

    fn update(&mut self, arm: usize, reward: f64, _collided: Option<bool>) -> Result<()> {
        self.state.record(arm, reward)
    }

    fn state(&self) -> &PlayerState {
        &self.state
    }

    fn name(&self) -> &'static str {
        "selfish_klucb"
    }
}

/// Randomized Selfish KL-UCB: the KL-UCB index of each arm is perturbed by
/// an independent standard Gaussian scaled by `1 / t` before the argmax.
///
/// Exactly `K` Gaussians are drawn per decision, in arm order.
#[derive(Debug, Clone)]
pub struct RandomizedSelfishKlUcb {
    state: PlayerState,
    c: f64,
    solver: KlSolverConfig,
    indices: Vec<f64>,
    noise: Vec<f64>,
}

impl RandomizedSelfishKlUcb {
    pub fn new(arms: usize, seed: u64, c: f64) -> Result<Self> {
        check_arms(arms)?;
        Self::from_state(PlayerState::new(arms, seed), c)
    }

    pub fn from_state(state: PlayerState, c: f64) -> Result<Self> {
        check_exploration_constant(c)?;
        let arms = state.arms();
        Ok(Self {
            state,
            c,
            solver: KlSolverConfig::default(),
            indices: Vec::with_capacity(arms),
            noise: Vec::with_capacity(arms),
        })
    }

    pub fn with_solver(mut self, solver: KlSolverConfig) -> Self {
        self.solver = solver;
        self
    }

    /// Unperturbed indices of the last `select`.
    pub fn last_indices(&self) -> &[f64] {
        &self.indices
    }

    /// Standard Gaussian draws of the last `select` (before the `1 / t`
    /// scaling).
    pub fn last_noise(&self) -> &[f64] {
        &self.noise
    }
}

impl Policy for RandomizedSelfishKlUcb {
    fn select(&mut self) -> usize {
        klucb_indices(&self.state, self.c, &self.solver, &mut self.indices);
        let rng = &mut self.state.rng;
        self.noise.clear();
        self.noise
            .extend((0..self.indices.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        perturbed_argmax(&self.indices, &self.noise, self.state.next_time())
    }

    fn update(&mut self, arm: usize, reward: f64, _collided: Option<bool>) -> Result<()> {
        self.state.record(arm, reward)
    }

    fn state(&self) -> &PlayerState {
        &self.state
    }

    fn name(&self) -> &'static str {
        "randomized_selfish_klucb"
    }
}

/// Selfish UCB1: `mu_hat + sqrt(2 log t / N)`, unvisited arms first.
#[derive(Debug, Clone)]
pub struct SelfishUcb1 {
    state: PlayerState,
    tie_break: TieBreak,
    indices: Vec<f64>,
}

impl SelfishUcb1 {
    pub fn new(arms: usize, seed: u64, tie_break: TieBreak) -> Result<Self> {
        check_arms(arms)?;
        Ok(Self::from_state(PlayerState::new(arms, seed), tie_break))
    }

    pub fn from_state(state: PlayerState, tie_break: TieBreak) -> Self {
        Self {
            indices: Vec::with_capacity(state.arms()),
            state,
            tie_break,
        }
    }

    pub fn last_indices(&self) -> &[f64] {
        &self.indices
    }
}

/// UCB1 index; `+inf` for an unvisited arm.
pub fn ucb1_index(mu_hat: f64, n: u64, t: f64) -> f64 {
    if n == 0 {
        f64::INFINITY
    } else {
        mu_hat + math::sqrt(2.0 * math::ln(t) / n as f64)
    }
}

impl Policy for SelfishUcb1 {
    fn select(&mut self) -> usize {
        let t = self.state.next_time();
        let state = &self.state;
        self.indices.clear();
        self.indices.extend(
            (0..state.arms()).map(|k| ucb1_index(state.empirical_mean(k), state.pull_counts[k], t)),
        );
        argmax_with(&self.indices, self.tie_break, &mut self.state.rng)
    }

    fn update(&mut self, arm: usize, reward: f64, _collided: Option<bool>) -> Result<()> {
        self.state.record(arm, reward)
    }

    fn state(&self) -> &PlayerState {
        &self.state
    }

    fn name(&self) -> &'static str {
        "selfish_ucb1"
    }
}

/// Always pulls the same arm.
#[derive(Debug, Clone)]
pub struct FixedArm {
    state: PlayerState,
    arm: usize,
}

impl FixedArm {
    pub fn new(arms: usize, seed: u64, arm: usize) -> Result<Self> {
        check_arms(arms)?;
        if arm >= arms {
            return Err(Error::ArmOutOfRange { arm, arms });
        }
        Ok(Self {
            state: PlayerState::new(arms, seed),
            arm,
        })
    }
}

impl Policy for FixedArm {
    fn select(&mut self) -> usize {
        self.arm
    }

    fn update(&mut self, arm: usize, reward: f64, _collided: Option<bool>) -> Result<()> {
        self.state.record(arm, reward)
    }

    fn state(&self) -> &PlayerState {
        &self.state
    }

    fn name(&self) -> &'static str {
        "fixed_arm"
    }
}

/// Parameters of [`MusicalChairs`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MusicalChairsConfig {
    /// Length `T0` of the uniform exploration phase, in local steps.
    pub exploration_steps: u64,
    /// Use this player count instead of estimating it from collisions.
    pub known_players: Option<usize>,
}

impl MusicalChairsConfig {
    /// `ceil(16 K log T)` exploration steps with an estimated player count.
    pub fn for_horizon(arms: usize, horizon: u64) -> Self {
        Self {
            exploration_steps: default_exploration_steps(arms, horizon),
            known_players: None,
        }
    }
}

/// `ceil(16 K log T)`, at least 1.
pub fn default_exploration_steps(arms: usize, horizon: u64) -> u64 {
    let t = (horizon.max(1)) as f64;
    (math::ceil(16.0 * arms as f64 * math::ln(t)) as u64).max(1)
}

/// Player-count estimate from the collision count of a uniform exploration
/// phase: `round(log((T0 - C) / T0) / log(1 - 1/K)) + 1`, clamped to
/// `[1, K]`.
pub fn estimate_players(collisions: u64, exploration_steps: u64, arms: usize) -> usize {
    if arms <= 1 || exploration_steps == 0 {
        return 1;
    }
    if collisions >= exploration_steps {
        return arms;
    }
    let clean = (exploration_steps - collisions) as f64 / exploration_steps as f64;
    let others = math::round(math::ln(clean) / math::ln(1.0 - 1.0 / arms as f64));
    // others is finite and >= 0 here
    ((others as usize) + 1).clamp(1, arms)
}

#[derive(Debug, Clone, PartialEq)]
enum ChairsPhase {
    Exploring {
        collisions: u64,
        clean_pulls: Vec<u64>,
        clean_sums: Vec<f64>,
    },
    Seeking {
        candidates: Vec<usize>,
    },
    Settled(usize),
}

/// Musical Chairs with collision sensing.
///
/// Explores uniformly for `T0` steps, estimating arm means from
/// collision-free pulls and the number of players from the collision rate.
/// It then samples uniformly among the estimated top-`M` arms until a pull
/// does not collide, and stays on that arm for the rest of its life.
#[derive(Debug, Clone)]
pub struct MusicalChairs {
    state: PlayerState,
    config: MusicalChairsConfig,
    phase: ChairsPhase,
    estimated_players: Option<usize>,
}

impl MusicalChairs {
    /// Fails unless the environment grants collision sensing.
    pub fn new(arms: usize, seed: u64, config: MusicalChairsConfig, sensing: bool) -> Result<Self> {
        check_arms(arms)?;
        if !sensing {
            return Err(Error::config(
                "musical chairs needs an environment with collision sensing",
            ));
        }
        if let Some(m) = config.known_players {
            if m == 0 || m > arms {
                return Err(Error::config("musical chairs known_players must be in 1..=arms"));
            }
        }
        Ok(Self {
            state: PlayerState::new(arms, seed),
            config,
            phase: ChairsPhase::Exploring {
                collisions: 0,
                clean_pulls: vec![0; arms],
                clean_sums: vec![0.0; arms],
            },
            estimated_players: None,
        })
    }

    /// The arm this player sits on, once settled.
    pub fn settled_arm(&self) -> Option<usize> {
        match self.phase {
            ChairsPhase::Settled(arm) => Some(arm),
            _ => None,
        }
    }

    /// Player count used for the top-`M` set, once exploration is over.
    pub fn estimated_players(&self) -> Option<usize> {
        self.estimated_players
    }

    fn finish_exploration(&mut self) {
        let ChairsPhase::Exploring {
            collisions,
            clean_pulls,
            clean_sums,
        } = &self.phase
        else {
            return;
        };
        let arms = self.state.arms();
        let players = self.config.known_players.unwrap_or_else(|| {
            estimate_players(*collisions, self.config.exploration_steps, arms)
        });
        let means: Vec<f64> = clean_pulls
            .iter()
            .zip(clean_sums)
            .map(|(&n, &s)| s / n.max(1) as f64)
            .collect();
        let mut ranked: Vec<usize> = (0..arms).collect();
        // stable sort keeps the lower index first among equal means
        ranked.sort_by(|&a, &b| means[b].total_cmp(&means[a]));
        ranked.truncate(players);
        self.estimated_players = Some(players);
        self.phase = ChairsPhase::Seeking { candidates: ranked };
    }
}

impl Policy for MusicalChairs {
    fn select(&mut self) -> usize {
        if matches!(self.phase, ChairsPhase::Exploring { .. })
            && self.state.local_clock >= self.config.exploration_steps
        {
            self.finish_exploration();
        }
        let arms = self.state.arms();
        match &self.phase {
            ChairsPhase::Exploring { .. } => self.state.rng.random_range(0..arms),
            ChairsPhase::Seeking { candidates } => {
                candidates[self.state.rng.random_range(0..candidates.len())]
            }
            ChairsPhase::Settled(arm) => *arm,
        }
    }

    fn update(&mut self, arm: usize, reward: f64, collided: Option<bool>) -> Result<()> {
        let collided = collided.ok_or_else(|| {
            Error::config("musical chairs received no collision flag; sensing is required")
        })?;
        self.state.record(arm, reward)?;
        match &mut self.phase {
            ChairsPhase::Exploring {
                collisions,
                clean_pulls,
                clean_sums,
            } => {
                if collided {
                    *collisions += 1;
                } else {
                    clean_pulls[arm] += 1;
                    clean_sums[arm] += reward;
                }
            }
            ChairsPhase::Seeking { .. } => {
                if !collided {
                    self.phase = ChairsPhase::Settled(arm);
                }
            }
            ChairsPhase::Settled(_) => {}
        }
        Ok(())
    }

    fn state(&self) -> &PlayerState {
        &self.state
    }

    fn name(&self) -> &'static str {
        "musical_chairs"
    }
}

/// Declarative policy choice, used to build one instance per player.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyKind {
    SelfishUcb1 { tie_break: TieBreak },
    SelfishKlUcb { c: f64, tie_break: TieBreak },
    RandomizedSelfishKlUcb { c: f64 },
    FixedArm { arm: usize },
    /// `exploration_steps = None` means `ceil(16 K log T)`.
    MusicalChairs {
        exploration_steps: Option<u64>,
        known_players: Option<usize>,
    },
}

impl PolicyKind {
    /// Builds a fresh player. `horizon` only feeds defaults that depend on
    /// it; `sensing` says whether collision flags will be delivered.
    pub fn build(&self, arms: usize, seed: u64, horizon: u64, sensing: bool) -> Result<Box<dyn Policy>> {
        Ok(match *self {
            PolicyKind::SelfishUcb1 { tie_break } => Box::new(SelfishUcb1::new(arms, seed, tie_break)?),
            PolicyKind::SelfishKlUcb { c, tie_break } => {
                Box::new(SelfishKlUcb::new(arms, seed, c, tie_break)?)
            }
            PolicyKind::RandomizedSelfishKlUcb { c } => {
                Box::new(RandomizedSelfishKlUcb::new(arms, seed, c)?)
            }
            PolicyKind::FixedArm { arm } => Box::new(FixedArm::new(arms, seed, arm)?),
            PolicyKind::MusicalChairs {
                exploration_steps,
                known_players,
            } => {
                let config = MusicalChairsConfig {
                    exploration_steps: exploration_steps
                        .unwrap_or_else(|| default_exploration_steps(arms, horizon)),
                    known_players,
                };
                Box::new(MusicalChairs::new(arms, seed, config, sensing)?)
            }
        })
    }

    /// Checks the parameters against an environment without building.
    pub fn validate(&self, arms: usize, sensing: bool) -> Result<()> {
        self.build(arms, 0, 1, sensing).map(|_| ())
    }

    pub fn requires_sensing(&self) -> bool {
        matches!(self, PolicyKind::MusicalChairs { .. })
    }
}
