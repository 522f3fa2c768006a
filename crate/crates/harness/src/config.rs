//! Declarative experiment configuration, read from TOML.
//!
//! ```toml
//! name = "fig1_randomized"
//! horizon = 10000
//! replications = 500
//! seed = 1
//!
//! [checkpoints]
//! kind = "log"
//! count = 200
//!
//! [environment]
//! kind = "explicit"
//! means = [0.9, 0.1]
//!
//! [population]
//! kind = "static"
//! players = 2
//!
//! [policy]
//! kind = "randomized_selfish_klucb"
//! ```
//!
//! Unknown keys are rejected. [`ExperimentConfig::validate`] checks
//! everything the simulator would otherwise reject mid-run.

use std::path::{Path, PathBuf};

use mpmab_core::dynamics::PopulationModel;
use mpmab_core::policy::{PolicyKind, TieBreak};
use mpmab_core::sim::{linear_checkpoints, log_spaced_checkpoints, validate_checkpoints};
use mpmab_core::Stream;
use serde::{Deserialize, Serialize};

use crate::envgen::{gen_linspace_mu, gen_perturbed_mu};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub horizon: u64,
    pub replications: u64,
    pub seed: u64,
    /// Deliver collision flags to the players.
    #[serde(default)]
    pub sensing: bool,
    #[serde(default)]
    pub checkpoints: CheckpointSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub environment: EnvironmentSpec,
    pub population: PopulationSpec,
    /// One policy for every player.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicySpec>,
    /// One policy per player, static populations only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub players: Vec<PolicySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckpointSpec {
    Log { count: usize },
    Linear { count: usize },
    Explicit { steps: Vec<u64> },
}

impl Default for CheckpointSpec {
    fn default() -> Self {
        CheckpointSpec::Log { count: 200 }
    }
}

impl CheckpointSpec {
    pub fn steps(&self, horizon: u64) -> Vec<u64> {
        match self {
            CheckpointSpec::Log { count } => log_spaced_checkpoints(horizon, *count),
            CheckpointSpec::Linear { count } => linear_checkpoints(horizon, *count),
            CheckpointSpec::Explicit { steps } => steps.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    Explicit {
        means: Vec<f64>,
    },
    Linspace {
        high: f64,
        low: f64,
        arms: usize,
    },
    /// Redrawn for every replication from its own stream.
    UniformPerturbed {
        center: f64,
        width: f64,
        arms: usize,
    },
    /// `top_arms` means from `top` down to `boundary`, then the rest from
    /// `bottom_high` down to `bottom_low`.
    Gap {
        top: f64,
        boundary: f64,
        bottom_high: f64,
        bottom_low: f64,
        top_arms: usize,
        arms: usize,
    },
}

impl EnvironmentSpec {
    pub fn arms(&self) -> usize {
        match self {
            EnvironmentSpec::Explicit { means } => means.len(),
            EnvironmentSpec::Linspace { arms, .. }
            | EnvironmentSpec::UniformPerturbed { arms, .. }
            | EnvironmentSpec::Gap { arms, .. } => *arms,
        }
    }

    /// Whether [`EnvironmentSpec::means`] consumes randomness.
    pub fn is_random(&self) -> bool {
        matches!(self, EnvironmentSpec::UniformPerturbed { .. })
    }

    /// Arm means; `rng` is only drawn from for random environments.
    pub fn means(&self, rng: &mut Stream) -> Result<Vec<f64>> {
        let keyed = |e: Error| match e {
            Error::Config { key, message } => Error::config(format!("environment.{key}"), message),
            other => other,
        };
        match self {
            EnvironmentSpec::Explicit { means } => {
                for (k, &m) in means.iter().enumerate() {
                    if !(0.0..=1.0).contains(&m) {
                        return Err(Error::config(
                            format!("environment.means[{k}]"),
                            format!("{m} is not in [0, 1]"),
                        ));
                    }
                }
                Ok(means.clone())
            }
            EnvironmentSpec::Linspace { high, low, arms } => {
                gen_linspace_mu(*high, *low, *arms).map_err(keyed)
            }
            EnvironmentSpec::UniformPerturbed {
                center,
                width,
                arms,
            } => gen_perturbed_mu(*center, *width, *arms, rng).map_err(keyed),
            EnvironmentSpec::Gap {
                top,
                boundary,
                bottom_high,
                bottom_low,
                top_arms,
                arms,
            } => {
                if *top_arms == 0 || top_arms >= arms {
                    return Err(Error::config(
                        "environment.top_arms",
                        "must be at least 1 and below arms",
                    ));
                }
                let mut mu = if *top_arms == 1 {
                    gen_linspace_mu(*boundary, *boundary, 1)
                } else {
                    gen_linspace_mu(*top, *boundary, *top_arms)
                }
                .map_err(keyed)?;
                mu.extend(gen_linspace_mu(*bottom_high, *bottom_low, arms - top_arms).map_err(keyed)?);
                Ok(mu)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PopulationSpec {
    Static {
        players: usize,
    },
    QuasiAsync {
        arrival_rate: f64,
        max_players: usize,
    },
    Mmk {
        arrival_rate: f64,
        departure_rate: f64,
    },
}

impl PopulationSpec {
    pub fn model(&self) -> PopulationModel {
        match *self {
            PopulationSpec::Static { players } => PopulationModel::Static { players },
            PopulationSpec::QuasiAsync {
                arrival_rate,
                max_players,
            } => PopulationModel::QuasiAsync {
                arrival_rate,
                max_players,
            },
            PopulationSpec::Mmk {
                arrival_rate,
                departure_rate,
            } => PopulationModel::Mmk {
                arrival_rate,
                departure_rate,
            },
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self, PopulationSpec::Static { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreakSpec {
    #[default]
    Lowest,
    Random,
}

impl From<TieBreakSpec> for TieBreak {
    fn from(t: TieBreakSpec) -> Self {
        match t {
            TieBreakSpec::Lowest => TieBreak::Lowest,
            TieBreakSpec::Random => TieBreak::Random,
        }
    }
}

fn default_c() -> f64 {
    0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    SelfishUcb1 {
        #[serde(default)]
        tie_break: TieBreakSpec,
    },
    SelfishKlucb {
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default)]
        tie_break: TieBreakSpec,
    },
    RandomizedSelfishKlucb {
        #[serde(default = "default_c")]
        c: f64,
    },
    FixedArm {
        arm: usize,
    },
    MusicalChairs {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        exploration_steps: Option<u64>,
        /// Use the true player count instead of estimating it.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        known_players: Option<usize>,
    },
}

impl PolicySpec {
    pub fn kind(&self) -> PolicyKind {
        match *self {
            PolicySpec::SelfishUcb1 { tie_break } => PolicyKind::SelfishUcb1 {
                tie_break: tie_break.into(),
            },
            PolicySpec::SelfishKlucb { c, tie_break } => PolicyKind::SelfishKlUcb {
                c,
                tie_break: tie_break.into(),
            },
            PolicySpec::RandomizedSelfishKlucb { c } => PolicyKind::RandomizedSelfishKlUcb { c },
            PolicySpec::FixedArm { arm } => PolicyKind::FixedArm { arm },
            PolicySpec::MusicalChairs {
                exploration_steps,
                known_players,
            } => PolicyKind::MusicalChairs {
                exploration_steps,
                known_players,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Lowest mean of a `linspace` environment.
    MuLow,
    /// Boundary mean of a `gap` environment.
    Delta,
    /// Player count of a static population.
    MPlayers,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::MuLow => "mu_low",
            SweepParameter::Delta => "delta",
            SweepParameter::MPlayers => "m_players",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

impl ExperimentConfig {
    /// Reads a config file. A path without a file behind it is retried with
    /// `.toml` appended.
    pub fn load(path: &Path) -> Result<Self> {
        let resolved = resolve_path(path);
        let text = std::fs::read_to_string(&resolved).map_err(|source| Error::Read {
            path: resolved.clone(),
            source,
        })?;
        let cfg = Self::parse(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: resolved.clone(),
                message,
            },
            other => other,
        })?;
        Ok(cfg)
    }

    /// Parses and validates TOML text.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn checkpoint_steps(&self) -> Vec<u64> {
        self.checkpoints.steps(self.horizon)
    }

    /// Policy of static player `i`.
    pub fn policy_for(&self, i: usize) -> &PolicySpec {
        match &self.policy {
            Some(p) => p,
            None => &self.players[i],
        }
    }

    /// Every policy spec in use, in player order where that applies.
    pub fn policies(&self) -> Vec<&PolicySpec> {
        match &self.policy {
            Some(p) => vec![p],
            None => self.players.iter().collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::config("name", "must not be empty"));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        if self.replications == 0 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        if self.replications > crate::seeds::MAX_REPLICATIONS {
            return Err(Error::config("replications", "too large"));
        }
        let steps = self.checkpoint_steps();
        if steps.is_empty() {
            return Err(Error::config("checkpoints", "no checkpoint in [1, horizon]"));
        }
        validate_checkpoints(&steps, self.horizon).map_err(|e| Error::at("checkpoints", e))?;

        let arms = self.environment.arms();
        if arms == 0 {
            return Err(Error::config("environment", "needs at least one arm"));
        }
        // also validates every mean; random environments get a throwaway stream
        self.environment.means(&mut mpmab_core::stream_from_seed(0))?;

        let model = self.population.model();
        model.validate(arms).map_err(|e| Error::at("population", e))?;

        match (&self.policy, self.players.is_empty()) {
            (Some(_), false) => {
                return Err(Error::config("players", "give either `policy` or `players`, not both"))
            }
            (None, true) => return Err(Error::config("policy", "missing")),
            (None, false) => match self.population {
                PopulationSpec::Static { players } if players == self.players.len() => {}
                PopulationSpec::Static { players } => {
                    return Err(Error::config(
                        "players",
                        format!("{} entries for {players} players", self.players.len()),
                    ))
                }
                _ => {
                    return Err(Error::config(
                        "players",
                        "per-player policies need a static population; use `policy`",
                    ))
                }
            },
            (Some(_), true) => {}
        }
        for (i, spec) in self.policies().into_iter().enumerate() {
            let key = if self.policy.is_some() {
                "policy".to_string()
            } else {
                format!("players[{i}]")
            };
            spec.kind()
                .validate(arms, self.sensing)
                .map_err(|e| Error::at(&key, e))?;
            if let PolicySpec::MusicalChairs {
                exploration_steps: Some(0),
                ..
            } = spec
            {
                return Err(Error::config(key, "exploration_steps must be at least 1"));
            }
            if let PolicySpec::MusicalChairs {
                known_players: Some(m),
                ..
            } = spec
            {
                if *m == 0 || *m > arms {
                    return Err(Error::config(key, "known_players must be in 1..=arms"));
                }
            }
        }

        if let Some(sweep) = &self.sweep {
            self.validate_sweep(sweep)?;
        }
        Ok(())
    }

    fn validate_sweep(&self, sweep: &SweepSpec) -> Result<()> {
        if sweep.values.is_empty() {
            return Err(Error::config("sweep.values", "must not be empty"));
        }
        for &v in &sweep.values {
            self.with_sweep_value(sweep.parameter, v)?;
        }
        Ok(())
    }

    /// A copy of this config with the sweep parameter set to `value`,
    /// validated, and without the sweep table.
    pub fn with_sweep_value(&self, parameter: SweepParameter, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.sweep = None;
        match (parameter, &mut cfg.environment, &mut cfg.population) {
            (SweepParameter::MuLow, EnvironmentSpec::Linspace { low, .. }, _) => *low = value,
            (SweepParameter::MuLow, _, _) => {
                return Err(Error::config("sweep.parameter", "mu_low needs a linspace environment"))
            }
            (SweepParameter::Delta, EnvironmentSpec::Gap { boundary, .. }, _) => *boundary = value,
            (SweepParameter::Delta, _, _) => {
                return Err(Error::config("sweep.parameter", "delta needs a gap environment"))
            }
            (SweepParameter::MPlayers, _, PopulationSpec::Static { players }) => {
                if !cfg.players.is_empty() {
                    return Err(Error::config(
                        "sweep.parameter",
                        "m_players needs one shared `policy`, not a `players` list",
                    ));
                }
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::config(
                        "sweep.values",
                        format!("{value} is not a positive player count"),
                    ));
                }
                *players = value as usize;
            }
            (SweepParameter::MPlayers, _, _) => {
                return Err(Error::config(
                    "sweep.parameter",
                    "m_players needs a static population",
                ))
            }
        }
        cfg.validate().map_err(|e| match e {
            Error::Config { key, message } => {
                Error::config("sweep.values", format!("value {value}: {key}: {message}"))
            }
            other => other,
        })?;
        Ok(cfg)
    }
}

fn resolve_path(path: &Path) -> PathBuf {
    if path.is_file() {
        return path.to_path_buf();
    }
    let mut with_ext = path.as_os_str().to_owned();
    with_ext.push(".toml");
    let with_ext = PathBuf::from(with_ext);
    if with_ext.is_file() {
        with_ext
    } else {
        path.to_path_buf()
    }
}
