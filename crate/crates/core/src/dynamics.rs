//! Player populations that change over time.
//!
//! Three models, all discretized on the simulation clock:
//!
//! * `Static`: `M` players arrive at step 0 and never leave.
//! * `QuasiAsync`: one player at step 0, then Poisson arrivals at rate
//!   `lambda` per step until `max_players` are present; nobody leaves.
//! * `Mmk`: Poisson arrivals at rate `lambda`, exponential stays with rate
//!   `nu`, arrivals blocked while all `K` arms are taken. Starts empty.
//!
//! Per step an arrival happens with probability `1 - exp(-lambda)` and each
//! present player leaves with probability `1 - exp(-nu)`. Departures of a
//! step are emitted (and applied) before its arrival. The population stream
//! is separate from the environment and player streams, so the event list
//! does not depend on what the players do.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::policy::{PlayerState, Policy};
use crate::sim::{validate_checkpoints, BernoulliEnvironment, StepOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlayerId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PopulationModel {
    Static { players: usize },
    QuasiAsync { arrival_rate: f64, max_players: usize },
    Mmk { arrival_rate: f64, departure_rate: f64 },
}

fn check_rate(name: &'static str, rate: f64) -> Result<()> {
    if rate > 0.0 && rate < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value: rate,
            reason: "per-step rates must lie in (0, 1)",
        })
    }
}

impl PopulationModel {
    pub fn validate(&self, arms: usize) -> Result<()> {
        match *self {
            PopulationModel::Static { players } => {
                if players > arms {
                    return Err(Error::config("static population needs players <= arms"));
                }
            }
            PopulationModel::QuasiAsync {
                arrival_rate,
                max_players,
            } => {
                check_rate("arrival_rate", arrival_rate)?;
                if max_players == 0 || max_players > arms {
                    return Err(Error::config("quasi-async max_players must be in 1..=arms"));
                }
            }
            PopulationModel::Mmk {
                arrival_rate,
                departure_rate,
            } => {
                check_rate("arrival_rate", arrival_rate)?;
                check_rate("departure_rate", departure_rate)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Arrival(PlayerId),
    Departure(PlayerId),
    /// An arrival turned away because every arm was taken.
    BlockedArrival,
}

/// Something that happens at the start of step `time` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PopulationEvent {
    pub time: u64,
    pub kind: EventKind,
}

/// Probability that a Poisson clock of the given rate rings within a step.
fn per_step_probability(rate: f64) -> f64 {
    -math::exp_m1(-rate)
}

fn ring<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    let u: f64 = rng.random();
    u < p
}

/// Samples the event list of `model` over steps `0..horizon`.
///
/// Player ids are handed out in arrival order starting from 0.
pub fn sample_population<R: Rng + ?Sized>(
    model: &PopulationModel,
    arms: usize,
    horizon: u64,
    rng: &mut R,
) -> Result<Vec<PopulationEvent>> {
    model.validate(arms)?;
    let mut events = Vec::new();
    let mut next_id = 0u64;
    let mut arrive = |time: u64, events: &mut Vec<PopulationEvent>| {
        events.push(PopulationEvent {
            time,
            kind: EventKind::Arrival(PlayerId(next_id)),
        });
        next_id += 1;
        PlayerId(next_id - 1)
    };
    match *model {
        PopulationModel::Static { players } => {
            if horizon > 0 {
                for _ in 0..players {
                    arrive(0, &mut events);
                }
            }
        }
        PopulationModel::QuasiAsync {
            arrival_rate,
            max_players,
        } => {
            if horizon == 0 {
                return Ok(events);
            }
            let p = per_step_probability(arrival_rate);
            arrive(0, &mut events);
            let mut present = 1;
            for t in 1..horizon {
                // one draw per step even once full, to keep the stream aligned
                if ring(rng, p) && present < max_players {
                    arrive(t, &mut events);
                    present += 1;
                }
            }
        }
        PopulationModel::Mmk {
            arrival_rate,
            departure_rate,
        } => {
            let p_arrive = per_step_probability(arrival_rate);
            let p_leave = per_step_probability(departure_rate);
            let mut present: Vec<PlayerId> = Vec::new();
            for t in 0..horizon {
                present.retain(|&id| {
                    let leaves = ring(rng, p_leave);
                    if leaves {
                        events.push(PopulationEvent {
                            time: t,
                            kind: EventKind::Departure(id),
                        });
                    }
                    !leaves
                });
                if ring(rng, p_arrive) {
                    if present.len() < arms {
                        present.push(arrive(t, &mut events));
                    } else {
                        events.push(PopulationEvent {
                            time: t,
                            kind: EventKind::BlockedArrival,
                        });
                    }
                }
            }
        }
    }
    Ok(events)
}

/// Time-averaged number of present players over `0..horizon`.
pub fn mean_active(events: &[PopulationEvent], horizon: u64) -> f64 {
    if horizon == 0 {
        return 0.0;
    }
    let mut present: i64 = 0;
    let mut area: i128 = 0;
    let mut last = 0u64;
    for e in events {
        area += present as i128 * (e.time - last) as i128;
        last = e.time;
        match e.kind {
            EventKind::Arrival(_) => present += 1,
            EventKind::Departure(_) => present -= 1,
            EventKind::BlockedArrival => {}
        }
    }
    area += present as i128 * (horizon - last) as i128;
    area as f64 / horizon as f64
}

/// Outcome of one dynamic run.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioTrace {
    /// Achieved expected reward per step.
    pub achieved_rate: f64,
    /// Oracle reward per step for the same population path.
    pub oracle_rate: f64,
    /// `achieved_rate / oracle_rate`; 1 when the oracle rate is 0.
    pub ratio: f64,
    pub checkpoints: Vec<u64>,
    /// Cumulative `oracle - achieved` expected reward after each checkpoint.
    pub cumulative_regret: Vec<f64>,
    /// Players present during the step ending at each checkpoint.
    pub active_counts: Vec<usize>,
    pub arrivals: u64,
    pub departures: u64,
    pub blocked: u64,
    /// Players still present at the horizon, in arrival order.
    pub survivors: Vec<(PlayerId, PlayerState)>,
}

/// Runs the synchronous loop over a changing population.
///
/// `spawn` builds a fresh policy for each arriving player; its local clock
/// starts at 0 so every index and perturbation uses the player's own time.
/// A step with nobody present contributes 0 to both rates.
pub fn run_dynamic<F>(
    mut env: BernoulliEnvironment,
    mut spawn: F,
    events: &[PopulationEvent],
    horizon: u64,
    checkpoints: &[u64],
) -> Result<RatioTrace>
where
    F: FnMut(PlayerId) -> Result<Box<dyn Policy>>,
{
    validate_checkpoints(checkpoints, horizon)?;
    if events.windows(2).any(|w| w[0].time > w[1].time) {
        return Err(Error::config("population events must be sorted by time"));
    }
    let arms = env.arms();
    let sensing = env.sensing();
    let mut present: Vec<(PlayerId, Box<dyn Policy>)> = Vec::new();
    let mut choices = Vec::with_capacity(arms);
    let mut outcome = StepOutcome::default();
    let mut achieved = 0.0;
    let mut oracle = 0.0;
    let (mut arrivals, mut departures, mut blocked) = (0, 0, 0);
    let mut active_counts = Vec::with_capacity(checkpoints.len());
    let mut cumulative_regret = Vec::with_capacity(checkpoints.len());
    let mut regret = 0.0;
    let mut next_checkpoint = checkpoints.iter().peekable();
    let mut pending = events.iter().peekable();

    for t in 0..horizon {
        while let Some(e) = pending.next_if(|e| e.time == t) {
            match e.kind {
                EventKind::Arrival(id) => {
                    if present.len() >= arms {
                        return Err(Error::config("arrival while every arm is taken"));
                    }
                    let player = spawn(id)?;
                    if player.state().arms() != arms {
                        return Err(Error::config("spawned policy has the wrong arm count"));
                    }
                    present.push((id, player));
                    arrivals += 1;
                }
                EventKind::Departure(id) => {
                    let pos = present
                        .iter()
                        .position(|(p, _)| *p == id)
                        .ok_or_else(|| Error::config("departure of a player who is not present"))?;
                    present.remove(pos);
                    departures += 1;
                }
                EventKind::BlockedArrival => blocked += 1,
            }
        }

        choices.clear();
        choices.extend(present.iter_mut().map(|(_, p)| p.select()));
        env.step_into(&choices, &mut outcome)?;
        for (m, (_, player)) in present.iter_mut().enumerate() {
            let flag = sensing.then_some(outcome.collided[m]);
            player.update(choices[m], outcome.rewards[m], flag)?;
        }
        let step_oracle = env.oracle_rate(present.len())?;
        achieved += outcome.expected_reward;
        oracle += step_oracle;
        regret += (step_oracle - outcome.expected_reward).max(0.0);

        if next_checkpoint.next_if(|&&c| c == t + 1).is_some() {
            active_counts.push(present.len());
            cumulative_regret.push(regret);
        }
    }
    if pending.next().is_some() {
        return Err(Error::config("population events beyond the horizon"));
    }

    let steps = horizon.max(1) as f64;
    let (achieved_rate, oracle_rate) = (achieved / steps, oracle / steps);
    let ratio = if oracle > 0.0 {
        (achieved / oracle).min(1.0)
    } else {
        1.0
    };
    Ok(RatioTrace {
        achieved_rate,
        oracle_rate,
        ratio,
        checkpoints: checkpoints.to_vec(),
        cumulative_regret,
        active_counts,
        arrivals,
        departures,
        blocked,
        survivors: present
            .into_iter()
            .map(|(id, p)| (id, p.state().clone()))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::FixedArm;
    use crate::stream_from_seed;
    use alloc::vec;

    fn env(means: &[f64]) -> BernoulliEnvironment {
        BernoulliEnvironment::new(means.to_vec(), 1, false).unwrap()
    }

    #[test]
    fn static_model_emits_arrivals_at_zero() {
        let ev = sample_population(&PopulationModel::Static { players: 3 }, 5, 100, &mut stream_from_seed(0)).unwrap();
        assert_eq!(ev.len(), 3);
        for (i, e) in ev.iter().enumerate() {
            assert_eq!(*e, PopulationEvent { time: 0, kind: EventKind::Arrival(PlayerId(i as u64)) });
        }
    }

    #[test]
    fn quasi_async_shape() {
        let model = PopulationModel::QuasiAsync { arrival_rate: 1e-4, max_players: 5 };
        let ev = sample_population(&model, 5, 60_000, &mut stream_from_seed(4)).unwrap();
        assert_eq!(ev[0].time, 0);
        assert!(ev.windows(2).all(|w| w[0].time < w[1].time));
        assert!(ev.len() <= 5);
        assert!(ev.iter().all(|e| matches!(e.kind, EventKind::Arrival(_))));
    }

    #[test]
    fn mmk_respects_capacity_and_order() {
        let model = PopulationModel::Mmk { arrival_rate: 0.2, departure_rate: 0.01 };
        let ev = sample_population(&model, 3, 5_000, &mut stream_from_seed(9)).unwrap();
        let mut present: Vec<PlayerId> = Vec::new();
        let mut blocked = 0;
        for e in &ev {
            match e.kind {
                EventKind::Arrival(id) => {
                    present.push(id);
                    assert!(present.len() <= 3);
                }
                EventKind::Departure(id) => {
                    let pos = present.iter().position(|&p| p == id).expect("departure of absent player");
                    present.remove(pos);
                }
                EventKind::BlockedArrival => {
                    assert_eq!(present.len(), 3);
                    blocked += 1;
                }
            }
        }
        assert!(blocked > 0);
    }

    #[test]
    fn model_validation() {
        assert!(PopulationModel::Static { players: 4 }.validate(3).is_err());
        assert!(PopulationModel::QuasiAsync { arrival_rate: 0.0, max_players: 2 }.validate(3).is_err());
        assert!(PopulationModel::QuasiAsync { arrival_rate: 0.1, max_players: 4 }.validate(3).is_err());
        assert!(PopulationModel::Mmk { arrival_rate: 0.1, departure_rate: 1.0 }.validate(3).is_err());
        assert!(PopulationModel::Mmk { arrival_rate: 0.1, departure_rate: 0.5 }.validate(3).is_ok());
    }

    #[test]
    fn oracle_assignment_has_unit_ratio() {
        let events = sample_population(&PopulationModel::Static { players: 2 }, 3, 500, &mut stream_from_seed(0)).unwrap();
        let trace = run_dynamic(
            env(&[0.2, 0.7, 0.4]),
            |id| Ok(Box::new(FixedArm::new(3, 0, [1, 2][id.0 as usize])?) as Box<dyn Policy>),
            &events,
            500,
            &[250, 500],
        )
        .unwrap();
        assert_eq!(trace.ratio, 1.0);
        assert_eq!(trace.active_counts, vec![2, 2]);
    }

    #[test]
    fn permanent_collision_has_zero_ratio() {
        let events = sample_population(&PopulationModel::Static { players: 3 }, 3, 200, &mut stream_from_seed(0)).unwrap();
        let trace = run_dynamic(
            env(&[0.2, 0.7, 0.4]),
            |_| Ok(Box::new(FixedArm::new(3, 0, 0)?) as Box<dyn Policy>),
            &events,
            200,
            &[200],
        )
        .unwrap();
        assert_eq!(trace.ratio, 0.0);
        assert!(trace.oracle_rate > 0.0);
    }

    #[test]
    fn empty_steps_count_for_nothing() {
        let events = [PopulationEvent { time: 50, kind: EventKind::Arrival(PlayerId(0)) }];
        let trace = run_dynamic(
            env(&[0.5, 0.25]),
            |_| Ok(Box::new(FixedArm::new(2, 0, 0)?) as Box<dyn Policy>),
            &events,
            100,
            &[10, 100],
        )
        .unwrap();
        assert_eq!(trace.ratio, 1.0);
        assert_eq!(trace.oracle_rate, 0.25);
        assert_eq!(trace.active_counts, vec![0, 1]);
    }

    #[test]
    fn rejects_inconsistent_events() {
        let spawn = |_| Ok(Box::new(FixedArm::new(2, 0, 0)?) as Box<dyn Policy>);
        let leave = [PopulationEvent { time: 3, kind: EventKind::Departure(PlayerId(7)) }];
        assert!(run_dynamic(env(&[0.5, 0.5]), spawn, &leave, 10, &[10]).is_err());
        let crowd: Vec<_> = (0..3).map(|i| PopulationEvent { time: 0, kind: EventKind::Arrival(PlayerId(i)) }).collect();
        assert!(run_dynamic(env(&[0.5, 0.5]), spawn, &crowd, 10, &[10]).is_err());
        let late = [PopulationEvent { time: 10, kind: EventKind::Arrival(PlayerId(0)) }];
        assert!(run_dynamic(env(&[0.5, 0.5]), spawn, &late, 10, &[10]).is_err());
    }

    #[test]
    fn mean_active_counts_area() {
        let events = [
            PopulationEvent { time: 0, kind: EventKind::Arrival(PlayerId(0)) },
            PopulationEvent { time: 5, kind: EventKind::Arrival(PlayerId(1)) },
            PopulationEvent { time: 8, kind: EventKind::Departure(PlayerId(0)) },
        ];
        // 5 * 1 + 3 * 2 + 2 * 1 over 10 steps
        assert_eq!(mean_active(&events, 10), 1.3);
    }
}
