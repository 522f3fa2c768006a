use mpmab_core::dynamics::{mean_active, run_dynamic, sample_population, PopulationModel};
use mpmab_core::policy::{Policy, PolicyKind, TieBreak};
use mpmab_core::sim::{log_spaced_checkpoints, run_static, BernoulliEnvironment, StaticRun};
use mpmab_core::stream_from_seed;
use proptest::prelude::*;
use rand_distr::{Distribution, Exp};

proptest! {
    #[test]
    fn step_regret_nonnegative_and_rewards_conserved(
        means in prop::collection::vec(0.0f64..=1.0, 1..8),
        picks in prop::collection::vec(0usize..8, 0..8),
        seed in any::<u64>(),
    ) {
        let arms = means.len();
        let choices: Vec<usize> = picks.iter().map(|p| p % arms).take(arms).collect();
        let mut env = BernoulliEnvironment::new(means.clone(), seed, false).unwrap();
        let out = env.step(&choices).unwrap();
        let oracle = env.oracle_rate(choices.len()).unwrap();
        prop_assert!(oracle - out.expected_reward >= -1e-12);
        let alone = out.occupancy.iter().filter(|&&c| c == 1).count();
        let paid: f64 = out.rewards.iter().sum();
        prop_assert!(paid <= alone as f64);
        for (m, &a) in choices.iter().enumerate() {
            prop_assert_eq!(out.collided[m], out.occupancy[a] >= 2);
            if out.collided[m] {
                prop_assert_eq!(out.rewards[m], 0.0);
            }
        }
        let direct: f64 = choices.iter().enumerate().filter(|(m, _)| !out.collided[*m]).map(|(_, &a)| means[a]).sum();
        prop_assert!((direct - out.expected_reward).abs() < 1e-12);
    }
}

fn players(kind: &PolicyKind, n: usize, arms: usize, seed: u64) -> Vec<Box<dyn Policy>> {
    (0..n).map(|i| kind.build(arms, seed + i as u64, 5000, false).unwrap()).collect()
}

#[test]
fn static_runs_are_deterministic_and_monotone() {
    let kind = PolicyKind::RandomizedSelfishKlUcb { c: 0.0 };
    let cps = log_spaced_checkpoints(5000, 50);
    let run = || {
        let env = BernoulliEnvironment::new(vec![0.9, 0.6, 0.5, 0.2], 42, false).unwrap();
        run_static(env, players(&kind, 3, 4, 100), 5000, &cps).unwrap()
    };
    let a = run();
    assert_eq!(a, run());
    assert!(a.cumulative_regret.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*a.cumulative_regret.last().unwrap(), a.total_regret);
}

#[test]
fn lowest_tie_break_collides_forever() {
    // identical lowest-index players collide forever on two arms
    let lowest = PolicyKind::SelfishKlUcb { c: 0.0, tie_break: TieBreak::Lowest };
    let env = BernoulliEnvironment::new(vec![0.9, 0.1], 1, false).unwrap();
    let trace = run_static(env, players(&lowest, 2, 2, 3), 2000, &[2000]).unwrap();
    assert_eq!(trace.total_regret, 2000.0);
    assert_eq!(trace.total_collisions, 2000);
}

#[test]
fn quasi_async_with_vanishing_rate_is_a_single_static_player() {
    let kind = PolicyKind::RandomizedSelfishKlUcb { c: 0.0 };
    let horizon = 3000;
    let means = vec![0.7, 0.4, 0.2];
    let model = PopulationModel::QuasiAsync { arrival_rate: 1e-300, max_players: 3 };
    let events = sample_population(&model, 3, horizon, &mut stream_from_seed(9)).unwrap();
    assert_eq!(events.len(), 1);

    let env = BernoulliEnvironment::new(means.clone(), 77, false).unwrap();
    let dynamic = run_dynamic(env, |id| kind.build(3, 500 + id.0, horizon, false), &events, horizon, &[horizon]).unwrap();

    let env = BernoulliEnvironment::new(means, 77, false).unwrap();
    let mut stat = StaticRun::new(env, vec![kind.build(3, 500, horizon, false).unwrap()]).unwrap();
    stat.advance(horizon).unwrap();

    assert_eq!(&dynamic.survivors[0].1, stat.players()[0].state());
    let regret_from_ratio = horizon as f64 * (dynamic.oracle_rate - dynamic.achieved_rate);
    assert!((regret_from_ratio - stat.cumulative_regret()).abs() < 1e-9);
}

#[test]
fn quasi_async_population_never_shrinks() {
    let model = PopulationModel::QuasiAsync { arrival_rate: 1e-3, max_players: 4 };
    let events = sample_population(&model, 4, 20_000, &mut stream_from_seed(1)).unwrap();
    let env = BernoulliEnvironment::new(vec![0.9, 0.8, 0.7, 0.6], 2, false).unwrap();
    let cps = log_spaced_checkpoints(20_000, 40);
    let kind = PolicyKind::RandomizedSelfishKlUcb { c: 0.0 };
    let trace = run_dynamic(env, |id| kind.build(4, id.0, 20_000, false), &events, 20_000, &cps).unwrap();
    assert!(trace.active_counts.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*trace.active_counts.last().unwrap(), 4);
    assert!((0.0..=1.0).contains(&trace.ratio));
}

#[test]
fn event_streams_are_reproducible() {
    let model = PopulationModel::Mmk { arrival_rate: 1e-2, departure_rate: 1e-3 };
    let a = sample_population(&model, 10, 50_000, &mut stream_from_seed(3)).unwrap();
    let b = sample_population(&model, 10, 50_000, &mut stream_from_seed(3)).unwrap();
    assert_eq!(a, b);
}

/// Continuous-time M/M/K/K queue: exponential inter-arrival and service
/// times, arrivals lost at capacity. Returns the time-averaged occupancy.
fn queue_oracle(lambda: f64, nu: f64, capacity: usize, horizon: f64, seed: u64) -> f64 {
    let mut rng = stream_from_seed(seed);
    let arrival = Exp::new(lambda).unwrap();
    let mut departures: Vec<f64> = Vec::new();
    let mut now = 0.0;
    let mut area = 0.0;
    let mut next_arrival = arrival.sample(&mut rng);
    loop {
        let (idx, next_departure) = departures
            .iter()
            .copied()
            .enumerate()
            .fold((usize::MAX, f64::INFINITY), |best, (i, d)| if d < best.1 { (i, d) } else { best });
        let next = next_arrival.min(next_departure).min(horizon);
        area += departures.len() as f64 * (next - now);
        now = next;
        if now >= horizon {
            break;
        }
        if next_departure <= next_arrival {
            departures.swap_remove(idx);
        } else {
            if departures.len() < capacity {
                let stay: f64 = Exp::new(nu).unwrap().sample(&mut rng);
                departures.push(now + stay);
            }
            next_arrival = now + arrival.sample(&mut rng);
        }
    }
    area / horizon
}

#[test]
fn mmk_occupancy_matches_queue_oracle() {
    let (lambda, nu, k, horizon) = (1e-3, 1e-4, 10usize, 1_000_000u64);
    let seeds = 50;
    let model = PopulationModel::Mmk { arrival_rate: lambda, departure_rate: nu };
    let sampled: f64 = (0..seeds)
        .map(|s| {
            let events = sample_population(&model, k, horizon, &mut stream_from_seed(s)).unwrap();
            mean_active(&events, horizon)
        })
        .sum::<f64>()
        / seeds as f64;
    let oracle: f64 = (0..seeds)
        .map(|s| queue_oracle(lambda, nu, k, horizon as f64, 10_000 + s))
        .sum::<f64>()
        / seeds as f64;
    assert!((sampled - oracle).abs() <= 0.1 * oracle, "sampled {sampled} oracle {oracle}");
}
