use mpmab_core::policy::{
    argmax_lowest, perturbed_argmax, MusicalChairs, MusicalChairsConfig, Policy, PolicyKind,
    RandomizedSelfishKlUcb, TieBreak,
};
use mpmab_core::sim::{BernoulliEnvironment, StaticRun};
use mpmab_core::stream_from_seed;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn all_kinds() -> Vec<PolicyKind> {
    vec![
        PolicyKind::SelfishUcb1 { tie_break: TieBreak::Random },
        PolicyKind::SelfishKlUcb { c: 0.0, tie_break: TieBreak::Lowest },
        PolicyKind::SelfishKlUcb { c: 3.0, tie_break: TieBreak::Random },
        PolicyKind::RandomizedSelfishKlUcb { c: 0.0 },
        PolicyKind::FixedArm { arm: 1 },
        PolicyKind::MusicalChairs { exploration_steps: Some(40), known_players: None },
    ]
}

fn decisions(kind: &PolicyKind, seed: u64) -> Vec<usize> {
    let env = BernoulliEnvironment::new(vec![0.8, 0.5, 0.3], 77, true).unwrap();
    let players = (0..2).map(|i| kind.build(3, seed + i, 400, true).unwrap()).collect();
    let mut run = StaticRun::new(env, players).unwrap();
    let mut out = Vec::new();
    for _ in 0..400 {
        run.step().unwrap();
        out.extend_from_slice(run.last_step().0);
    }
    out
}

#[test]
fn decision_sequences_are_reproducible() {
    for kind in all_kinds() {
        assert_eq!(decisions(&kind, 5), decisions(&kind, 5), "{kind:?}");
    }
}

#[test]
fn state_invariants_hold_along_runs() {
    for kind in all_kinds() {
        let env = BernoulliEnvironment::new(vec![0.8, 0.5, 0.3], 3, true).unwrap();
        let players = (0..3).map(|i| kind.build(3, 10 + i, 300, true).unwrap()).collect();
        let mut run = StaticRun::new(env, players).unwrap();
        for _ in 0..300 {
            run.step().unwrap();
            for p in run.players() {
                let s = p.state();
                assert_eq!(s.pull_counts().iter().sum::<u64>(), s.local_clock());
                for k in 0..s.arms() {
                    assert!(s.reward_sums()[k] <= s.pull_counts()[k] as f64);
                    assert!((0.0..=1.0).contains(&s.empirical_mean(k)));
                }
            }
        }
    }
}

#[test]
fn gaussian_perturbations_are_standard_normal() {
    // the additive term is noise / t, so noise itself must be N(0, 1)
    let mut p = RandomizedSelfishKlUcb::new(4, 123, 0.0).unwrap();
    let mut draws = Vec::new();
    for step in 0..25_000u64 {
        let arm = p.select();
        draws.extend_from_slice(p.last_noise());
        p.update(arm, (step % 2) as f64, None).unwrap();
    }
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 4.0 / n.sqrt(), "mean {mean}");
    assert!((var - 1.0).abs() < 4.0 * (2.0 / n).sqrt(), "var {var}");
    // Kolmogorov-Smirnov against the normal cdf at the 0.1% level
    draws.sort_by(f64::total_cmp);
    let ks = draws
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let cdf = normal_cdf(z);
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 1.95 / n.sqrt(), "ks {ks}");
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

#[test]
fn perturbation_decays_with_time() {
    // top-two gap 10 / t: disagreement needs Z2 - Z1 > 10, i.e. a 7-sigma event
    let mut rng = stream_from_seed(31);
    for t in [10.0, 1e3, 1e5] {
        let gap = 10.0 / t;
        let indices = [0.6, 0.6 + gap, 0.2];
        let trials = 20_000;
        let agree = (0..trials)
            .filter(|_| {
                let z: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
                perturbed_argmax(&indices, &z, t) == argmax_lowest(&indices)
            })
            .count();
        assert!(agree as f64 / trials as f64 >= 0.999, "t = {t}: {agree}");
    }
    // and below the gap scale the perturbation still matters
    let indices = [0.6, 0.6 + 0.1 / 10.0];
    let flips = (0..20_000)
        .filter(|_| {
            let z: Vec<f64> = (0..2).map(|_| rng.sample(StandardNormal)).collect();
            perturbed_argmax(&indices, &z, 10.0) == 0
        })
        .count();
    assert!(flips > 1000);
}

#[test]
fn musical_chairs_two_players_orthogonalize() {
    let cfg = MusicalChairsConfig { exploration_steps: 2000, known_players: None };
    let runs = 200;
    let mut settled = 0;
    for r in 0..runs {
        let env = BernoulliEnvironment::new(vec![0.9, 0.1], 500 + r, true).unwrap();
        let players: Vec<Box<dyn Policy>> = (0..2)
            .map(|i| Box::new(MusicalChairs::new(2, 1000 * r + i, cfg, true).unwrap()) as Box<dyn Policy>)
            .collect();
        let mut run = StaticRun::new(env, players).unwrap();
        run.advance(5000).unwrap();
        // exploration is over, so a collision-free step settles both players
        let (choices, outcome) = run.last_step();
        if outcome.collided.iter().all(|c| !c) {
            settled += 1;
            let sitting = choices.to_vec();
            for _ in 0..100 {
                run.step().unwrap();
                assert_eq!(run.last_step().0, sitting.as_slice());
            }
        }
    }
    let frac = settled as f64 / runs as f64;
    assert!(frac >= 0.95, "{frac}");
}

proptest! {
    #[test]
    fn argmax_ignores_common_shift(
        scores in prop::collection::vec(-5.0f64..5.0, 1..12),
        shift in -3.0f64..3.0,
    ) {
        // shifts by dyadic constants are exact, so the ordering is preserved bit for bit
        let shift = (shift * 1024.0).round() / 1024.0;
        let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
        prop_assume!(scores.iter().zip(&shifted).all(|(a, b)| b - shift == *a));
        prop_assert_eq!(argmax_lowest(&scores), argmax_lowest(&shifted));
    }

    #[test]
    fn perturbed_argmax_ignores_common_shift(
        indices in prop::collection::vec(0.0f64..1.0, 2..10),
        seed in any::<u64>(),
        t in 1u64..1000,
        shift in 0i32..16,
    ) {
        let mut rng = stream_from_seed(seed);
        let z: Vec<f64> = indices.iter().map(|_| rng.sample(StandardNormal)).collect();
        let shifted: Vec<f64> = indices.iter().map(|b| b + shift as f64).collect();
        let a = perturbed_argmax(&indices, &z, t as f64);
        let b = perturbed_argmax(&shifted, &z, t as f64);
        // rounding may reorder scores closer than an ulp of the shifted value
        let scores: Vec<f64> = indices.iter().zip(&z).map(|(b, z)| b + z / t as f64).collect();
        prop_assert!(a == b || (scores[a] - scores[b]).abs() < 1e-13);
    }

    #[test]
    fn identical_states_choose_identically(counts in prop::collection::vec(0u64..50, 2..6), seed in any::<u64>()) {
        let sums: Vec<f64> = counts.iter().map(|&n| (n / 2) as f64).collect();
        let state = mpmab_core::policy::PlayerState::from_statistics(counts, sums, seed).unwrap();
        let mut a = mpmab_core::policy::SelfishKlUcb::from_state(state.clone(), 0.0, TieBreak::Lowest).unwrap();
        let mut b = mpmab_core::policy::SelfishKlUcb::from_state(state.clone(), 0.0, TieBreak::Lowest).unwrap();
        prop_assert_eq!(a.select(), b.select());
        let mut a = RandomizedSelfishKlUcb::from_state(state.clone(), 0.0).unwrap();
        let mut b = RandomizedSelfishKlUcb::from_state(state, 0.0).unwrap();
        prop_assert_eq!(a.select(), b.select());
    }
}
