use mpmab_core::kl::{bernoulli_kl, exploration_rate, klucb_index, KlSolverConfig};
use proptest::prelude::*;

fn grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| i as f64 / (points - 1) as f64).collect()
}

#[test]
fn divergence_vanishes_only_on_the_diagonal() {
    let g = grid(200);
    for &p in &g {
        assert_eq!(bernoulli_kl(p, p).unwrap(), 0.0);
        for &q in &g[1..199] {
            if p != q {
                assert!(bernoulli_kl(p, q).unwrap() > 0.0, "d({p}, {q})");
            }
        }
    }
}

#[test]
fn pinsker_lower_bound_on_grid() {
    let g = grid(200);
    for &p in &g {
        for &q in &g {
            let d = bernoulli_kl(p, q).unwrap();
            assert!(d >= 2.0 * (p - q) * (p - q), "d({p}, {q}) = {d}");
        }
    }
}

#[test]
fn divergence_increases_away_from_p() {
    let g = grid(200);
    for &p in &g {
        let right: Vec<f64> = g.iter().filter(|&&q| q >= p).map(|&q| bernoulli_kl(p, q).unwrap()).collect();
        assert!(right.windows(2).all(|w| w[0] <= w[1]), "p = {p}");
    }
}

#[test]
fn index_monotone_in_level_and_count() {
    let cfg = KlSolverConfig::default();
    let means = grid(21);
    let levels: Vec<f64> = (0..30).map(|i| 0.25 * i as f64).collect();
    let counts = [1u64, 2, 3, 5, 8, 13, 50, 200, 1000, 10_000];
    for &mu in &means {
        for &n in &counts {
            let along_f: Vec<f64> = levels.iter().map(|&f| klucb_index(mu, n, f, &cfg).unwrap()).collect();
            assert!(along_f.windows(2).all(|w| w[0] <= w[1]), "mu={mu} n={n}");
        }
        for &f in &levels {
            let along_n: Vec<f64> = counts.iter().map(|&n| klucb_index(mu, n, f, &cfg).unwrap()).collect();
            assert!(along_n.windows(2).all(|w| w[0] >= w[1]), "mu={mu} f={f}");
        }
    }
}

#[test]
fn exploration_rate_with_loglog_term() {
    // log 100 + 3 log log 100, 30-digit value
    let f = exploration_rate(100.0, 3.0).unwrap();
    assert!((f - 9.186_709_063_411_795).abs() < 1e-12, "{f}");
}

proptest! {
    #[test]
    fn index_bounds(mu in 0.0f64..=1.0, n in 0u64..100_000, f in 0.0f64..40.0) {
        let cfg = KlSolverConfig::default();
        let b = klucb_index(mu, n, f, &cfg).unwrap();
        prop_assert!(b >= mu);
        prop_assert!(b <= 1.0);
        if n == 0 || mu == 1.0 {
            prop_assert_eq!(b, 1.0);
        } else {
            prop_assert!(b < 1.0);
            // feasible, and infeasible just past the tolerance
            prop_assert!(n as f64 * bernoulli_kl(mu, b).unwrap() <= f * (1.0 + 1e-12) + 1e-15);
            let beyond = (b + 2.0 * cfg.tolerance()).min(1.0);
            prop_assert!(n as f64 * bernoulli_kl(mu, beyond).unwrap() > f);
        }
    }

    #[test]
    fn divergence_is_symmetric_under_reflection(p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
        let a = bernoulli_kl(p, q).unwrap();
        let b = bernoulli_kl(1.0 - p, 1.0 - q).unwrap();
        if a.is_finite() {
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        } else {
            prop_assert!(b.is_infinite());
        }
    }
}
